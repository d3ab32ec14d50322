#pragma once

#include <span>
#include <string>
#include <vector>

#include "handeye/features.hpp"

namespace handeye {

// Anything that maps a normalized pre-blank window to a normalized motor
// state at a given horizon: the LSTM ensemble and both baselines.
class HorizonPredictor {
 public:
  virtual ~HorizonPredictor() = default;

  virtual std::string label() const = 0;
  virtual double integration_ms() const = 0;
  virtual std::vector<int> horizons() const = 0;

  // 8 x N predictions for N normalized windows.
  virtual Eigen::MatrixXd predict_batch(std::span<const WindowSample> windows,
                                        int horizon_frames) const = 0;

  Eigen::VectorXd predict(const WindowSample& window, int horizon_frames) const {
    return predict_batch(std::span(&window, 1), horizon_frames).col(0);
  }
};

}  // namespace handeye
