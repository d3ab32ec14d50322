#pragma once

#include <array>
#include <string>
#include <vector>

#include "handeye/common.hpp"

namespace handeye {

inline constexpr int kHiddenUnits = 25;

// Single-layer LSTM followed by an affine readout of the final hidden state.
//
// Gate rows are stacked in the order input, forget, candidate, output; each
// block is hidden_size rows tall.
struct LstmParams {
  Eigen::MatrixXd w_input;      // 4H x I
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd bias;         // 4H
  Eigen::MatrixXd w_dense;      // O x H
  Eigen::VectorXd b_dense;      // O

  int input_size() const { return static_cast<int>(w_input.cols()); }
  int hidden_size() const { return static_cast<int>(w_recurrent.cols()); }
  int output_size() const { return static_cast<int>(w_dense.rows()); }
  Eigen::Index parameter_count() const;

  static LstmParams zeros(int input, int hidden, int output);
  // Uniform in +-1/sqrt(fan_in) per matrix; forget-gate bias 1, other biases 0.
  static LstmParams initialized(int input, int hidden, int output, Rng& rng);

  // Flat views over the five parameter blocks, in serialization order.
  std::array<Eigen::Map<Eigen::VectorXd>, 5> blocks();
  std::array<Eigen::Map<const Eigen::VectorXd>, 5> blocks() const;

  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;

  // Binary layout: "HEYELSTM", u32 version, u32 input, u32 hidden, u32 output,
  // then little-endian f64 values of w_input, w_recurrent, bias, w_dense,
  // b_dense, matrices row-major.
  void write(const std::string& path) const;
  static LstmParams read(const std::string& path);
};

// Sequence batch in time-major layout: steps[t] is input_size x batch.
using SequenceBatch = std::vector<Eigen::MatrixXd>;

struct ForwardCache {
  SequenceBatch inputs;
  std::vector<Eigen::MatrixXd> gates;  // activated, 4H x B per step
  std::vector<Eigen::MatrixXd> cells;  // H x B per step
  std::vector<Eigen::MatrixXd> tanh_cells;
  std::vector<Eigen::MatrixXd> hidden;  // H x B per step
  Eigen::MatrixXd output;               // O x B

  const Eigen::MatrixXd& final_hidden() const { return hidden.back(); }
};

// Runs the recurrence from h0 = c0 = 0 and applies the dense head.
// Throws NumericInput for an empty or non-finite sequence.
ForwardCache lstm_forward(const SequenceBatch& steps, const LstmParams& params);

// Single sequence given as an L x I matrix (one frame per row).
ForwardCache lstm_forward(const Eigen::MatrixXd& sequence, const LstmParams& params);

// Affine readout; no output nonlinearity.
Eigen::MatrixXd predict_head(const Eigen::MatrixXd& hidden, const LstmParams& params);

// Mean of squared differences over every entry.
double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

// Exact gradient of mse_loss(cache.output, targets) by backpropagation
// through time. `targets` is O x B.
LstmParams backward(const ForwardCache& cache, const Eigen::MatrixXd& targets,
                    const LstmParams& params);

// Rescales `grads` in place when their global L2 norm exceeds `max_norm`.
// Returns the norm before clipping.
double clip_gradient_norm(LstmParams& grads, double max_norm);

struct AdamState {
  LstmParams first_moment;
  LstmParams second_moment;
  long step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const LstmParams& params, double learning_rate = 1e-4);
};

// One bias-corrected Adam update.
void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state);

// Largest relative disagreement between `backward` and central differences
// of the loss, over every parameter. The denominator is floored at 1e-6 so
// entries with vanishing gradient are compared absolutely.
double gradient_check(const LstmParams& params, const SequenceBatch& steps,
                      const Eigen::MatrixXd& targets, double epsilon = 1e-5);

}  // namespace handeye
