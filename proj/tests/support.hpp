#pragma once

#include <vector>

#include "handeye/ensemble.hpp"
#include "handeye/pipeline.hpp"

namespace handeye::testing {

inline std::vector<FeaturizedTrial> small_dataset(int subjects, int trials_per_subject,
                                                  std::uint64_t seed, bool noiseless) {
  RunConfig config;
  config.seed = seed;
  config.subjects = subjects;
  config.trials_per_subject = trials_per_subject;
  config.noiseless = noiseless;
  config.workers = 1;
  const auto trials = simulate_population(config);
  auto featurized = featurize_all(trials, config.trajectory.ball_radius);
  split_dataset(featurized, seed);
  return featurized;
}

}  // namespace handeye::testing
