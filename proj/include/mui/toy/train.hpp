#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mui/toy/suites.hpp"
#include "mui/toy/toy_model.hpp"

namespace mui::toy {

struct TrainOptions {
  std::size_t steps = 2000;
  double lr = 0.1;
  double momentum = 0.9;
  std::size_t batch = 16;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_history;  // mean batch loss per step
};

// Minibatch SGD with heavy-ball momentum on the cross-entropy of reference
// tokens (and the terminating EOS). Items are drawn uniformly from all suites.
// Throws ErrorCode::kDivergence on a non-finite loss.
TrainResult train_on_suites(const ToyModel& model, std::span<const TaskSuite> suites, const TrainOptions& options);
TrainResult train_on_suite(const ToyModel& model, const TaskSuite& suite, const TrainOptions& options);

// Mean per-token cross-entropy over the suite's reference tokens.
double suite_loss(const ToyModel& model, const TaskSuite& suite);

// Gradient of the summed token cross-entropy of one sequence; exposed for
// finite-difference checks. `targets[t] < 0` skips position t.
double sequence_loss_and_grad(const ToyModel& model, std::span<const std::uint32_t> inputs,
                              std::span<const std::int64_t> targets, ToyModel* grad);

ToyModel zeros_like(const ToyModel& model);

}  // namespace mui::toy
