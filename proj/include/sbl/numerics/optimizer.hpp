#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sbl/numerics/parameters.hpp"

namespace sbl {

enum class OptimizerKind { sgd, adam };

struct LrMilestone {
  int epoch;          // multiplier applies from this epoch on (1-based)
  double multiplier;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-4;
  double momentum = 0.0;     // sgd only
  double beta1 = 0.9;        // adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0; // L2 penalty added to the gradient
  std::vector<LrMilestone> schedule;
};

/// SGD with heavy-ball momentum or bias-corrected Adam, both with a coupled L2
/// weight penalty and a step schedule keyed on epoch number.
///
/// SGD:  g' = g + wd*p;  buf = momentum*buf + g';  p -= lr*buf
/// Adam: g' = g + wd*p;  m, v moments of g';  p -= lr*m_hat/(sqrt(v_hat)+eps)
class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec);

  // Applies one update to every parameter from its accumulated gradient.
  void step(ParameterSet& params);

  // Sets the current learning rate from the schedule for a 1-based epoch.
  void set_epoch(int epoch);

  double learning_rate() const { return lr_; }
  std::size_t step_count() const { return step_count_; }
  const OptimizerSpec& spec() const { return spec_; }

 private:
  OptimizerSpec spec_;
  double lr_;
  std::size_t step_count_ = 0;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
};

}  // namespace sbl
