#include "sbl/numerics/optimizer.hpp"

#include <cmath>

#include "sbl/error.hpp"

namespace sbl {

Optimizer::Optimizer(OptimizerSpec spec) : spec_(std::move(spec)), lr_(spec_.learning_rate) {
  if (!(spec_.learning_rate > 0.0)) {
    fail(ErrorKind::config, "learning rate must be positive, got " +
                                std::to_string(spec_.learning_rate));
  }
  if (spec_.weight_decay < 0.0) fail(ErrorKind::config, "weight penalty must be nonnegative");
  for (const auto& m : spec_.schedule) {
    if (!(m.multiplier > 0.0)) fail(ErrorKind::config, "schedule multipliers must be positive");
  }
}

void Optimizer::set_epoch(int epoch) {
  lr_ = spec_.learning_rate;
  for (const auto& m : spec_.schedule) {
    if (epoch >= m.epoch) lr_ *= m.multiplier;
  }
}

void Optimizer::step(ParameterSet& params) {
  auto& items = params.items();
  if (first_.empty()) {
    for (const auto& p : items) {
      first_.emplace_back(p.var.value().shape(), 0.0);
      if (spec_.kind == OptimizerKind::adam) second_.emplace_back(p.var.value().shape(), 0.0);
    }
  }
  if (first_.size() != items.size()) {
    fail(ErrorKind::config, "optimizer was built for a different parameter set");
  }
  ++step_count_;

  const double wd = spec_.weight_decay;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(spec_.beta1, t);
  const double bc2 = 1.0 - std::pow(spec_.beta2, t);

  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor& value = items[i].var.mutable_value();
    const Tensor& grad = items[i].var.grad();
    if (grad.shape() != value.shape()) {
      fail(ErrorKind::dimension, "gradient " + grad.shape_str() + " does not match parameter " +
                                     items[i].name + " " + value.shape_str());
    }
    Tensor& m = first_[i];
    if (spec_.kind == OptimizerKind::sgd) {
      for (std::size_t k = 0; k < value.numel(); ++k) {
        const double g = grad[k] + wd * value[k];
        m[k] = spec_.momentum * m[k] + g;
        value[k] -= lr_ * m[k];
      }
    } else {
      Tensor& v = second_[i];
      for (std::size_t k = 0; k < value.numel(); ++k) {
        const double g = grad[k] + wd * value[k];
        m[k] = spec_.beta1 * m[k] + (1.0 - spec_.beta1) * g;
        v[k] = spec_.beta2 * v[k] + (1.0 - spec_.beta2) * g * g;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        value[k] -= lr_ * mhat / (std::sqrt(vhat) + spec_.epsilon);
      }
    }
  }
}

}  // namespace sbl
