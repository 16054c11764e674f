#pragma once

// Test-only helpers. The finite-difference oracle here is deliberately separate
// from sbl::grad_check so op gradients are checked by code that shares nothing
// with the library's backward paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "sbl/numerics/autograd.hpp"
#include "sbl/numerics/tensor.hpp"

namespace sbl::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Central-difference gradient of scalar f with respect to the value of `x`.
inline Tensor fd_gradient(const std::function<double()>& f, Var x, double eps = 1e-5) {
  Tensor& value = x.mutable_value();
  Tensor out(value.shape());
  for (std::size_t i = 0; i < value.numel(); ++i) {
    const double saved = value[i];
    value[i] = saved + eps;
    const double up = f();
    value[i] = saved - eps;
    const double down = f();
    value[i] = saved;
    out[i] = (up - down) / (2.0 * eps);
  }
  return out;
}

inline double max_rel_error(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace sbl::testing
