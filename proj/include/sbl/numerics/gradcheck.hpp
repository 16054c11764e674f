#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sbl/numerics/autograd.hpp"

namespace sbl {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +-eps probes changed a relu mask or max-pool argmax.
  // Central differences straddle a kink there and are not comparable.
  std::size_t skipped_kinks = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences, coordinate by coordinate over every tensor in `points`.
///
/// `f` must rebuild its graph from the current values of `points` on each
/// call. The error per coordinate is |a - n| / max(1, |a|, |n|). eps must lie
/// in [1e-6, 1e-3]; a non-finite probe value is a numeric error.
GradCheckReport grad_check(const std::function<Var()>& f, const std::vector<Var>& points,
                           double eps = 1e-4);

}  // namespace sbl
