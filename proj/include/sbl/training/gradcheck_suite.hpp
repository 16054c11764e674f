#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sbl::training {

struct GradCheckCase {
  std::string name;
  int instantiations = 0;
  double max_rel_error = 0.0;
  std::size_t checked = 0;        // coordinates compared, over all instantiations
  std::size_t skipped_kinks = 0;
  bool passed = false;            // max_rel_error < tolerance and something was checked
};

/// Gradient checks for every differentiable op and the three training
/// objectives (cross-entropy through f_p and its head, w1*L1 + w2*L2 through
/// f_i, triplet through f_p and f_i), each on `instantiations` random inputs.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed, int instantiations = 5,
                                               double tolerance = 1e-4);

}  // namespace sbl::training
