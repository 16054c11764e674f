#pragma once

#include "sbl/numerics/autograd.hpp"

namespace sbl::training {

/// Mean over the batch of ||phi_i[k] - phi_p[k]||^2. phi_p is a frozen target,
/// so the gradient reaches phi_i only. Shapes must match; the batch must be
/// nonempty.
Var loss_align_l1(const Var& phi_i, const Tensor& phi_p);

/// Mean over unordered pairs k < l of (d_p(k,l) - d_i(k,l))^2, with d the
/// squared Euclidean distance inside each embedding set. Needs two rows.
Var loss_align_pairwise(const Var& phi_i, const Tensor& phi_p);

/// w1 * L1 + w2 * L2. With w2 = 0 the pairwise term is skipped, so a single
/// row is accepted.
Var loss_align(const Var& phi_i, const Tensor& phi_p, double w1, double w2);

/// Rows are L2-normalized, then the mean over rows of
/// max(||a - p|| - ||p - n|| + margin, 0) with plain Euclidean distances.
/// A zero row is a degenerate error; margin must be nonnegative.
Var loss_triplet(const Var& anchor, const Var& positive, const Var& negative, double margin);

}  // namespace sbl::training
