#pragma once

#include <span>

#include "sbl/numerics/autograd.hpp"

namespace sbl {

/// x[B x I] * W[I x O] + b[O]. Dimension error names both shapes on mismatch.
Var affine(const Var& x, const Var& W, const Var& b);

/// Elementwise max(x, 0). Gradient passes where x > 0.
Var relu(const Var& x);

/// Column-wise max over the rows of x[N x D], giving shape [D]. The gradient
/// of each column goes to the first (lowest index) row attaining the max.
Var set_max_pool(const Var& x);

/// Batched set_max_pool: rows [offsets[g], offsets[g+1]) of x form set g.
/// Returns [G x D] with G = offsets.size() - 1. Sets may differ in size but
/// none may be empty.
Var segment_max_pool(const Var& x, std::span<const std::size_t> offsets);

/// x / ||x||_2. Rank-1 input is one vector; rank-2 input is normalized row by
/// row. A zero vector is a degenerate-input error.
Var l2_normalize(const Var& x);

/// Mean over the batch of -log softmax(logits)[label]. Result has shape [1].
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

Var reshape(const Var& x, Shape shape);

/// Rows of x[N x D] picked by index, [K x D]. Repeated indices accumulate
/// their gradients.
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

/// a*x + b*y for scalars (shape [1]) x and y.
Var weighted_sum(const Var& x, double a, const Var& y, double b);

// Scalar reductions, mainly for tests and gradient checks.
Var sum(const Var& x);
Var sum_squares(const Var& x);

}  // namespace sbl
