#include "sbl/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbl/error.hpp"
#include "sbl/numerics/kernels.hpp"

namespace sbl {

Var affine(const Var& x, const Var& W, const Var& b) {
  const Tensor& xv = x.value();
  const Tensor& wv = W.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.shape()[1] != wv.shape()[0] ||
      bv.shape()[0] != wv.shape()[1]) {
    fail(ErrorKind::dimension, "affine cannot combine x " + xv.shape_str() + " with W " +
                                   wv.shape_str() + " and b " + bv.shape_str());
  }
  const kernels::AffineDims dims{xv.shape()[0], wv.shape()[0], wv.shape()[1]};
  Tensor out({dims.rows, dims.out});
  kernels::parallel::affine_forward(xv.data(), wv.data(), bv.data(), out.data(), dims);

  return make_op(std::move(out), {x, W, b}, [dims](Node& self) {
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    Node& bn = *self.parents[2];
    const auto g = self.grad.data();
    if (xn.requires_grad) {
      kernels::parallel::affine_grad_input(g, wn.value.data(), xn.grad_buffer().data(), dims);
    }
    if (wn.requires_grad) {
      kernels::parallel::affine_grad_weight(xn.value.data(), g, wn.grad_buffer().data(), dims);
    }
    if (bn.requires_grad) kernels::parallel::affine_grad_bias(g, bn.grad_buffer().data(), dims);
  });
}

Var relu(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  std::vector<std::uint8_t> mask(xv.numel());
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    mask[i] = xv[i] > 0.0;
    out[i] = mask[i] ? xv[i] : 0.0;
  }
  KinkRecorder::record(mask);
  return make_op(std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    Node& xn = *self.parents[0];
    auto& dx = xn.grad_buffer();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) dx[i] += self.grad[i];
    }
  });
}

Var segment_max_pool(const Var& x, std::span<const std::size_t> offsets) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) fail(ErrorKind::dimension, "set pooling needs a matrix, got " + xv.shape_str());
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != xv.rows()) {
    fail(ErrorKind::dimension, "set offsets do not cover the " + std::to_string(xv.rows()) +
                                   " input rows");
  }
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    if (offsets[g + 1] <= offsets[g]) {
      fail(ErrorKind::empty_set, "set " + std::to_string(g) + " has no rows to pool");
    }
  }
  const std::size_t groups = offsets.size() - 1;
  const std::size_t cols = xv.cols();
  Tensor out({groups, cols});
  std::vector<std::size_t> argmax(groups * cols);
  kernels::parallel::segment_max(xv.data(), offsets, cols, out.data(), argmax);
  KinkRecorder::record(argmax);
  return make_op(std::move(out), {x}, [argmax = std::move(argmax), cols](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i] * cols + i % cols] += self.grad[i];
  });
}

Var set_max_pool(const Var& x) {
  if (x.value().empty()) fail(ErrorKind::empty_set, "set_max_pool over zero rows");
  if (x.value().rank() != 2) {
    fail(ErrorKind::dimension, "set_max_pool needs [N x D], got " + x.value().shape_str());
  }
  const std::size_t n = x.value().shape()[0];
  const std::size_t offsets[] = {0, n};
  return reshape(segment_max_pool(x, offsets), {x.value().shape()[1]});
}

Var l2_normalize(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1 && xv.rank() != 2) {
    fail(ErrorKind::dimension, "l2_normalize takes a vector or matrix, got " + xv.shape_str());
  }
  const std::size_t rows = xv.rows();
  const std::size_t cols = xv.cols();
  Tensor out(xv.shape());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (double v : xv.row(r)) ss += v * v;
    if (!(ss > 0.0)) {
      fail(ErrorKind::degenerate, "cannot normalize a zero vector (row " + std::to_string(r) + ")");
    }
    norms[r] = std::sqrt(ss);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = xv.at(r, c) / norms[r];
  }
  Tensor y = out;
  return make_op(std::move(out), {x}, [y = std::move(y), norms = std::move(norms)](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    const std::size_t cols = y.cols();
    for (std::size_t r = 0; r < norms.size(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y.at(r, c) * self.grad.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) {
        dx.at(r, c) += (self.grad.at(r, c) - y.at(r, c) * dot) / norms[r];
      }
    }
  });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2) fail(ErrorKind::dimension, "logits must be [B x C], got " + lv.shape_str());
  const std::size_t batch = lv.shape()[0];
  const std::size_t classes = lv.shape()[1];
  if (labels.size() != batch) {
    fail(ErrorKind::dimension, std::to_string(labels.size()) + " labels for logits " +
                                   lv.shape_str());
  }
  Tensor probs(lv.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      fail(ErrorKind::label, "label " + std::to_string(label) + " outside [0, " +
                                 std::to_string(classes) + ")");
    }
    const auto row = lv.row(r);
    const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const double peak = row[top];
    // z = 1 + rest; log1p keeps precision when the top class dominates.
    double rest = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs.at(r, c) = std::exp(row[c] - peak);
      if (c != top) rest += probs.at(r, c);
    }
    const double z = 1.0 + rest;
    for (std::size_t c = 0; c < classes; ++c) probs.at(r, c) /= z;
    loss += std::log1p(rest) - (row[label] - peak);
  }
  loss /= static_cast<double>(batch);
  std::vector<int> kept(labels.begin(), labels.end());
  return make_op(Tensor({1}, {loss}), {logits},
                 [probs = std::move(probs), kept = std::move(kept)](Node& self) {
                   auto& dl = self.parents[0]->grad_buffer();
                   const double scale = self.grad[0] / static_cast<double>(kept.size());
                   for (std::size_t r = 0; r < kept.size(); ++r) {
                     for (std::size_t c = 0; c < probs.cols(); ++c) {
                       const double onehot = static_cast<int>(c) == kept[r] ? 1.0 : 0.0;
                       dl.at(r, c) += scale * (probs.at(r, c) - onehot);
                     }
                   }
                 });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_numel(shape) != x.value().numel()) {
    fail(ErrorKind::dimension, "cannot reshape " + x.value().shape_str() + " to " +
                                   shape_to_string(shape));
  }
  Tensor out(std::move(shape), x.value().values());
  return make_op(std::move(out), {x}, [](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += self.grad[i];
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) fail(ErrorKind::dimension, "gather_rows needs a matrix, got " + xv.shape_str());
  const std::size_t cols = xv.cols();
  Tensor out({rows.size(), cols});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= xv.rows()) {
      fail(ErrorKind::dimension, "row " + std::to_string(rows[k]) + " outside " + xv.shape_str());
    }
    std::copy_n(xv.row(rows[k]).begin(), cols, out.row(k).begin());
  }
  std::vector<std::size_t> kept(rows.begin(), rows.end());
  return make_op(std::move(out), {x}, [kept = std::move(kept)](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t k = 0; k < kept.size(); ++k) {
      for (std::size_t c = 0; c < dx.cols(); ++c) dx.at(kept[k], c) += self.grad.at(k, c);
    }
  });
}

Var weighted_sum(const Var& x, double a, const Var& y, double b) {
  if (x.value().numel() != 1 || y.value().numel() != 1) {
    fail(ErrorKind::dimension, "weighted_sum takes scalars, got " + x.value().shape_str() + " and " +
                                   y.value().shape_str());
  }
  return make_op(Tensor({1}, {a * x.value()[0] + b * y.value()[0]}), {x, y}, [a, b](Node& self) {
    self.parents[0]->grad_buffer()[0] += a * self.grad[0];
    self.parents[1]->grad_buffer()[0] += b * self.grad[0];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make_op(Tensor({1}, {s}), {x}, [](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += self.grad[0];
  });
}

Var sum_squares(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v * v;
  return make_op(Tensor({1}, {s}), {x}, [](Node& self) {
    Node& xn = *self.parents[0];
    auto& dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += 2.0 * xn.value[i] * self.grad[0];
  });
}

}  // namespace sbl
