#include "sbl/training/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sbl/error.hpp"
#include "sbl/numerics/ops.hpp"

namespace sbl::training {

namespace {

void check_pair(const Tensor& phi_i, const Tensor& phi_p) {
  if (phi_i.rank() != 2 || phi_i.shape() != phi_p.shape()) {
    fail(ErrorKind::dimension, "image embeddings " + phi_i.shape_str() +
                                   " do not match shape embeddings " + phi_p.shape_str());
  }
  if (phi_i.rows() == 0) fail(ErrorKind::empty_set, "alignment loss over an empty batch");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace

Var loss_align_l1(const Var& phi_i, const Tensor& phi_p) {
  const Tensor& xi = phi_i.value();
  check_pair(xi, phi_p);
  const std::size_t batch = xi.rows();
  double loss = 0.0;
  for (std::size_t k = 0; k < batch; ++k) loss += squared_distance(xi.row(k), phi_p.row(k));
  loss /= static_cast<double>(batch);
  return make_op(Tensor({1}, {loss}), {phi_i}, [target = phi_p](Node& self) {
    const Tensor& x = self.parents[0]->value;
    auto& dx = self.parents[0]->grad_buffer();
    const double scale = 2.0 * self.grad[0] / static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.numel(); ++i) dx[i] += scale * (x[i] - target[i]);
  });
}

Var loss_align_pairwise(const Var& phi_i, const Tensor& phi_p) {
  const Tensor& xi = phi_i.value();
  check_pair(xi, phi_p);
  const std::size_t batch = xi.rows();
  if (batch < 2) {
    fail(ErrorKind::empty_set, "pairwise loss needs at least 2 rows, got " + std::to_string(batch));
  }
  const double pairs = static_cast<double>(batch * (batch - 1) / 2);
  // residual[k*B + l] = d_i(k,l) - d_p(k,l) for k < l.
  std::vector<double> residual(batch * batch, 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k < batch; ++k) {
    for (std::size_t l = k + 1; l < batch; ++l) {
      const double r = squared_distance(xi.row(k), xi.row(l)) -
                       squared_distance(phi_p.row(k), phi_p.row(l));
      residual[k * batch + l] = r;
      loss += r * r;
    }
  }
  loss /= pairs;
  return make_op(Tensor({1}, {loss}), {phi_i},
                 [residual = std::move(residual), pairs](Node& self) {
                   const Tensor& x = self.parents[0]->value;
                   auto& dx = self.parents[0]->grad_buffer();
                   const std::size_t batch = x.rows(), cols = x.cols();
                   // d/dx_k of r^2 with r = |x_k - x_l|^2 - const is 4 r (x_k - x_l).
                   const double scale = 4.0 * self.grad[0] / pairs;
                   for (std::size_t k = 0; k < batch; ++k) {
                     for (std::size_t l = k + 1; l < batch; ++l) {
                       const double w = scale * residual[k * batch + l];
                       for (std::size_t c = 0; c < cols; ++c) {
                         const double diff = w * (x.at(k, c) - x.at(l, c));
                         dx.at(k, c) += diff;
                         dx.at(l, c) -= diff;
                       }
                     }
                   }
                 });
}

Var loss_align(const Var& phi_i, const Tensor& phi_p, double w1, double w2) {
  if (w1 < 0.0 || w2 < 0.0) fail(ErrorKind::config, "loss weights must be nonnegative");
  const Var l1 = loss_align_l1(phi_i, phi_p);
  if (w2 == 0.0) return weighted_sum(l1, w1, l1, 0.0);
  return weighted_sum(l1, w1, loss_align_pairwise(phi_i, phi_p), w2);
}

Var loss_triplet(const Var& anchor, const Var& positive, const Var& negative, double margin) {
  if (!(margin >= 0.0)) fail(ErrorKind::config, "triplet margin must be nonnegative");
  const Shape& s = anchor.value().shape();
  if (s.size() != 2 || positive.value().shape() != s || negative.value().shape() != s) {
    fail(ErrorKind::dimension, "triplet inputs must share one [B x d] shape, got " +
                                   anchor.value().shape_str() + ", " +
                                   positive.value().shape_str() + ", " +
                                   negative.value().shape_str());
  }
  if (s[0] == 0) fail(ErrorKind::empty_set, "triplet loss over an empty batch");
  const Var a = l2_normalize(anchor);
  const Var p = l2_normalize(positive);
  const Var n = l2_normalize(negative);
  const Tensor& av = a.value();
  const Tensor& pv = p.value();
  const Tensor& nv = n.value();
  const std::size_t batch = s[0];
  std::vector<std::uint8_t> active(batch);
  std::vector<double> d_ap(batch), d_pn(batch);
  double loss = 0.0;
  for (std::size_t k = 0; k < batch; ++k) {
    d_ap[k] = distance(av.row(k), pv.row(k));
    d_pn[k] = distance(pv.row(k), nv.row(k));
    const double h = d_ap[k] - d_pn[k] + margin;
    active[k] = h > 0.0;
    if (active[k]) loss += h;
  }
  KinkRecorder::record(active);
  loss /= static_cast<double>(batch);
  return make_op(
      Tensor({1}, {loss}), {a, p, n},
      [active = std::move(active), d_ap = std::move(d_ap), d_pn = std::move(d_pn)](Node& self) {
        const Tensor& av = self.parents[0]->value;
        const Tensor& pv = self.parents[1]->value;
        const Tensor& nv = self.parents[2]->value;
        auto& da = self.parents[0]->grad_buffer();
        auto& dp = self.parents[1]->grad_buffer();
        auto& dn = self.parents[2]->grad_buffer();
        const double scale = self.grad[0] / static_cast<double>(av.rows());
        for (std::size_t k = 0; k < av.rows(); ++k) {
          if (!active[k]) continue;
          // A zero distance has no direction; its subgradient is taken as 0.
          const double wa = d_ap[k] > 0.0 ? scale / d_ap[k] : 0.0;
          const double wn = d_pn[k] > 0.0 ? scale / d_pn[k] : 0.0;
          for (std::size_t c = 0; c < av.cols(); ++c) {
            const double u = wa * (av.at(k, c) - pv.at(k, c));
            const double v = wn * (pv.at(k, c) - nv.at(k, c));
            da.at(k, c) += u;
            dp.at(k, c) += -u - v;
            dn.at(k, c) += v;
          }
        }
      });
}

}  // namespace sbl::training
