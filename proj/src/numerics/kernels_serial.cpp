#include "sbl/numerics/kernels.hpp"

namespace sbl::kernels::serial {

void affine_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, AffineDims d) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    double* o = out.data() + r * d.out;
    for (std::size_t c = 0; c < d.out; ++c) o[c] = b[c];
    const double* xr = x.data() + r * d.in;
    for (std::size_t k = 0; k < d.in; ++k) {
      const double xv = xr[k];
      const double* wk = w.data() + k * d.out;
      for (std::size_t c = 0; c < d.out; ++c) o[c] += xv * wk[c];
    }
  }
}

void affine_grad_input(std::span<const double> dout, std::span<const double> w,
                       std::span<double> dx, AffineDims d) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* g = dout.data() + r * d.out;
    double* dxr = dx.data() + r * d.in;
    for (std::size_t k = 0; k < d.in; ++k) {
      const double* wk = w.data() + k * d.out;
      double acc = 0.0;
      for (std::size_t c = 0; c < d.out; ++c) acc += g[c] * wk[c];
      dxr[k] += acc;
    }
  }
}

void affine_grad_weight(std::span<const double> x, std::span<const double> dout,
                        std::span<double> dw, AffineDims d) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* xr = x.data() + r * d.in;
    const double* g = dout.data() + r * d.out;
    for (std::size_t k = 0; k < d.in; ++k) {
      const double xv = xr[k];
      double* dwk = dw.data() + k * d.out;
      for (std::size_t c = 0; c < d.out; ++c) dwk[c] += xv * g[c];
    }
  }
}

void affine_grad_bias(std::span<const double> dout, std::span<double> db, AffineDims d) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* g = dout.data() + r * d.out;
    for (std::size_t c = 0; c < d.out; ++c) db[c] += g[c];
  }
}

void segment_max(std::span<const double> x, std::span<const std::size_t> offsets,
                 std::size_t cols, std::span<double> out, std::span<std::size_t> argmax) {
  const std::size_t groups = offsets.size() - 1;
  for (std::size_t g = 0; g < groups; ++g) {
    double* o = out.data() + g * cols;
    std::size_t* a = argmax.data() + g * cols;
    const std::size_t first = offsets[g];
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = x[first * cols + c];
      a[c] = first;
    }
    for (std::size_t r = first + 1; r < offsets[g + 1]; ++r) {
      const double* xr = x.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        if (xr[c] > o[c]) {
          o[c] = xr[c];
          a[c] = r;
        }
      }
    }
  }
}

void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> out,
                     std::size_t n, std::size_t m, std::size_t dim) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * dim;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = ai[k] - bj[k];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  }
}

}  // namespace sbl::kernels::serial
