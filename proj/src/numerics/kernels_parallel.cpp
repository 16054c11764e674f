#include <algorithm>

#include <omp.h>

#include "sbl/numerics/kernels.hpp"

namespace sbl::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

bool worth_it(std::size_t work) { return work >= kParallelWork && omp_get_max_threads() > 1; }

// Contiguous [begin, end) slice of `n` items owned by the calling thread.
std::pair<std::size_t, std::size_t> thread_slice(std::size_t n) {
  const auto t = static_cast<std::size_t>(omp_get_thread_num());
  const auto nt = static_cast<std::size_t>(omp_get_num_threads());
  const std::size_t chunk = (n + nt - 1) / nt;
  const std::size_t begin = std::min(n, t * chunk);
  return {begin, std::min(n, begin + chunk)};
}

}  // namespace

void set_thread_count(int threads) { omp_set_num_threads(std::max(1, threads)); }

int thread_count() { return omp_get_max_threads(); }

namespace parallel {

void affine_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, AffineDims d) {
  const auto rows = static_cast<std::ptrdiff_t>(d.rows);
#pragma omp parallel for schedule(static) if (worth_it(d.rows * d.in * d.out))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
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
  const auto rows = static_cast<std::ptrdiff_t>(d.rows);
#pragma omp parallel for schedule(static) if (worth_it(d.rows * d.in * d.out))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
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

// Threads own disjoint rows of dw and all sweep the batch in the same order,
// so every dw element sees the serial summation order.
void affine_grad_weight(std::span<const double> x, std::span<const double> dout,
                        std::span<double> dw, AffineDims d) {
#pragma omp parallel if (worth_it(d.rows * d.in * d.out))
  {
    const auto [k0, k1] = thread_slice(d.in);
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* xr = x.data() + r * d.in;
      const double* g = dout.data() + r * d.out;
      for (std::size_t k = k0; k < k1; ++k) {
        const double xv = xr[k];
        double* dwk = dw.data() + k * d.out;
        for (std::size_t c = 0; c < d.out; ++c) dwk[c] += xv * g[c];
      }
    }
  }
}

void affine_grad_bias(std::span<const double> dout, std::span<double> db, AffineDims d) {
#pragma omp parallel if (worth_it(d.rows * d.out * 8))
  {
    const auto [c0, c1] = thread_slice(d.out);
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* g = dout.data() + r * d.out;
      for (std::size_t c = c0; c < c1; ++c) db[c] += g[c];
    }
  }
}

void segment_max(std::span<const double> x, std::span<const std::size_t> offsets,
                 std::size_t cols, std::span<double> out, std::span<std::size_t> argmax) {
  const auto groups = static_cast<std::ptrdiff_t>(offsets.size() - 1);
  const std::size_t total_rows = offsets.back() - offsets.front();
#pragma omp parallel for schedule(static) if (worth_it(total_rows * cols))
  for (std::ptrdiff_t g = 0; g < groups; ++g) {
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
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (worth_it(n * m * dim))
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
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

}  // namespace parallel
}  // namespace sbl::kernels
