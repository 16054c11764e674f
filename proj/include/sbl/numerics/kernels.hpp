#pragma once

// Dense inner loops used by the differentiable ops and by batched inference.
//
// Every kernel exists twice: `serial` is the plain reference loop nest and
// `parallel` distributes independent outputs over OpenMP threads. Each output
// element is accumulated in the same order by both, so results are bitwise
// identical for any thread count. Tests hold the two to that.

#include <cstddef>
#include <span>

namespace sbl::kernels {

// Sizes for an affine map: x is rows x in, w is in x out, out is rows x out.
struct AffineDims {
  std::size_t rows;
  std::size_t in;
  std::size_t out;
};

namespace serial {

// out = x * w + b
void affine_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, AffineDims dims);
// dx += dout * w^T
void affine_grad_input(std::span<const double> dout, std::span<const double> w,
                       std::span<double> dx, AffineDims dims);
// dw += x^T * dout
void affine_grad_weight(std::span<const double> x, std::span<const double> dout,
                        std::span<double> dw, AffineDims dims);
// db += column sums of dout
void affine_grad_bias(std::span<const double> dout, std::span<double> db, AffineDims dims);

// Column-wise max over each row segment [offsets[g], offsets[g+1]).
// argmax receives the first row attaining the maximum.
void segment_max(std::span<const double> x, std::span<const std::size_t> offsets,
                 std::size_t cols, std::span<double> out, std::span<std::size_t> argmax);

// out[i*m + j] = squared Euclidean distance between a row i and b row j.
void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> out,
                     std::size_t n, std::size_t m, std::size_t dim);

}  // namespace serial

namespace parallel {

void affine_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> out, AffineDims dims);
void affine_grad_input(std::span<const double> dout, std::span<const double> w,
                       std::span<double> dx, AffineDims dims);
void affine_grad_weight(std::span<const double> x, std::span<const double> dout,
                        std::span<double> dw, AffineDims dims);
void affine_grad_bias(std::span<const double> dout, std::span<double> db, AffineDims dims);
void segment_max(std::span<const double> x, std::span<const std::size_t> offsets,
                 std::size_t cols, std::span<double> out, std::span<std::size_t> argmax);
void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> out,
                     std::size_t n, std::size_t m, std::size_t dim);

}  // namespace parallel

void set_thread_count(int threads);
int thread_count();

}  // namespace sbl::kernels
