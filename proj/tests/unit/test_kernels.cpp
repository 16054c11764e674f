// Serial and OpenMP kernels must agree bit for bit at every thread count.

#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sbl/numerics/kernels.hpp"

using namespace sbl::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class KernelThreads : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { set_thread_count(GetParam()); }
  void TearDown() override { set_thread_count(1); }
};

}  // namespace

TEST_P(KernelThreads, AffineForwardAndBackwardMatchSerial) {
  std::mt19937_64 rng(7);
  // Large enough to cross the parallel threshold.
  const AffineDims d{257, 33, 65};
  const auto x = random_values(d.rows * d.in, rng);
  const auto w = random_values(d.in * d.out, rng);
  const auto b = random_values(d.out, rng);
  const auto g = random_values(d.rows * d.out, rng);

  std::vector<double> out_s(d.rows * d.out), out_p(d.rows * d.out);
  serial::affine_forward(x, w, b, out_s, d);
  parallel::affine_forward(x, w, b, out_p, d);
  EXPECT_TRUE(bitwise_equal(out_s, out_p));

  std::vector<double> dx_s(x.size(), 0.5), dx_p(x.size(), 0.5);
  serial::affine_grad_input(g, w, dx_s, d);
  parallel::affine_grad_input(g, w, dx_p, d);
  EXPECT_TRUE(bitwise_equal(dx_s, dx_p));

  std::vector<double> dw_s(w.size(), 0.25), dw_p(w.size(), 0.25);
  serial::affine_grad_weight(x, g, dw_s, d);
  parallel::affine_grad_weight(x, g, dw_p, d);
  EXPECT_TRUE(bitwise_equal(dw_s, dw_p));

  std::vector<double> db_s(b.size(), 0.0), db_p(b.size(), 0.0);
  serial::affine_grad_bias(g, db_s, d);
  parallel::affine_grad_bias(g, db_p, d);
  EXPECT_TRUE(bitwise_equal(db_s, db_p));
}

TEST_P(KernelThreads, SegmentMaxMatchesSerial) {
  std::mt19937_64 rng(11);
  const std::size_t cols = 40;
  const std::vector<std::size_t> offsets{0, 300, 301, 700, 1024};
  const auto x = random_values(offsets.back() * cols, rng);
  const std::size_t groups = offsets.size() - 1;
  std::vector<double> out_s(groups * cols), out_p(groups * cols);
  std::vector<std::size_t> arg_s(groups * cols), arg_p(groups * cols);
  serial::segment_max(x, offsets, cols, out_s, arg_s);
  parallel::segment_max(x, offsets, cols, out_p, arg_p);
  EXPECT_TRUE(bitwise_equal(out_s, out_p));
  EXPECT_EQ(arg_s, arg_p);
}

TEST_P(KernelThreads, PairwiseDistanceMatchesSerial) {
  std::mt19937_64 rng(3);
  const std::size_t n = 90, m = 70, dim = 64;
  const auto a = random_values(n * dim, rng);
  const auto b = random_values(m * dim, rng);
  std::vector<double> s(n * m), p(n * m);
  serial::pairwise_sqdist(a, b, s, n, m, dim);
  parallel::pairwise_sqdist(a, b, p, n, m, dim);
  EXPECT_TRUE(bitwise_equal(s, p));
}

INSTANTIATE_TEST_SUITE_P(ThreadCounts, KernelThreads, ::testing::Values(1, 2, 3, 8));

TEST(Kernels, AffineForwardSmallCase) {
  const std::vector<double> x{1, 1};
  const std::vector<double> w{2, 3};
  const std::vector<double> b{1};
  std::vector<double> out(1);
  serial::affine_forward(x, w, b, out, {1, 2, 1});
  EXPECT_EQ(out[0], 6.0);
}

TEST(Kernels, SegmentMaxTieGoesToFirstRow) {
  const std::vector<double> x{2, 1, 2, 5};
  const std::vector<std::size_t> offsets{0, 2};
  std::vector<double> out(2);
  std::vector<std::size_t> arg(2);
  serial::segment_max(x, offsets, 2, out, arg);
  EXPECT_EQ(arg[0], 0u);
  EXPECT_EQ(arg[1], 1u);
}
