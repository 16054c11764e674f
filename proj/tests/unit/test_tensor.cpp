#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "sbl/error.hpp"
#include "sbl/numerics/tensor.hpp"

using namespace sbl;

TEST(Tensor, ShapeAndDataAgree) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.shape_str(), "[2x3]");
  t.at(1, 2) = 4.0;
  EXPECT_EQ(t[5], 4.0);
}

TEST(Tensor, RankOneReadsAsSingleRow) {
  const Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 3u);
  EXPECT_EQ(v.row(0)[2], 3.0);
}

TEST(Tensor, MismatchedDataIsDimensionError) {
  try {
    Tensor({2, 2}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Tensor, ZeroExtentRejected) {
  EXPECT_THROW(Tensor({0, 3}), Error);
}

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::vector({1, 2});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}
