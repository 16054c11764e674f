#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sbl/error.hpp"
#include "sbl/numerics/optimizer.hpp"
#include "test_support.hpp"

using namespace sbl;

namespace {

// Writes a fixed gradient into a parameter's accumulator.
void set_grad(const Var& v, double g) {
  v.zero_grad();
  Tensor& buf = v.node()->grad_buffer();
  buf.fill(g);
}

}  // namespace

TEST(Optimizer, SgdSingleStep) {
  ParameterSet params;
  const Var p = params.add("p", Tensor::vector({1.0}));
  Optimizer opt({.kind = OptimizerKind::sgd, .learning_rate = 0.1});
  set_grad(p, 1.0);
  opt.step(params);
  EXPECT_NEAR(p.value()[0], 0.9, 1e-15);
  EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  ParameterSet params;
  const Var p = params.add("p", Tensor::vector({0.5, -2.0, 3.0}));
  const double lr = 1e-3;
  const double eps = 1e-8;
  Optimizer opt({.kind = OptimizerKind::adam, .learning_rate = lr, .epsilon = eps});
  set_grad(p, 1.0);
  opt.step(params);
  // m_hat = v_hat = 1 at t = 1, so the step is lr / (1 + eps).
  const double expected = lr / (1.0 + eps);
  EXPECT_NEAR(p.value()[0], 0.5 - expected, 1e-16);
  EXPECT_NEAR(p.value()[1], -2.0 - expected, 1e-15);
  EXPECT_NEAR(p.value()[2], 3.0 - expected, 1e-15);
}

TEST(Optimizer, ZeroGradientIsIdentity) {
  std::mt19937_64 rng(3);
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    ParameterSet params;
    const Tensor init = sbl::testing::random_tensor({4, 3}, rng);
    const Var p = params.add("w", init);
    Optimizer opt({.kind = kind, .learning_rate = 0.05});
    for (int i = 0; i < 5; ++i) {
      set_grad(p, 0.0);
      opt.step(params);
    }
    EXPECT_EQ(p.value(), init);
    EXPECT_EQ(opt.step_count(), 5u);
  }
}

TEST(Optimizer, MomentumAccumulates) {
  ParameterSet params;
  const Var p = params.add("p", Tensor::vector({0.0}));
  Optimizer opt({.kind = OptimizerKind::sgd, .learning_rate = 1.0, .momentum = 0.5});
  set_grad(p, 1.0);
  opt.step(params);  // buf = 1
  set_grad(p, 1.0);
  opt.step(params);  // buf = 1.5
  EXPECT_DOUBLE_EQ(p.value()[0], -2.5);
}

TEST(Optimizer, WeightPenaltyShrinksWithZeroGradient) {
  ParameterSet params;
  const Var p = params.add("p", Tensor::vector({2.0}));
  Optimizer opt({.kind = OptimizerKind::sgd, .learning_rate = 0.1, .weight_decay = 0.5});
  set_grad(p, 0.0);
  opt.step(params);
  EXPECT_DOUBLE_EQ(p.value()[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Optimizer, ScheduleMultipliesAtMilestones) {
  Optimizer opt({.kind = OptimizerKind::sgd,
                 .learning_rate = 0.01,
                 .schedule = {{300, 0.1}, {360, 0.1}}});
  opt.set_epoch(1);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 0.01);
  opt.set_epoch(300);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 0.01 * 0.1);
  opt.set_epoch(399);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 0.01 * 0.1 * 0.1);
}

TEST(Optimizer, NonpositiveLearningRateIsConfigError) {
  for (double lr : {0.0, -1.0}) {
    try {
      Optimizer opt({.kind = OptimizerKind::adam, .learning_rate = lr});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}

TEST(ParameterSet, DuplicateNamesRejected) {
  ParameterSet params;
  params.add("fp.w", Tensor({2}));
  EXPECT_THROW(params.add("fp.w", Tensor({2})), Error);
}
