#include "mmrnn/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mmrnn;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST(Softmax, ZerosGiveUniform) {
  const Vec s = softmax(vec({0, 0, 0}));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ExactExponentials) {
  const Vec s = softmax(vec({0, std::log(3.0)}));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, LargeInputsDoNotOverflow) {
  const Vec s = softmax(vec({1000, 1000, 1000}));
  ASSERT_TRUE(s.allFinite());
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, EmptyInputIsDimensionError) {
  try {
    softmax(Vec());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Softmax, SumsToOneAndPositive) {
  Rng rng(3);
  std::uniform_int_distribution<Eigen::Index> len(1, 100000);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index L = trial < 4 ? 100000 : len(rng) % 5000 + 1;
    Vec v(L);
    for (Eigen::Index i = 0; i < L; ++i) v[i] = n(rng);
    const Vec s = softmax(v);
    EXPECT_NEAR(s.sum(), 1.0, 1e-12);
    EXPECT_GE(s.minCoeff(), 0.0);
  }
}

TEST(Softmax, ShiftInvariant) {
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec v(7);
    for (Eigen::Index i = 0; i < 7; ++i) v[i] = n(rng);
    const double c = shift(rng);
    const Vec a = softmax(v);
    const Vec b = softmax((v.array() + c).matrix());
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SoftmaxBackward, MatchesJacobian) {
  const Vec s = softmax(vec({0.3, -1.2, 2.0, 0.1}));
  const Vec g = vec({1.0, -2.0, 0.5, 3.0});
  Mat J = -s * s.transpose();
  J.diagonal() += s;
  EXPECT_LE((softmax_backward(s, g) - J.transpose() * g).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Logistic, StableTails) {
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(logistic(-800.0)));
  EXPECT_NEAR(logistic(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(logistic(800.0), 1.0);
  EXPECT_NEAR(logistic(2.0) + logistic(-2.0), 1.0, 1e-15);
}

TEST(RelativeError, Floor) {
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

TEST(ParamStore, GradShapesFollowValues) {
  ParamStore s;
  s.add("a", Mat::Ones(3, 2));
  s.add("b", Mat::Ones(4, 1));
  for (const auto& slot : s) {
    EXPECT_EQ(slot.grad.rows(), slot.value.rows());
    EXPECT_EQ(slot.grad.cols(), slot.value.cols());
  }
  EXPECT_EQ(s.scalar_count(), 10u);
  EXPECT_DOUBLE_EQ(s.squared_norm(), 10.0);
  EXPECT_EQ(s.index_of("b"), 1u);
  EXPECT_THROW(s.index_of("zz"), Error);
}

TEST(ParamStore, ZeroGradsClearsEverything) {
  ParamStore s;
  s.add("a", Mat::Ones(2, 2));
  s.grad(0).setConstant(-3.5);
  s.zero_grads();
  EXPECT_EQ(s.grad(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParamStore, RejectsNonFiniteValues) {
  ParamStore s;
  Mat m = Mat::Zero(1, 1);
  m(0, 0) = std::nan("");
  EXPECT_THROW(s.add("x", m), Error);
}

TEST(SgdStep, SingleScalar) {
  ParamStore s;
  s.add("w", Mat::Constant(1, 1, 1.0));
  s.grad(0)(0, 0) = 2.0;
  sgd_step(s, 0.01);
  EXPECT_DOUBLE_EQ(s.value(0)(0, 0), 0.98);
  EXPECT_DOUBLE_EQ(s.grad(0)(0, 0), 2.0);
}

TEST(SgdStep, ZeroGradientIsFixedPoint) {
  ParamStore s;
  s.add("w", Mat::Constant(2, 3, 0.7));
  const ParamStore before = s;
  sgd_step(s, 0.3);
  EXPECT_TRUE(s == before);
}

TEST(SgdStep, Vector) {
  ParamStore s;
  s.add("w", Mat::Ones(2, 1));
  s.grad(0)(0, 0) = 1.0;
  s.grad(0)(1, 0) = -1.0;
  sgd_step(s, 0.5);
  EXPECT_DOUBLE_EQ(s.value(0)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.value(0)(1, 0), 1.5);
}

TEST(SgdStep, NonPositiveRateIsConfigError) {
  ParamStore s;
  s.add("w", Mat::Ones(1, 1));
  for (double lr : {0.0, -0.1}) {
    try {
      sgd_step(s, lr);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}

// A step forward and a step against the same gradient restore the values.
TEST(SgdStep, OppositeStepRestores) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ParamStore s;
    s.add("a", uniform_matrix(rng, 4, 3, 2.0));
    s.add("b", uniform_matrix(rng, 5, 1, 2.0));
    const ParamStore before = s;
    for (auto& slot : s) slot.grad = uniform_matrix(rng, slot.value.rows(), slot.value.cols(), 3.0);
    sgd_step(s, 0.01);
    for (auto& slot : s) slot.grad = -slot.grad;
    sgd_step(s, 0.01);
    for (std::size_t k = 0; k < s.size(); ++k)
      EXPECT_LE((s.value(k) - before.value(k)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FiniteDiff, Quadratic) {
  ParamStore s;
  s.add("v", Mat::Constant(1, 1, 3.0));
  const auto g = finite_diff_grad([](const ParamStore& p) { return p.value(0)(0, 0) * p.value(0)(0, 0); }, s, 1e-5);
  EXPECT_NEAR(g[0](0, 0), 6.0, 1e-6);
  EXPECT_EQ(s.value(0)(0, 0), 3.0);
}

TEST(FiniteDiff, ConstantLossGivesZero) {
  ParamStore s;
  s.add("v", Mat::Ones(3, 2));
  const auto g = finite_diff_grad([](const ParamStore&) { return 4.2; }, s, 1e-5);
  EXPECT_EQ(g[0].cwiseAbs().maxCoeff(), 0.0);
}

TEST(FiniteDiff, NonFiniteLossIsNumericalError) {
  ParamStore s;
  s.add("v", Mat::Ones(1, 1));
  try {
    finite_diff_grad([](const ParamStore&) { return std::nan(""); }, s, 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(Dirichlet, OnSimplex) {
  Rng rng(1);
  for (double alpha : {0.05, 0.1, 1.0, 5.0}) {
    const Vec v = dirichlet(rng, 30, alpha);
    EXPECT_NEAR(v.sum(), 1.0, 1e-12);
    EXPECT_GE(v.minCoeff(), 0.0);
  }
}

TEST(DeriveSeed, DistinctTags) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
}
