#include "mmrnn/decay.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mmrnn;

TEST(Rho, ZeroKappaIsOne) { EXPECT_EQ(rho({1.0, 0.0}, 17.0, false), 1.0); }

TEST(Rho, FirstStepIsZero) {
  for (DecaySpec s : {DecaySpec{1.0, 0.0}, DecaySpec{10.0, 1.0}, DecaySpec{3.0, 7.5}})
    for (double dt : {0.0, 1.0, 29.0}) EXPECT_EQ(rho(s, dt, true), 0.0);
}

TEST(Rho, TenToMinusOne) { EXPECT_NEAR(rho({10.0, 1.0}, 0.0, false), 0.1, 1e-15); }

TEST(Rho, SpotValue) {
  // 4^-0.1 from a 40-digit evaluation
  EXPECT_NEAR(rho({1.0, 0.1}, 3.0, false), 0.8705505632961241, 1e-6);
}

TEST(Rho, NegativeGapIsDomainError) {
  try {
    rho({1.0, 0.1}, -1.0, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(DecaySpec, RejectsSmallT0AndNegativeKappa) {
  for (DecaySpec s : {DecaySpec{0.5, 0.1}, DecaySpec{1.0, -0.1}}) {
    try {
      s.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}

TEST(Rho, Properties) {
  Rng rng(11);
  std::uniform_real_distribution<double> t0d(1.0, 100.0), kd(0.0, 10.0), dtd(0.0, 1e4);
  for (int i = 0; i < 20000; ++i) {
    const DecaySpec s{t0d(rng), kd(rng)};
    double a = dtd(rng), b = dtd(rng);
    if (a > b) std::swap(a, b);
    const double ra = rho(s, a, false), rb = rho(s, b, false);
    ASSERT_GE(ra, 0.0);
    ASSERT_LE(ra, 1.0);
    ASSERT_LE(rb, ra);
    ASSERT_EQ(rho({s.t0, 0.0}, a, false), 1.0);
    ASSERT_EQ(rho(s, a, true), 0.0);
    // non-increasing in kappa
    ASSERT_LE(rho({s.t0, s.kappa + 0.5}, a, false), ra);
  }
}

TEST(Schedule, ZeroScheduleAndFactory) {
  const auto z = make_schedule(ScheduleKind::zero, {});
  const auto p = make_schedule(ScheduleKind::power_law, {10.0, 1.0});
  EXPECT_EQ((*z)(5.0, false), 0.0);
  EXPECT_EQ((*z)(0.0, false), 0.0);
  EXPECT_NEAR((*p)(0.0, false), 0.1, 1e-15);
  EXPECT_THROW((*z)(-2.0, false), Error);
}
