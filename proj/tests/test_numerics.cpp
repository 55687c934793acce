#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stdinfo/errors.hpp"
#include "stdinfo/numerics.hpp"
#include "stdinfo/rng.hpp"

using namespace stdinfo;

TEST(CompensatedSum, RecoversCancelledLowOrderBits) {
  num::CompensatedSum<double> s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(NormalTail, InverseMatchesHighPrecisionQuantiles) {
  // mpmath: -sqrt(2) erfinv(2p - 1) at 30 digits
  EXPECT_NEAR(num::normal_tail_inverse(0.09), 1.3407550336902165, 1e-10);
  EXPECT_EQ(num::normal_tail_inverse(0.5), 0.0);
  EXPECT_NEAR(num::normal_tail_inverse(0.025), 1.959963984540054, 1e-10);
  EXPECT_NEAR(num::normal_tail_inverse(1e-10), 6.361340902404056, 1e-9);
  EXPECT_NEAR(num::normal_tail_inverse(0.975), -1.959963984540054, 1e-10);
}

TEST(NormalTail, RoundTripsAcrossTheRange) {
  for (double p : {1e-300, 1e-100, 1e-20, 1e-5, 0.01, 0.3, 0.7, 0.99, 1 - 1e-12}) {
    const double x = num::normal_tail_inverse(p);
    EXPECT_NEAR(num::normal_tail(x) / p, 1.0, 1e-10) << "p = " << p;
  }
  EXPECT_THROW(num::normal_tail_inverse(0.0), InvalidArgument);
  EXPECT_THROW(num::normal_tail_inverse(1.0), InvalidArgument);
}

TEST(Binomial, SmallValuesAndOverflow) {
  EXPECT_EQ(num::binomial(4, 2), 6.0);
  EXPECT_EQ(num::binomial(3, 0), 1.0);
  EXPECT_EQ(num::binomial(3, 4), 0.0);
  EXPECT_EQ(num::binomial(40, 20), 137846528820.0);
  EXPECT_EQ(num::binomial_u64(62, 31), 465428353255261088ULL);
  EXPECT_THROW(num::binomial_u64(200, 100), BudgetExceeded);
}

TEST(Pow0, ZeroToTheZeroIsOne) {
  EXPECT_EQ(num::pow0(0.0, 0.0), 1.0);
  EXPECT_EQ(num::pow0(0.0, 2.0), 0.0);
  EXPECT_EQ(num::pow0(2.0, 3.0), 8.0);
}

TEST(SumSeries, BaselSumToDoublePrecision) {
  const auto r = num::sum_series([](double x) { return 1.0 / (x * x); });
  EXPECT_NEAR(r.value, std::numbers::pi * std::numbers::pi / 6.0, 1e-14);
}

TEST(SumSeries, LogarithmicallyDecayingTail) {
  // sum 1/(i ln^2(i+1)); reference from a 30-digit mpmath evaluation
  auto f = [](double x) { return 1.0 / (x * std::pow(std::log(x + 1.0), 2)); };
  auto g = [](double u) {
    const double l = u + std::log1p(std::exp(-u));
    return 1.0 / (l * l);
  };
  const auto r = num::sum_series(f, 1, 1e-13, std::uint64_t{1} << 16, g);
  EXPECT_NEAR(r.value, 3.38773553195200232, 1e-10);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(7, 3), b = Rng::stream(7, 3), c = Rng::stream(7, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Rng, BelowIsUniform) {
  Rng rng(5);
  int counts[7] = {};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4.0 * std::sqrt(n / 7.0));
}
