#include <gtest/gtest.h>

#include <cmath>

#include "stdinfo/errors.hpp"
#include "stdinfo/tensor_spectrum.hpp"
#include "test_util.hpp"

using namespace stdinfo;

namespace {

std::vector<double> sorted_values(const UnivariateSpectrum& s) {
  std::vector<double> v;
  for (const auto& r : s.sorted_prefix(*s.nonzero_count())) v.push_back(r.value);
  return v;
}

}  // namespace

TEST(TopK, MatchesExhaustiveEnumeration) {
  const std::vector<std::vector<double>> cases = {
      {0.75, 0.25}, {0.5, 0.3, 0.2}, {0.4, 0.4, 0.1, 0.1}, {0.3, 0.05, 0.2, 0.15, 0.25, 0.05}};
  for (const auto& atoms : cases) {
    const auto s = UnivariateSpectrum::explicit_values(atoms);
    for (std::size_t d = 1; d <= 4; ++d) {
      const auto ref = testutil::tensor_bruteforce(sorted_values(s), d);
      const auto got = top_k(s, d, std::min<std::size_t>(ref.size(), 500));
      ASSERT_EQ(got.size(), std::min<std::size_t>(ref.size(), 500));
      for (std::size_t j = 0; j < got.size(); ++j) {
        EXPECT_EQ(got[j].index.coords, ref[j].ranks) << "d=" << d << " j=" << j;
        EXPECT_EQ(got[j].value, ref[j].value);
      }
    }
  }
}

TEST(TopK, ValuesAreNonIncreasing) {
  const auto s = UnivariateSpectrum::power_log(1, 0.8, 0.7);
  const auto got = top_k(s, 3, 3000);
  for (std::size_t j = 1; j < got.size(); ++j) EXPECT_LE(got[j].value, got[j - 1].value);
}

TEST(TopK, PrefixPlusTailIsTotalMass) {
  const auto bm = UnivariateSpectrum::brownian_motion();
  const auto got = top_k(bm, 2, 1000);
  EXPECT_NEAR(got.total_mass(), 0.25, 1e-12);
  for (std::size_t m : {1u, 10u, 100u, 1000u}) {
    EXPECT_NEAR(got.partial_sum(m) + got.tail_after(m), got.total_mass(), 1e-15);
  }
  EXPECT_EQ(got.tail_after(0), got.total_mass());
  EXPECT_NEAR(tail_sum(bm, 1, 3), 0.5 - (4.0 / (M_PI * M_PI)) * (1.0 + 1.0 / 9 + 1.0 / 25), 1e-12);
}

TEST(TopK, FiniteSpectrumIsExhausted) {
  const auto s = UnivariateSpectrum::explicit_values({0.5, 0.3, 0.2});
  const auto got = top_k(s, 2, 100);
  EXPECT_EQ(got.size(), 9u);
  EXPECT_TRUE(got.shortfall());
  EXPECT_EQ(got.tail_after(9), 0.0);
  EXPECT_TRUE(top_k(s, 2, 9).shortfall());
  EXPECT_FALSE(top_k(s, 2, 8).shortfall());
}

TEST(TopK, EnumeratorStopsAndRespectsCap) {
  ProductEnumerator en(UnivariateSpectrum::explicit_values({0.6, 0.4}), 2);
  int n = 0;
  while (en.next()) ++n;
  EXPECT_EQ(n, 4);
  EXPECT_THROW(top_k(UnivariateSpectrum::brownian_motion(), 4, 1000, 50), BudgetExceeded);
}

TEST(Cardinality, BackendsAgreeAndMatchOracle) {
  const auto s = UnivariateSpectrum::explicit_values({0.75, 0.25});
  struct Row {
    std::size_t d;
    std::uint64_t m05, m03;
  };
  for (const Row& r : {Row{1, 1, 2}, Row{2, 2, 3}, Row{3, 4, 6}, Row{4, 6, 10}, Row{6, 18, 35},
                       Row{8, 57, 113}}) {
    EXPECT_EQ(cardinality_relative(s, r.d, 0.5, CardinalityBackend::heap).count, r.m05) << r.d;
    EXPECT_EQ(cardinality_relative(s, r.d, 0.3, CardinalityBackend::heap).count, r.m03) << r.d;
  }
  for (std::size_t d = 1; d <= 10; ++d) {
    for (double eps : {0.3, 0.5}) {
      EXPECT_EQ(cardinality_relative(s, d, eps, CardinalityBackend::heap).count,
                cardinality_relative(s, d, eps, CardinalityBackend::convolution).count)
          << "d=" << d << " eps=" << eps;
    }
  }
}

TEST(Cardinality, CountIsMinimal) {
  const auto s = UnivariateSpectrum::explicit_values({0.5, 0.3, 0.2});
  const auto c = cardinality_relative(s, 3, 0.4, CardinalityBackend::heap);
  const auto ranked = top_k(s, 3, 27);
  EXPECT_LE(ranked.tail_after(c.count), c.threshold * (1 + 1e-12));
  EXPECT_GT(ranked.tail_after(c.count - 1), c.threshold);
}

TEST(Cardinality, Errors) {
  const auto s = UnivariateSpectrum::explicit_values({0.75, 0.25});
  EXPECT_THROW(cardinality_relative(s, 2, 1.5, CardinalityBackend::heap), InvalidArgument);
  EXPECT_THROW(cardinality_relative(UnivariateSpectrum::brownian_motion(), 2, 0.3,
                                    CardinalityBackend::convolution),
               InvalidArgument);
  EXPECT_THROW(cardinality_relative(UnivariateSpectrum::brownian_motion(), 3, 0.01,
                                    CardinalityBackend::heap, 100),
               BudgetExceeded);
  EXPECT_THROW(theorem_prediction(UnivariateSpectrum::explicit_values({0.5, 0.5}), 0.3),
               DegenerateSpectrum);
}

TEST(CardinalityLimit, NormalisedLogCardinalityMovesTowardLimit) {
  const auto s = UnivariateSpectrum::explicit_values({0.75, 0.25});
  for (double eps : {0.3, 0.5}) {
    const auto t = theorem_prediction(s, eps);
    double prev_gap = INFINITY;
    for (std::size_t d : {10u, 20u, 40u}) {
      const auto c = cardinality_relative(s, d, eps, CardinalityBackend::convolution);
      const double z = (std::log(static_cast<double>(c.count)) - d * t.ln_lambda_tilde) /
                       std::sqrt(static_cast<double>(d));
      const double gap = std::abs(z - 2.0 * t.q_star);
      EXPECT_LT(gap, prev_gap) << "eps=" << eps << " d=" << d;
      prev_gap = gap;
    }
  }
}

TEST(CardinalityLimit, DerivedSequenceValues) {
  const auto s = UnivariateSpectrum::explicit_values({0.75, 0.25});
  const double lt = std::log(1.7547653506033232);
  auto z = [&](std::size_t d, double eps) {
    const auto c = cardinality_relative(s, d, eps, CardinalityBackend::convolution);
    return (std::log(static_cast<double>(c.count)) - d * lt) / std::sqrt(static_cast<double>(d));
  };
  EXPECT_NEAR(z(10, 0.3), 0.0909, 1e-4);
  EXPECT_NEAR(z(40, 0.3), 0.2438, 1e-4);
  EXPECT_NEAR(z(40, 0.5), -0.0140, 1e-4);
  EXPECT_EQ(cardinality_relative(s, 20, 0.3, CardinalityBackend::convolution).count, 162418u);
  EXPECT_EQ(cardinality_relative(s, 20, 0.5, CardinalityBackend::convolution).count, 52235u);
  const auto t = theorem_prediction(s, 0.3);
  EXPECT_NEAR(t.q_star, std::sqrt(0.05657573253808977) * 1.3407550336902165, 1e-12);
}

TEST(Asymptotics, HandDerivedConstants) {
  const auto c2 = asymptotic_constants(UnivariateSpectrum::power_log(1, 1, 0), 2);
  EXPECT_EQ(c2.branch, AsymptoticBranch::alpha_gt_neg1);
  EXPECT_EQ(c2.beta, 1.0);
  EXPECT_EQ(c2.B, 1.0);
  const auto c1 = asymptotic_constants(UnivariateSpectrum::power_log(2, 1.5, 0), 1);
  EXPECT_EQ(c1.beta, 0.0);
  EXPECT_EQ(c1.B, 2.0);
  const auto c3 = asymptotic_constants(UnivariateSpectrum::power_log(1, 1, 0), 3);
  EXPECT_EQ(c3.beta, 2.0);
  EXPECT_DOUBLE_EQ(c3.B, 0.5);
  const auto cl = asymptotic_constants(UnivariateSpectrum::power_log(1, 1, -2), 2);
  EXPECT_EQ(cl.branch, AsymptoticBranch::alpha_lt_neg1);
  EXPECT_EQ(cl.beta, -2.0);
  EXPECT_NEAR(cl.B, 2.0 * 3.38773553195200232, 1e-10);
  EXPECT_THROW(asymptotic_constants(UnivariateSpectrum::power_log(1, 1, -1), 2), UnsupportedCase);
  EXPECT_THROW(asymptotic_constants(UnivariateSpectrum::explicit_values({1.0}), 2),
               InvalidArgument);
}

TEST(Asymptotics, EmpiricalRatioApproachesConstant) {
  const auto s = UnivariateSpectrum::power_log(1, 1, 0);
  const auto c = asymptotic_constants(s, 2);
  const auto ranked = top_k(s, 2, 100000);
  auto ratio = [&](std::size_t j) {
    const double jj = static_cast<double>(j);
    return ranked[j - 1].value * jj * jj * std::pow(std::log(jj), -2.0 * c.beta) / (c.B * c.B);
  };
  EXPECT_NEAR(ratio(10000), 0.639, 5e-3);
  EXPECT_NEAR(ratio(100000), 0.670, 5e-3);
  EXPECT_GT(ratio(100000), ratio(10000));
}
