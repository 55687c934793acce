#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>

#include "stdinfo/kernels.hpp"
#include "stdinfo/std_approx.hpp"

using namespace stdinfo;

namespace {

struct Fixture {
  SystemPtr sys = SpectralSystem::tensor(UnivariateSpectrum::brownian_motion(), 2, 300);
  std::size_t n = 97;
  Design design;
  Fixture() {
    Rng rng(21);
    design = draw_design(*sys, 64, n, rng);
  }
};

}  // namespace

TEST(Kernels, DesignMatrixSerialAndParallelAgreeBitwise) {
  Fixture f;
  std::vector<double> a(f.n * 300), b(f.n * 300);
  omp_set_num_threads(3);
  kernels::design_matrix(*f.sys, f.design.points, 300, a);
  kernels::design_matrix_serial(*f.sys, f.design.points, 300, b);
  EXPECT_EQ(a, b);
  std::vector<double> row(300);
  f.sys->eval_modes(f.design.point(5), 300, row);
  for (std::size_t j = 0; j < 300; ++j) EXPECT_EQ(a[5 * 300 + j], row[j]);
}

TEST(Kernels, MatvecAndEstimateAgreeBitwise) {
  Fixture f;
  std::vector<double> phi(f.n * 300);
  kernels::design_matrix(*f.sys, f.design.points, 300, phi);
  std::vector<double> x(300);
  Rng rng(2);
  for (auto& v : x) v = rng.normal();
  std::vector<double> y1(f.n), y2(f.n);
  kernels::matvec(phi, f.n, 200, 300, x, y1);
  kernels::matvec_serial(phi, f.n, 200, 300, x, y2);
  EXPECT_EQ(y1, y2);
  for (std::size_t l : {0u, 50u, 96u}) {
    double s = 0.0;
    for (std::size_t j = 0; j < 200; ++j) s += phi[l * 300 + j] * x[j];
    EXPECT_NEAR(y1[l], s, 1e-12);
  }
  std::vector<double> e1(64), e2(64);
  kernels::estimate(phi, f.n, 300, 64, y1, e1);
  kernels::estimate_serial(phi, f.n, 300, 64, y1, e2);
  EXPECT_EQ(e1, e2);
}

TEST(Kernels, EstimateMatchesWeightedFormula) {
  Fixture f;
  const std::size_t m = 64;
  std::vector<double> phi(f.n * m), vals(f.n), out(m);
  kernels::design_matrix(*f.sys, f.design.points, m, phi);
  Rng rng(3);
  for (auto& v : vals) v = rng.normal();
  kernels::estimate(phi, f.n, m, m, vals, out);
  for (std::size_t j : {0u, 10u, 63u}) {
    double s = 0.0;
    for (std::size_t l = 0; l < f.n; ++l) {
      const double u = density(*f.sys, m, f.design.point(l));
      s += vals[l] * phi[l * m + j] / u;
    }
    EXPECT_NEAR(out[j], s / f.n, 1e-12 * (1.0 + std::abs(s / f.n)));
  }
}
