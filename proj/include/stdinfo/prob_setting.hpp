#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stdinfo/std_approx.hpp"

namespace stdinfo {

/// sqrt(mean_sq) (1 + sqrt(2 |ln gamma|)): a centered Gaussian vector with
/// E||X||^2 = mean_sq exceeds this norm with probability at most gamma.
double concentration_radius(double mean_sq, double gamma);

struct ProbRequirement {
  double eps = 0.1;
  double gamma = 0.05;
  /// Mean-square level eps / (1 + sqrt(2 |ln gamma|)) that guarantees the requirement.
  double v() const;
};

void check_requirement(const ProbRequirement& req);

/// E||X - A_N X||^2 <= C0 N^{1-2r} (ln N)^{2r(beta+1)-1} on the calibration grid.
struct CalibratedRate {
  double C0 = 0.0;
  double r = 1.0;
  double beta = 0.0;
  double safety = 1.0;  // 1 + 3/sqrt(reps)
  std::size_t reps = 0;
  std::vector<std::size_t> grid_N;
  std::vector<double> grid_error;

  double log_exp() const { return 2.0 * r * (beta + 1.0) - 1.0; }
  /// N^{1-2r} (ln N)^{log_exp}
  double shape(double N) const;
  double bound(double N) const { return C0 * shape(N); }
  RateModel rate_model() const;
};

/// C0 = max over the grid of error (1 + 3/sqrt(reps)) / shape(N).
CalibratedRate fit_C0(double r, double beta, std::span<const std::size_t> N,
                      std::span<const double> errors, std::size_t reps);

/// Runs the iterated algorithm (plain random designs) for each n of the grid
/// and fits C0 against the total point counts.
CalibratedRate calibrate_C0(SystemPtr system, double r, double beta,
                            std::span<const std::size_t> n_grid, std::size_t reps,
                            std::uint64_t seed, double Z, int threads = 0);

/// Least N >= N0 = max(3, ceil(e^{log_exp/(2r-1)})) with bound(N) <= v^2;
/// exponential bracketing followed by bisection. Past N0 the rate is decreasing.
std::uint64_t point_budget(double v, const CalibratedRate& rate);

/// C (v^2 |ln v|^{-log_exp})^{-1/(2r-1)} with the matching constant
/// C = C0^{1/(2r-1)} (2/(2r-1))^{log_exp/(2r-1)}.
double closed_form_budget(double v, const CalibratedRate& rate);

/// Smallest n with (ceil(Z log2 n) + 1) n >= N; m = floor(n/2), S = 1.
ApproxConfig config_for_budget(std::uint64_t N, double Z, std::uint64_t seed = 0);

struct VerifyResult {
  double exceedance = 0.0;  // fraction of replications with ||X - AX|| > eps
  double tolerance = 0.0;   // gamma + 2 sqrt(gamma / reps)
  std::size_t reps = 0;
  std::size_t points_used = 0;
  double mean_sq_error = 0.0;
};

/// Empirical P(||X - AX||_2 > eps). Squared errors include the analytic tail
/// of the truncated modes. With zero_baseline the algorithm is A = 0.
VerifyResult verify(SystemPtr system, const ApproxConfig& config, const ProbRequirement& req,
                    std::size_t reps, std::uint64_t seed, int threads = 0,
                    bool zero_baseline = false);

}  // namespace stdinfo
