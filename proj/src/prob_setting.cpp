#include "stdinfo/prob_setting.hpp"

#include <algorithm>
#include <cmath>

#include "stdinfo/errors.hpp"

namespace stdinfo {

double concentration_radius(double mean_sq, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0,1)");
  if (!(mean_sq >= 0.0)) throw InvalidArgument("mean_sq must be nonnegative");
  return std::sqrt(mean_sq) * (1.0 + std::sqrt(2.0 * std::abs(std::log(gamma))));
}

double ProbRequirement::v() const {
  return eps / (1.0 + std::sqrt(2.0 * std::abs(std::log(gamma))));
}

void check_requirement(const ProbRequirement& req) {
  if (!(req.eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(req.gamma > 0.0 && req.gamma < 1.0)) throw InvalidArgument("gamma must lie in (0,1)");
}

double CalibratedRate::shape(double N) const {
  return std::pow(N, 1.0 - 2.0 * r) * std::pow(std::log(N), log_exp());
}

RateModel CalibratedRate::rate_model() const {
  RateModel m;
  m.p = r - 0.5;
  m.log_exp = 2.0 * r * beta;
  return m;
}

CalibratedRate fit_C0(double r, double beta, std::span<const std::size_t> N,
                      std::span<const double> errors, std::size_t reps) {
  if (N.size() != errors.size()) throw InvalidArgument("fit_C0: grid and errors differ in length");
  if (N.size() < 2) throw InvalidArgument("fit_C0: degenerate calibration grid");
  if (!(r > 0.5)) throw InvalidArgument("fit_C0 needs r > 1/2");
  CalibratedRate c;
  c.r = r;
  c.beta = beta;
  c.reps = reps;
  c.safety = 1.0 + 3.0 / std::sqrt(static_cast<double>(reps));
  c.grid_N.assign(N.begin(), N.end());
  c.grid_error.assign(errors.begin(), errors.end());
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (N[i] < 2) throw InvalidArgument("fit_C0: grid points must be at least 2");
    c.C0 = std::max(c.C0, errors[i] * c.safety / c.shape(static_cast<double>(N[i])));
  }
  return c;
}

CalibratedRate calibrate_C0(SystemPtr system, double r, double beta,
                            std::span<const std::size_t> n_grid, std::size_t reps,
                            std::uint64_t seed, double Z, int threads) {
  if (n_grid.size() < 4) throw InvalidArgument("calibrate_C0 needs at least 4 grid values of n");
  ApproxConfig base;
  base.Z = Z;
  base.S = 1;
  CalibratedRate tmp;
  tmp.r = r;
  tmp.beta = beta;
  const SweepResult sweep = rate_sweep(system, n_grid, base, tmp.rate_model(), reps, seed, threads);
  std::vector<std::size_t> N;
  std::vector<double> err;
  for (const auto& row : sweep.rows) {
    N.push_back(row.points_used);
    err.push_back(row.mc_error);
  }
  return fit_C0(r, beta, N, err, reps);
}

std::uint64_t point_budget(double v, const CalibratedRate& rate) {
  if (!(v > 0.0 && v < 1.0)) throw InvalidArgument("point_budget needs v in (0,1)");
  if (!(rate.C0 > 0.0)) throw InvalidArgument("point_budget needs a positive C0");
  const double target = v * v;
  const double turn = std::exp(std::max(rate.log_exp(), 0.0) / (2.0 * rate.r - 1.0));
  const auto n0 = std::max<std::uint64_t>(3, static_cast<std::uint64_t>(std::ceil(turn)));
  auto ok = [&](std::uint64_t N) { return rate.bound(static_cast<double>(N)) <= target; };
  if (ok(n0)) return n0;
  std::uint64_t lo = n0, hi = n0;
  while (!ok(hi)) {
    lo = hi;
    if (hi > (std::uint64_t{1} << 62)) throw BudgetExceeded("point_budget: no feasible N below 2^63");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double closed_form_budget(double v, const CalibratedRate& rate) {
  const double s = 2.0 * rate.r - 1.0;
  const double g = rate.log_exp();
  const double C = std::pow(rate.C0, 1.0 / s) * std::pow(2.0 / s, g / s);
  return C * std::pow(v * v * std::pow(std::abs(std::log(v)), -g), -1.0 / s);
}

ApproxConfig config_for_budget(std::uint64_t N, double Z, std::uint64_t seed) {
  if (N < 2) throw InvalidArgument("config_for_budget needs N >= 2");
  auto points = [&](std::uint64_t n) { return iteration_count(n, Z) * n; };
  std::uint64_t lo = 2, hi = std::max<std::uint64_t>(N, 2);
  if (points(lo) >= N) hi = lo;
  while (hi > lo) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (points(mid) >= N) hi = mid;
    else lo = mid + 1;
  }
  ApproxConfig c;
  c.n = hi;
  c.m = hi / 2;
  c.Z = Z;
  c.k = iteration_count(hi, Z);
  c.S = 1;
  c.seed = seed;
  return c;
}

VerifyResult verify(SystemPtr system, const ApproxConfig& config, const ProbRequirement& req,
                    std::size_t reps, std::uint64_t seed, int threads, bool zero_baseline) {
  check_requirement(req);
  if (reps < 1) throw InvalidArgument("verify needs at least one replication");
  VerifyResult out;
  out.reps = reps;
  out.tolerance = req.gamma + 2.0 * std::sqrt(req.gamma / static_cast<double>(reps));
  std::vector<double> errors(reps);
  if (zero_baseline) {
    for (std::size_t i = 0; i < reps; ++i) {
      Rng rng = Rng::stream(seed, 2 * i);
      errors[i] = simulate(system, rng).sq_norm() + system->analytic_tail();
    }
  } else {
    const MCSummary mc = mc_iterate(system, config, reps, seed, threads);
    errors = mc.final_errors;
    out.points_used = mc.points_used;
  }
  std::size_t exceed = 0;
  double sum = 0.0;
  for (double e : errors) {
    if (std::sqrt(e) > req.eps) ++exceed;
    sum += e;
  }
  out.exceedance = static_cast<double>(exceed) / static_cast<double>(reps);
  out.mean_sq_error = sum / static_cast<double>(reps);
  return out;
}

}  // namespace stdinfo
