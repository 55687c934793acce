#include "stdinfo/std_approx.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include <omp.h>

#include "stdinfo/errors.hpp"
#include "stdinfo/kernels.hpp"
#include "stdinfo/numerics.hpp"

namespace stdinfo {

std::size_t iteration_count(std::size_t n, double Z) {
  if (n < 2) throw InvalidArgument("iteration_count needs n >= 2");
  return static_cast<std::size_t>(std::ceil(Z * std::log2(static_cast<double>(n)))) + 1;
}

ApproxConfig ApproxConfig::defaults(std::size_t n, double p, std::uint64_t seed) {
  ApproxConfig c;
  c.n = n;
  c.m = n / 2;
  c.Z = 2.0 * p + 1.0;
  c.k = iteration_count(n, c.Z);
  c.seed = seed;
  return c;
}

std::vector<std::string> config_problems(const ApproxConfig& c) {
  std::vector<std::string> out;
  if (c.n < 1) out.push_back("n must be at least 1");
  if (c.m < 1) out.push_back("m must be at least 1");
  if (c.m >= c.n) {
    out.push_back("m < n is required for the iteration to contract (m/n < 1); got m = " +
                  std::to_string(c.m) + ", n = " + std::to_string(c.n));
  }
  if (c.k < 1) out.push_back("k must be at least 1");
  if (!(c.Z > 0.0)) out.push_back("Z must be positive");
  if (c.S < 1) out.push_back("S must be at least 1");
  if (c.S > 1 && c.R_cal < 1) out.push_back("R_cal must be at least 1 when S > 1");
  return out;
}

void check_config(const ApproxConfig& c) {
  const auto problems = config_problems(c);
  if (problems.empty()) return;
  std::ostringstream os;
  os << "invalid approximation config:";
  for (const auto& p : problems) os << "\n  " << p;
  throw InvalidArgument(os.str());
}

RateModel tensor_rate_model(const UnivariateSpectrum& spec, std::size_t d) {
  const AsymptoticConstants c = asymptotic_constants(spec, d);
  RateModel m;
  m.p = c.r - 0.5;
  m.log_exp = 2.0 * c.r * c.beta;
  return m;
}

RateModel additive_rate_model(const AdditiveModel& model) {
  const auto p = model.spec.asymptotic_params();
  if (!p) throw InvalidArgument("additive_rate_model needs a power-law spectrum");
  const double alpha = p->q / p->r;
  if (alpha == -1.0) throw UnsupportedCase("alpha = q/r = -1 is not covered");
  const double b = static_cast<double>(model.b);
  const double beta = alpha > -1.0 ? b - 1.0 + b * alpha : alpha;
  RateModel m;
  m.p = p->r - 0.5;
  m.log_exp = 2.0 * p->r * beta;
  return m;
}

double fit_rate_constant(const SpectralSystem& system, const RateModel& rate,
                         std::span<const std::size_t> m_grid) {
  double c = 0.0;
  for (std::size_t m : m_grid) {
    if (m < 2) throw InvalidArgument("fit_rate_constant needs m >= 2");
    const double md = static_cast<double>(m);
    const double shape = std::pow(md, -2.0 * rate.p) * std::pow(std::log(md), rate.log_exp);
    c = std::max(c, system.tail_after(m) / (shape * system.total_mass()));
  }
  return c;
}

double density(const SpectralSystem& system, std::size_t m, std::span<const double> t) {
  if (m < 1 || m > system.size()) throw InvalidArgument("density: span size out of range");
  std::vector<double> phi(m);
  system.eval_modes(t, m, phi);
  double u = 0.0;
  for (double v : phi) u += v * v;
  return u / static_cast<double>(m);
}

Design draw_design(const SpectralSystem& system, std::size_t m, std::size_t n, Rng& rng) {
  if (m < 1 || m > system.size()) throw InvalidArgument("draw_design: span size out of range");
  Design d;
  d.dim = system.dim();
  d.points.resize(n * d.dim);
  d.labels.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const auto j = static_cast<std::uint32_t>(rng.below(m));
    d.labels[l] = j;
    system.sample_mode(j, rng, std::span<double>(d.points.data() + l * d.dim, d.dim));
  }
  return d;
}

std::vector<double> estimate_from_matrix(std::span<const double> phi, std::size_t n,
                                         std::size_t lda, std::size_t m,
                                         std::span<const double> values) {
  std::vector<double> out(m);
  kernels::estimate(phi, n, lda, m, values, out);
  return out;
}

std::vector<double> estimate_coefficients(const SpectralSystem& system, std::size_t m,
                                          const Design& design, const PointFunction& g) {
  const std::size_t n = design.size();
  std::vector<double> phi(n * m), values(n);
  kernels::design_matrix(system, design.points, m, phi);
  for (std::size_t l = 0; l < n; ++l) values[l] = g(design.point(l));
  return estimate_from_matrix(phi, n, m, m, values);
}

std::vector<double> iteration_bound(double total_mass, double tail_m, std::size_t m,
                                    std::size_t n, std::size_t k) {
  if (m >= n) throw InvalidArgument("iteration bound needs m < n");
  const double q = static_cast<double>(m) / static_cast<double>(n);
  const double x = tail_m / (1.0 - q);
  std::vector<double> b(k + 1);
  for (std::size_t i = 0; i <= k; ++i) b[i] = x + std::pow(q, static_cast<double>(i)) * (total_mass - x);
  return b;
}

namespace {

// Fills phi (n x T); keeps its allocation when the shape is unchanged.
void fill_design_matrix(const SpectralSystem& system, const Design& design,
                        std::vector<double>& phi) {
  phi.resize(design.size() * system.size());
  kernels::design_matrix(system, design.points, system.size(), phi);
}

std::vector<double> full_design_matrix(const SpectralSystem& system, const Design& design) {
  std::vector<double> phi;
  fill_design_matrix(system, design, phi);
  return phi;
}

double in_span_error(std::span<const double> a, std::span<const double> c) {
  num::CompensatedSum<double> s;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - c[j];
    s.add(diff * diff);
  }
  return s.value();
}

// Estimates of the residual field with coefficient vector `resid` (all T
// modes) from its values on the design.
std::vector<double> pass_estimates(std::span<const double> phi, std::size_t n, std::size_t T,
                                   std::size_t m, std::span<const double> resid) {
  std::vector<double> values(n);
  kernels::matvec(phi, n, T, T, resid, values);
  return estimate_from_matrix(phi, n, T, m, values);
}

void record(ApproxResult& r, const FieldRealization& fr, std::span<const double> resid) {
  const double in = in_span_error(r.estimates, fr.coefficients);
  const double out = out_span_mass(resid, r.m);
  r.in_span_trace.push_back(in);
  r.out_span_trace.push_back(out);
  r.err_trace.push_back(in + out + fr.system->analytic_tail());
}

}  // namespace

double score_design(const SpectralSystem& system, std::size_t m, std::span<const double> phi,
                    std::size_t n, const std::vector<std::vector<double>>& calibration) {
  if (calibration.empty()) throw InvalidArgument("score_design needs calibration fields");
  const std::size_t T = system.size();
  num::CompensatedSum<double> total;
  for (const auto& g : calibration) {
    const auto est = pass_estimates(phi, n, T, m, g);
    total.add(in_span_error(est, g) + out_span_mass(g, m));
  }
  return total.value() / static_cast<double>(calibration.size());
}

namespace {

// Best of S designs into sel; `spare` is a second matrix buffer for candidates.
void select_into(const SpectralSystem& system, std::size_t m, std::size_t n, std::size_t S,
                 const std::vector<std::vector<double>>& calibration, Rng& rng, Selection& sel,
                 std::vector<double>& spare) {
  if (S < 1) throw InvalidArgument("select_design needs S >= 1");
  sel.scores.clear();
  sel.chosen = 0;
  if (S == 1) {
    sel.design = draw_design(system, m, n, rng);
    fill_design_matrix(system, sel.design, sel.phi);
    return;
  }
  double best = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    Design d = draw_design(system, m, n, rng);
    fill_design_matrix(system, d, spare);
    const double score = score_design(system, m, spare, n, calibration);
    sel.scores.push_back(score);
    if (s == 0 || score < best) {
      best = score;
      sel.chosen = s;
      sel.design = std::move(d);
      std::swap(sel.phi, spare);
    }
  }
}

}  // namespace

Selection select_design(const SpectralSystem& system, std::size_t m, std::size_t n,
                        std::size_t S, const std::vector<std::vector<double>>& calibration,
                        Rng& rng) {
  Selection sel;
  std::vector<double> spare;
  select_into(system, m, n, S, calibration, rng, sel, spare);
  return sel;
}

ApproxResult single_pass(const FieldRealization& fr, std::size_t m, const Design& design) {
  const SpectralSystem& sys = *fr.system;
  const std::size_t n = design.size();
  if (m < 1 || m > sys.size()) throw InvalidArgument("single_pass: span size out of range");
  ApproxResult r;
  r.n = n;
  r.m = m;
  r.k = 1;
  r.estimates.assign(m, 0.0);
  record(r, fr, fr.coefficients);
  const auto phi = full_design_matrix(sys, design);
  r.estimates = pass_estimates(phi, n, sys.size(), m, fr.coefficients);
  r.points_used = n;
  r.queries = n;
  std::vector<double> resid = fr.coefficients;
  for (std::size_t j = 0; j < m; ++j) resid[j] -= r.estimates[j];
  record(r, fr, resid);
  if (m < n) r.bound_trace = iteration_bound(sys.total_mass(), sys.tail_after(m), m, n, 1);
  return r;
}

ApproxResult iterate(const FieldRealization& fr, const ApproxConfig& config) {
  check_config(config);
  const SpectralSystem& sys = *fr.system;
  const std::size_t n = config.n, m = config.m, T = sys.size();
  if (m > T) throw InvalidArgument("iterate: span size exceeds the retained modes");

  ApproxResult r;
  r.n = n;
  r.m = m;
  r.k = config.k;
  r.estimates.assign(m, 0.0);
  std::vector<double> resid = fr.coefficients;
  record(r, fr, resid);

  std::vector<std::vector<double>> calibration;
  if (config.S > 1) {
    const std::uint64_t cal_seed = Rng::derive(config.seed, 0x63616c);
    for (std::size_t i = 0; i < config.R_cal; ++i) {
      Rng rng = Rng::stream(cal_seed, i);
      calibration.push_back(simulate(fr.system, rng).coefficients);
    }
  }

  std::vector<double> y(n), corr(n), values(n), spare;
  Selection sel;
  for (std::size_t step = 1; step <= config.k; ++step) {
    Rng rng = Rng::stream(config.seed, step);
    select_into(sys, m, n, config.S, calibration, rng, sel, spare);
    // Y at the new points (one query each), minus the current approximation.
    kernels::matvec(sel.phi, n, T, T, fr.coefficients, y);
    kernels::matvec(sel.phi, n, m, T, r.estimates, corr);
    for (std::size_t l = 0; l < n; ++l) values[l] = y[l] - corr[l];
    const auto est = estimate_from_matrix(sel.phi, n, T, m, values);
    for (std::size_t j = 0; j < m; ++j) {
      r.estimates[j] += est[j];
      resid[j] = fr.coefficients[j] - r.estimates[j];
    }
    r.points_used += n;
    r.queries += n;
    for (auto& g : calibration) {
      const auto ce = pass_estimates(sel.phi, n, T, m, g);
      for (std::size_t j = 0; j < m; ++j) g[j] -= ce[j];
    }
    record(r, fr, resid);
  }
  r.bound_trace = iteration_bound(sys.total_mass(), sys.tail_after(m), m, n, config.k);
  return r;
}

MCSummary mc_iterate(SystemPtr system, const ApproxConfig& config, std::size_t reps,
                     std::uint64_t seed, int threads) {
  check_config(config);
  if (reps < 1) throw InvalidArgument("mc_iterate needs at least one replication");
  std::vector<ApproxResult> results(reps);
  std::vector<double> norms(reps);
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(reps);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const auto rep = static_cast<std::uint64_t>(i);
      Rng field_rng = Rng::stream(seed, 2 * rep);
      FieldRealization fr = simulate(system, field_rng);
      ApproxConfig c = config;
      c.seed = Rng::derive(seed, 2 * rep + 1);
      results[i] = iterate(fr, c);
      norms[i] = fr.sq_norm();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  MCSummary s;
  s.reps = reps;
  s.points_used = results[0].points_used;
  const std::size_t len = results[0].err_trace.size();
  s.mean_trace.assign(len, 0.0);
  s.mean_in_span_trace.assign(len, 0.0);
  num::CompensatedSum<double> err, norm;
  for (std::size_t i = 0; i < reps; ++i) {
    const auto& r = results[i];
    for (std::size_t t = 0; t < len; ++t) {
      s.mean_trace[t] += r.err_trace[t];
      s.mean_in_span_trace[t] += r.in_span_trace[t];
    }
    s.final_errors.push_back(r.err_trace.back());
    err.add(r.err_trace.back());
    norm.add(norms[i]);
  }
  const double rd = static_cast<double>(reps);
  for (std::size_t t = 0; t < len; ++t) {
    s.mean_trace[t] /= rd;
    s.mean_in_span_trace[t] /= rd;
  }
  s.stderr_trace.assign(len, 0.0);
  if (reps > 1) {
    for (std::size_t t = 0; t < len; ++t) {
      num::CompensatedSum<double> ss;
      for (const auto& r : results) {
        const double dev = r.err_trace[t] - s.mean_trace[t];
        ss.add(dev * dev);
      }
      s.stderr_trace[t] = std::sqrt(ss.value() / (rd - 1.0) / rd);
    }
  }
  s.mean_error = err.value() / rd;
  s.mean_sq_norm = norm.value() / rd;
  if (reps > 1) {
    num::CompensatedSum<double> ss;
    for (double e : s.final_errors) ss.add((e - s.mean_error) * (e - s.mean_error));
    s.stderr_error = std::sqrt(ss.value() / (rd - 1.0) / rd);
  }
  s.bound_trace = results[0].bound_trace;
  return s;
}

double point_count_rate(double N, const RateModel& rate) {
  return std::pow(N, -2.0 * rate.p) * std::pow(std::log(N), rate.prop_log_exp());
}

SweepResult rate_sweep(SystemPtr system, std::span<const std::size_t> n_grid,
                       const ApproxConfig& base, const RateModel& rate, std::size_t reps,
                       std::uint64_t seed, int threads) {
  SweepResult out;
  for (std::size_t n : n_grid) {
    ApproxConfig c = base;
    c.n = n;
    c.m = n / 2;
    c.k = iteration_count(n, base.Z);
    if (system->size() < c.m) throw InvalidArgument("rate_sweep: system retains fewer modes than m");
    const MCSummary mc = mc_iterate(system, c, reps, Rng::derive(seed, n), threads);
    SweepRow row;
    row.n = n;
    row.m = c.m;
    row.k = c.k;
    row.points_used = mc.points_used;
    row.mc_error = mc.mean_error;
    row.stderr_error = mc.stderr_error;
    row.bound_iterated = iteration_bound(system->total_mass(), system->tail_after(c.m), c.m, n, c.k).back();
    row.rate_ratio = mc.mean_error / point_count_rate(static_cast<double>(row.points_used), rate);
    out.C = std::max(out.C, row.rate_ratio);
    out.rows.push_back(row);
  }
  for (auto& row : out.rows) {
    row.bound_prop = out.C * point_count_rate(static_cast<double>(row.points_used), rate);
  }
  return out;
}

}  // namespace stdinfo
