#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stdinfo/field_sim.hpp"
#include "stdinfo/rng.hpp"

namespace stdinfo {

/// Parameters of the randomized point-value algorithm: n points per pass,
/// span of the first m modes, k passes.
struct ApproxConfig {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 1;
  double Z = 2.0;
  std::size_t S = 8;       // candidate designs per pass (1 = plain random design)
  std::size_t R_cal = 64;  // calibration fields for design scoring
  std::uint64_t seed = 0;

  /// m = floor(n/2), Z = 2p + 1, k = ceil(Z log2 n) + 1.
  static ApproxConfig defaults(std::size_t n, double p, std::uint64_t seed = 0);
};

/// ceil(Z log2 n) + 1.
std::size_t iteration_count(std::size_t n, double Z);

/// All violated constraints, empty when the config is usable.
std::vector<std::string> config_problems(const ApproxConfig& c);
/// Throws InvalidArgument listing config_problems().
void check_config(const ApproxConfig& c);

/// E||Y_m^perp||^2 <= C1 m^{-2p} (ln m)^{log_exp} E||Y||^2.
struct RateModel {
  double p = 0.5;
  double log_exp = 0.0;
  double C1 = 1.0;
  /// Log exponent of the point-count rate N^{-2p} (ln N)^{log_exp + 2p}.
  double prop_log_exp() const { return log_exp + 2.0 * p; }
};

/// p = r - 1/2, log_exp = 2 r beta with beta of the d-fold tensor field.
RateModel tensor_rate_model(const UnivariateSpectrum& spec, std::size_t d);
/// Same for an additive field (beta of the dominating layer).
RateModel additive_rate_model(const AdditiveModel& model);
/// Smallest C1 making the rate hold on the given span sizes (m >= 2).
double fit_rate_constant(const SpectralSystem& system, const RateModel& rate,
                         std::span<const std::size_t> m_grid);

/// n points with the mixture component that generated each.
struct Design {
  std::size_t dim = 0;
  std::vector<double> points;         // n x dim, row-major
  std::vector<std::uint32_t> labels;  // mode j (0-based) per point
  std::size_t size() const { return labels.size(); }
  std::span<const double> point(std::size_t l) const {
    return std::span<const double>(points.data() + l * dim, dim);
  }
};

/// u_m(t) = (1/m) sum_{j<m} phi_j(t)^2.
double density(const SpectralSystem& system, std::size_t m, std::span<const double> t);

/// n i.i.d. points from u_m: pick j uniformly in the span, then sample each
/// coordinate from the univariate phi^2 density of its factor.
Design draw_design(const SpectralSystem& system, std::size_t m, std::size_t n, Rng& rng);

using PointFunction = std::function<double(std::span<const double>)>;

/// Estimates of the first m coefficients of g from its values on the design.
std::vector<double> estimate_coefficients(const SpectralSystem& system, std::size_t m,
                                          const Design& design, const PointFunction& g);

/// Same, from a design matrix (n x lda, first m columns used) and values.
std::vector<double> estimate_from_matrix(std::span<const double> phi, std::size_t n,
                                         std::size_t lda, std::size_t m,
                                         std::span<const double> values);

struct ApproxResult {
  std::size_t n = 0, m = 0, k = 0;
  std::vector<double> estimates;  // a_j, j < m
  std::size_t points_used = 0;
  /// ||Y - A_i Y||^2 for i = 0..k, retained part plus the analytic tail.
  std::vector<double> err_trace;
  std::vector<double> in_span_trace;
  std::vector<double> out_span_trace;
  /// x + (m/n)^i (E||Y||^2 - x), x = E||Y_m^perp||^2 / (1 - m/n).
  std::vector<double> bound_trace;
  /// Point values of Y queried on each pass (the residual is Y minus a
  /// known combination of basis functions, so each point costs one query).
  std::size_t queries = 0;
};

/// Closed-form iteration bound for i = 0..k.
std::vector<double> iteration_bound(double total_mass, double tail_m, std::size_t m,
                                    std::size_t n, std::size_t k);

/// One pass A_tau on a realization with the given design.
ApproxResult single_pass(const FieldRealization& fr, std::size_t m, const Design& design);

/// Mean over the calibration fields of ||g - A_tau g||^2 (retained part)
/// when the design with full design matrix `phi` (n x T) is applied.
double score_design(const SpectralSystem& system, std::size_t m, std::span<const double> phi,
                    std::size_t n, const std::vector<std::vector<double>>& calibration);

struct Selection {
  Design design;
  std::vector<double> phi;     // n x T design matrix of the chosen design
  std::vector<double> scores;  // per candidate; empty when S = 1
  std::size_t chosen = 0;
};

/// Best of S random designs, scored on common calibration fields.
Selection select_design(const SpectralSystem& system, std::size_t m, std::size_t n,
                        std::size_t S, const std::vector<std::vector<double>>& calibration,
                        Rng& rng);

/// k passes A_i = A_{i-1} + A_{tau_i}(Y - A_{i-1} Y) with a fresh design per
/// pass (selected among S candidates when S > 1).
ApproxResult iterate(const FieldRealization& fr, const ApproxConfig& config);

struct MCSummary {
  std::size_t reps = 0;
  std::size_t points_used = 0;
  double mean_error = 0.0;  // mean of the final err_trace entry
  double stderr_error = 0.0;
  double mean_sq_norm = 0.0;                // mean retained ||Y||^2
  std::vector<double> mean_trace;           // mean err_trace
  std::vector<double> mean_in_span_trace;   // mean in_span trace
  std::vector<double> stderr_trace;         // standard error of mean_trace
  std::vector<double> bound_trace;
  std::vector<double> final_errors;         // per replication
};

/// Replications r = 0..reps-1 with field seed stream (seed, 2r) and
/// algorithm seed derive(seed, 2r+1). threads = 0 uses the OpenMP default.
/// Results are reduced in replication order, so they do not depend on the
/// thread count.
MCSummary mc_iterate(SystemPtr system, const ApproxConfig& config, std::size_t reps,
                     std::uint64_t seed, int threads = 0);

struct SweepRow {
  std::size_t n = 0, m = 0, k = 0, points_used = 0;
  double mc_error = 0.0;
  double stderr_error = 0.0;
  double bound_iterated = 0.0;  // E||Y_m^perp||^2/(1-m/n) + (m/n)^k E||Y||^2
  double bound_prop = 0.0;   // C N^{-2p} (ln N)^{log_exp + 2p}, C fitted over the sweep
  double rate_ratio = 0.0;   // mc_error / (N^{-2p} (ln N)^{log_exp + 2p})
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double C = 0.0;
};

/// Runs mc_iterate for each n with m = floor(n/2), k = ceil(Z log2 n) + 1.
/// `system` must retain at least 4 floor(n_max/2) modes.
SweepResult rate_sweep(SystemPtr system, std::span<const std::size_t> n_grid,
                       const ApproxConfig& base, const RateModel& rate, std::size_t reps,
                       std::uint64_t seed, int threads = 0);

/// N^{-2p} (ln N)^{log_exp + 2p}.
double point_count_rate(double N, const RateModel& rate);

}  // namespace stdinfo
