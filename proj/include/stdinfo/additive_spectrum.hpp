#pragma once

#include <cstddef>
#include <vector>

#include "stdinfo/spectrum.hpp"
#include "stdinfo/tensor_spectrum.hpp"

namespace stdinfo {

/// Additive field of order b in dimension d: the sum over all b-subsets of
/// coordinates of independent tensor fields on those coordinates. The
/// univariate basis must contain phi_0 == 1.
struct AdditiveModel {
  std::size_t d = 1;
  std::size_t b = 1;
  UnivariateSpectrum spec;

  AdditiveModel(std::size_t d, std::size_t b, UnivariateSpectrum spec);

  /// lambda(0)^2 + sum_{i>=1} lambda(i)^2.
  double lambda_full() const;
  /// sum_{i>=1} lambda(i)^2.
  double lambda_plus() const;
  /// E||X||^2 = C(d,b) Lambda_full^b.
  double total_mass() const;
};

/// Layer h of the additive spectrum: every eigenvalue equals
/// multiplier * prod_{l<=h} lambda(k_l)^2 and occurs `multiplicity` times
/// (once per h-subset of active coordinates).
struct HLayer {
  std::size_t h = 0;
  double multiplier = 0.0;    // C(d-h, b-h) lambda(0)^{2(b-h)}
  double multiplicity = 0.0;  // C(d, h)
  double layer_mass = 0.0;    // multiplier * multiplicity * Lambda_plus^h
  RankedSpectrum base;        // top entries of the h-fold product array (empty for h = 0)
};

/// Layer h with its first `base_count` base entries (h >= 1).
HLayer layer(const AdditiveModel& model, std::size_t h, std::size_t base_count = 0);

/// The N largest covariance eigenvalues over all layers h = 0..b, each
/// repeated once per active coordinate set. Indices are d-vectors holding 0
/// on inactive coordinates and ranks on active ones. Order: value
/// descending, then h ascending, then the base rank tuple, then the
/// lexicographic rank of the active set.
RankedSpectrum merged_top_k(const AdditiveModel& model, std::size_t count,
                            std::size_t visited_cap = 10'000'000);

/// Exhaustive reference for merged_top_k over ranks 1..max_rank per active
/// coordinate. Used by tests on finite spectra.
std::vector<RankedEntry> merged_bruteforce(const AdditiveModel& model, std::size_t max_rank);

struct AllocationPlan {
  std::size_t m = 0;
  std::vector<std::size_t> m_h;  // m_h[h-1], h = 1..b
  std::vector<double> Q_h;       // Q(h)
  double Q = 0.0;
  /// (2r-1)^{-1} sum_h Q(h) m_h^{1-2r} (ln m_h)^{2q}
  double chain_lhs = 0.0;
  /// Q m^{1-2r} (ln m)^{2q}
  double chain_rhs = 0.0;
};

/// Quasi-optimal split of m terms across the layers; defined only for power
/// spectra with q/r < -1.
AllocationPlan allocation(const AdditiveModel& model, std::size_t m);

struct RateExponents {
  double power = 0.0;    // 1 - 2r
  double log_exp = 0.0;  // 2b(r+q)-1 for q > -r, 2(q+r)-1 for q < -r
};

RateExponents rate_exponents(const AdditiveModel& model);

/// p = 1 - lambda(0)^2 / Lambda_full.
double explosion_p(const AdditiveModel& model);

/// Lambda_tilde of the spectrum with index 0 included.
double explosion_lambda_tilde(const UnivariateSpectrum& spec);

/// V = (1-fp)^{fp-1} f^{-fp} (1-p)^{(1-p)f} Lambda_tilde^f with 0^0 = 1.
double explosion_coefficient(double f, double p, double lambda_tilde);

/// V^{(1+delta) d}, the term-count bound for b/d -> f.
double explosion_term_bound(double V, std::size_t d, double delta = 0.05);

struct FixedOrderCardinality {
  double n_b = 0.0;   // n_b^avr(eps) of the b-dimensional tensor field
  double n_db = 0.0;  // (d^b / b!) Lambda_full^{-b/(2r-1)} n_b
  double beta = 0.0;
  double B = 0.0;
};

/// Leading-order term count for fixed b as eps -> 0.
FixedOrderCardinality cardinality_fixed_b(const AdditiveModel& model, double eps);

}  // namespace stdinfo
