#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stdinfo/basis.hpp"

namespace stdinfo {

enum class SpectrumKind { power_log, explicit_values, brownian_motion };

/// Parameters of lambda(i) ~ mu i^{-r} (ln i)^q.
struct PowerLogParams {
  double mu = 1.0;
  double r = 1.0;
  double q = 0.0;
};

/// One eigenvalue in rank order: `value` = lambda^2 of the univariate
/// eigenvalue with the given original index.
struct RankedValue {
  double value = 0.0;
  std::size_t original_index = 0;
};

/// Eigenvalues lambda(i)^2, i >= 1, of a covariance on [0,1] with its
/// eigenfunction system, plus lambda(0)^2 for additive fields.
///
/// power_log realises the asymptotic class with the concrete sequence
/// lambda(i)^2 = mu^2 i^{-2r} (ln(i+1))^{2q}, which keeps i = 1 finite and
/// nonzero. Multi-indices elsewhere in the library refer to *ranks*: rank 1
/// is the largest eigenvalue. For the built-in families rank == original
/// index, except power_log with q > 0 whose head is not monotone, and
/// unsorted explicit lists.
class UnivariateSpectrum {
 public:
  static UnivariateSpectrum power_log(double mu, double r, double q, double lambda0_sq = 0.0,
                                      BasisFamily basis = BasisFamily::sine_half());
  static UnivariateSpectrum explicit_values(std::vector<double> values, double lambda0_sq = 0.0,
                                            BasisFamily basis = BasisFamily::sine_half());
  static UnivariateSpectrum brownian_motion(double lambda0_sq = 0.0,
                                            BasisFamily basis = BasisFamily::sine_half());

  SpectrumKind kind() const { return kind_; }
  std::string kind_name() const;
  const BasisFamily& basis() const { return basis_; }
  double lambda0_sq() const { return lambda0_sq_; }

  /// lambda(i)^2 by original index, i >= 1.
  double eigenvalue_sq(std::size_t i) const;

  /// Number of nonzero eigenvalues, or nullopt for infinite families.
  std::optional<std::size_t> nonzero_count() const;

  /// The `count` largest eigenvalues in non-increasing order (ties by
  /// original index). Shorter than `count` only for finite spectra.
  std::vector<RankedValue> sorted_prefix(std::size_t count) const;

  /// (mu, r, q) of the asymptotic class, if the family has one. Brownian
  /// motion maps to (1/pi, 1, 0).
  std::optional<PowerLogParams> asymptotic_params() const;

  const PowerLogParams& power_log_params() const { return params_; }
  const std::vector<double>& explicit_list() const { return values_; }

  /// Returns a copy with a different lambda(0)^2 and/or basis.
  UnivariateSpectrum with_lambda0_sq(double lambda0_sq) const;
  UnivariateSpectrum with_basis(BasisFamily basis) const;

 private:
  UnivariateSpectrum() = default;

  SpectrumKind kind_ = SpectrumKind::brownian_motion;
  PowerLogParams params_;
  std::vector<double> values_;  // explicit: original order
  std::vector<RankedValue> explicit_sorted_;
  std::size_t monotone_from_ = 1;  // power_log: lambda^2 decreasing for i >= this
  double lambda0_sq_ = 0.0;
  BasisFamily basis_ = BasisFamily::sine_half();
};

/// Incrementally extended rank-ordered view of a spectrum. Not thread-safe;
/// each enumerator owns one.
class SortedSpectrumCache {
 public:
  explicit SortedSpectrumCache(const UnivariateSpectrum& spec);

  /// lambda^2 at rank (1-based); 0 past the end of a finite spectrum.
  double value(std::size_t rank);
  std::size_t original_index(std::size_t rank);
  /// Number of nonzero ranks, if finite.
  std::optional<std::size_t> limit() const { return limit_; }

 private:
  void ensure(std::size_t rank);

  const UnivariateSpectrum* spec_;
  std::vector<RankedValue> prefix_;
  std::optional<std::size_t> limit_;
};

struct SpectralMoments {
  double Lambda = 0.0;        // sum lambda(i)^2
  double M = 0.0;             // -sum ln lambda(i) lambda(i)^2 / Lambda
  double M2 = 0.0;            // sum |ln lambda(i)|^2 lambda(i)^2
  double sigma_sq = 0.0;      // M2 / Lambda - M^2
  double Lambda_tilde = 0.0;  // Lambda e^{2M}
  bool degenerate = false;    // all nonzero eigenvalues equal (sigma_sq == 0)
};

/// Spectral moments over i >= 1; with include_zero the index i = 0
/// (lambda(0)^2) joins every sum, which is the convention for additive fields.
/// Explicit spectra are summed left to right in original order; infinite
/// families are summed until the integral tail estimate is below
/// 1e-12 Lambda and the estimate is added.
SpectralMoments spectral_moments(const UnivariateSpectrum& spec, bool include_zero = false);

/// Sum of lambda(i)^{1/r} for power_log spectra (finite only when q/r < -1).
double power_log_root_sum(const UnivariateSpectrum& spec);

}  // namespace stdinfo
