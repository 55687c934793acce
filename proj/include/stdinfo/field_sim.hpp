#pragma once

#include <cstddef>
#include <iosfwd>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "stdinfo/additive_spectrum.hpp"
#include "stdinfo/rng.hpp"
#include "stdinfo/spectrum.hpp"
#include "stdinfo/tensor_spectrum.hpp"

namespace stdinfo {

/// max(4m, 4096): default number of retained KL terms for span size m.
std::size_t default_truncation(std::size_t m);

/// The first T eigenpairs of a tensor or additive field in rank order,
/// with everything needed to evaluate the eigenfunctions and to sample
/// from their squares. Immutable; shared by realizations and designs.
class SpectralSystem {
 public:
  static std::shared_ptr<const SpectralSystem> tensor(const UnivariateSpectrum& spec,
                                                      std::size_t d, std::size_t T);
  static std::shared_ptr<const SpectralSystem> additive(const AdditiveModel& model,
                                                        std::size_t T);
  /// Wraps an already ranked spectrum (indices are ranks into `spec`).
  static std::shared_ptr<const SpectralSystem> from_ranked(const UnivariateSpectrum& spec,
                                                           RankedSpectrum ranked,
                                                           bool additive);

  std::size_t dim() const { return ranked_.dim(); }
  std::size_t size() const { return ranked_.size(); }
  bool is_additive() const { return additive_; }
  const UnivariateSpectrum& spectrum() const { return spec_; }
  const RankedSpectrum& ranked() const { return ranked_; }
  const MultiIndex& index(std::size_t j) const { return ranked_[j].index; }
  double value(std::size_t j) const { return ranked_[j].value; }

  /// E||Y||^2 of the untruncated field.
  double total_mass() const { return ranked_.total_mass(); }
  /// Expected mass of the modes beyond the retained T.
  double analytic_tail() const { return ranked_.tail_after(size()); }
  /// E||Y_m^perp||^2 of the untruncated field.
  double tail_after(std::size_t m) const { return ranked_.tail_after(m); }

  /// Basis index of a rank (rank 0 is phi_0).
  std::size_t original_index(std::size_t rank) const { return rank_to_index_[rank]; }
  std::size_t max_rank() const { return rank_to_index_.size() - 1; }
  /// Rank tuples of all retained modes, row-major (size() x dim()).
  std::span<const std::uint32_t> flat_indices() const { return flat_; }
  /// True for a one-dimensional system whose j-th mode has rank j + 1.
  bool contiguous() const { return contiguous_; }

  /// Per-coordinate values phi_{original(rank)}(t) for rank = 0..max_rank().
  /// `out` must hold max_rank() + 1 entries; `scratch` is resized as needed.
  void eval_ranks(double t, std::span<double> out, std::vector<double>& scratch) const;

  /// phi_j(t) for the first `cols` modes at point t (dim() coordinates).
  void eval_modes(std::span<const double> t, std::size_t cols, std::span<double> out) const;

  /// Draws one point from the density phi_j^2 of mode j.
  void sample_mode(std::size_t j, Rng& rng, std::span<double> point) const;

 private:
  SpectralSystem(UnivariateSpectrum spec, RankedSpectrum ranked, bool additive);

  UnivariateSpectrum spec_;
  RankedSpectrum ranked_;
  bool additive_ = false;
  std::vector<std::size_t> rank_to_index_;
  std::vector<std::uint32_t> flat_;
  std::size_t max_original_ = 0;
  bool identity_ = false;  // rank r is basis index r for every retained rank
  bool contiguous_ = false;
};

using SystemPtr = std::shared_ptr<const SpectralSystem>;

/// One sample path: c_j = lambda_j xi_j over the retained modes.
struct FieldRealization {
  SystemPtr system;
  std::vector<double> coefficients;

  double eval_at(std::span<const double> t) const;
  /// Retained squared norm sum c_j^2.
  double sq_norm() const;
};

/// Draws the coefficients in mode order, one normal per mode.
FieldRealization simulate(SystemPtr system, Rng& rng);

struct ErrorDecomposition {
  double in_span = 0.0;        // sum_{j<m} (a_j - c_j)^2
  double out_span = 0.0;       // sum_{j>=m, retained} c_j^2
  double analytic_tail = 0.0;  // expected mass beyond the retained modes
  double total() const { return in_span + out_span + analytic_tail; }
};

/// Parseval split of ||Y - sum_{j<m} a_j phi_j||^2 with m = estimates.size().
ErrorDecomposition exact_sq_error(const FieldRealization& fr, std::span<const double> estimates);

/// Sum of squares of coefficients from index m on (compensated, fixed order).
double out_span_mass(std::span<const double> coefficients, std::size_t m);

/// CSV with header k1,...,kd,coefficient; k_l are basis indices.
void write_realization_csv(const FieldRealization& fr, std::ostream& os);
/// Reads coefficients written by write_realization_csv for the same system.
FieldRealization read_realization_csv(SystemPtr system, std::istream& is);

}  // namespace stdinfo
