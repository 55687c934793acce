#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "stdinfo/spectrum.hpp"

namespace stdinfo {

/// Per-coordinate ranks into the univariate spectrum. Rank 0 marks the
/// constant mode phi_0 (additive fields only); tensor fields use ranks >= 1.
struct MultiIndex {
  std::vector<std::uint32_t> coords;

  std::size_t dim() const { return coords.size(); }
  /// Number of coordinates carrying a nonconstant factor.
  std::size_t active() const;

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& k) const noexcept;
};

struct RankedEntry {
  MultiIndex index;
  double value = 0.0;
};

/// Largest eigenvalues of a multivariate field in non-increasing order,
/// with prefix sums and the analytic total mass.
class RankedSpectrum {
 public:
  RankedSpectrum() = default;
  RankedSpectrum(std::size_t dim, std::vector<RankedEntry> entries, double total_mass,
                 bool shortfall);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<RankedEntry>& entries() const { return entries_; }
  const RankedEntry& operator[](std::size_t j) const { return entries_[j]; }

  /// E||X||^2 of the full (untruncated) field.
  double total_mass() const { return total_mass_; }
  /// True once a finite spectrum has been fully enumerated.
  bool shortfall() const { return shortfall_; }

  /// Compensated sum of the first m values (m <= size()).
  double partial_sum(std::size_t m) const;
  /// total_mass - partial_sum(m), clamped at 0; exactly 0 once a finite
  /// spectrum is exhausted.
  double tail_after(std::size_t m) const;

 private:
  std::size_t dim_ = 0;
  std::vector<RankedEntry> entries_;
  std::vector<double> prefix_;  // prefix_[j] = sum of the first j values
  double total_mass_ = 0.0;
  bool shortfall_ = false;
};

/// Best-first enumeration of the products prod_l lambda^2(rank k_l) over
/// k in N^d, in non-increasing order, ties broken lexicographically on the
/// rank tuple. A priority queue holds the frontier; each popped node pushes
/// its d coordinate increments, deduplicated through a visited set.
///
/// Values are computed by multiplying the factors in ascending rank order,
/// so equal multisets of factors give bit-identical products and the
/// sequence is monotone in floating point.
class ProductEnumerator {
 public:
  ProductEnumerator(const UnivariateSpectrum& spec, std::size_t dim,
                    std::size_t visited_cap = 10'000'000);

  /// Next entry, or nullopt once a finite spectrum is exhausted. Throws
  /// BudgetExceeded when the visited set would grow past its cap.
  std::optional<RankedEntry> next();

  std::size_t visited() const { return visited_.size(); }

 private:
  struct Node {
    double value;
    MultiIndex index;
  };
  struct Later {
    bool operator()(const Node& a, const Node& b) const {
      if (a.value != b.value) return a.value < b.value;
      return a.index > b.index;
    }
  };

  double product(const MultiIndex& k);
  void push(MultiIndex k);

  std::size_t dim_;
  std::size_t cap_;
  SortedSpectrumCache cache_;
  std::priority_queue<Node, std::vector<Node>, Later> frontier_;
  std::unordered_set<MultiIndex, MultiIndexHash> visited_;
  bool emitted_empty_ = false;
};

/// lambda^2 product over the given ranks, multiplied in ascending rank order.
double rank_product(SortedSpectrumCache& cache, const MultiIndex& k);

/// The N largest tensor-product eigenvalues of dimension d.
RankedSpectrum top_k(const UnivariateSpectrum& spec, std::size_t dim, std::size_t count,
                     std::size_t visited_cap = 10'000'000);

/// Sum of the rearranged eigenvalues beyond the first m.
double tail_sum(const UnivariateSpectrum& spec, std::size_t dim, std::size_t m);

enum class AsymptoticBranch { alpha_gt_neg1, alpha_lt_neg1 };

/// Constants of lambdabar_j^2 ~ B_d^2 j^{-2r} (ln j)^{2 r beta}.
struct AsymptoticConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double B = 0.0;
  double r = 0.0;
  double mu = 0.0;
  AsymptoticBranch branch = AsymptoticBranch::alpha_gt_neg1;
};

/// Throws UnsupportedCase for alpha = -1 (not covered by the asymptotic
/// formulas) and InvalidArgument for spectra without power-law asymptotics.
AsymptoticConstants asymptotic_constants(const UnivariateSpectrum& spec, std::size_t dim);

enum class CardinalityBackend { heap, convolution };

struct CardinalityResult {
  std::uint64_t count = 0;
  double tail = 0.0;       // tail mass after `count` terms
  double threshold = 0.0;  // eps^2 Lambda^d
  CardinalityBackend backend = CardinalityBackend::heap;
};

/// min{ m : sum_{j>m} lambdabar_j^2 <= eps^2 Lambda^d }.
///
/// The heap backend enumerates with ProductEnumerator and stops with
/// BudgetExceeded after `max_terms`. The convolution backend is exact for
/// explicit spectra: it walks the atom-count compositions of d (the d-fold
/// convolution of the multiset of ln lambda^2 values) in decreasing value,
/// weighting each by its multinomial multiplicity.
CardinalityResult cardinality_relative(const UnivariateSpectrum& spec, std::size_t dim,
                                       double eps, CardinalityBackend backend,
                                       std::uint64_t max_terms = 10'000'000);

/// Limit law for the relative cardinality as d grows:
/// (ln m_d(eps) - d ln Lambda_tilde) / sqrt(d) -> 2 q*, with q* = sigma
/// normal_tail_inverse(eps^2).
struct TheoremPrediction {
  double q_star = 0.0;
  double sigma = 0.0;
  double ln_lambda_tilde = 0.0;
  double predicted_ln_m(std::size_t dim) const;
};

TheoremPrediction theorem_prediction(const UnivariateSpectrum& spec, double eps);

}  // namespace stdinfo
