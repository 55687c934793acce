#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stdinfo/rng.hpp"

namespace stdinfo {

enum class BasisKind {
  sine_half,  // sqrt(2) sin((i - 1/2) pi t), i >= 1; the Brownian motion system
  cosine,     // 1, sqrt(2) cos(i pi t); contains the constant phi_0
  legendre,   // sqrt(2i + 1) P_i(2t - 1); contains the constant phi_0
  custom,
};

/// An orthonormal system on L2[0,1] together with the machinery to sample
/// from the densities phi_i^2.
///
/// The trigonometric families use closed-form CDFs. Everything else uses a
/// table of F_i on a 4096-cell grid (4-point Gauss-Legendre per cell) with
/// monotone piecewise-cubic Hermite interpolation; tables are built eagerly
/// for indices 0..max_index, so a BasisFamily is immutable and can be shared
/// between threads.
class BasisFamily {
 public:
  using EvalFn = std::function<double(std::size_t, double)>;

  static constexpr std::size_t kCdfCells = 4096;

  static BasisFamily sine_half();
  static BasisFamily cosine();
  static BasisFamily legendre(std::size_t max_index = 64);
  static BasisFamily custom(std::string name, EvalFn eval, std::size_t max_index,
                            bool constant_zero_mode);

  static BasisFamily from_name(const std::string& name);

  BasisKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /// True when phi_0 == 1 is part of the system.
  bool has_constant_mode() const { return constant_mode_; }
  /// Smallest admissible index (0 with a constant mode, 1 otherwise).
  std::size_t first_index() const { return constant_mode_ ? 0 : 1; }
  /// Largest admissible index (SIZE_MAX for the unbounded trigonometric systems).
  std::size_t max_index() const { return max_index_; }

  double eval(std::size_t i, double t) const;

  /// out[i] = phi_i(t) for i = 0..out.size()-1. Entries below first_index()
  /// are set to 0. Uses a resynchronised angle-rotation recurrence for the
  /// trigonometric systems.
  void eval_all(double t, std::span<double> out) const;

  /// F_i(x) = integral_0^x phi_i(s)^2 ds, clamped to x in [0,1].
  double sq_cdf(std::size_t i, double x) const;

  /// Draws from the density phi_i^2 by inverting sq_cdf (safeguarded Newton /
  /// bisection to 1e-12).
  double sample_sq(std::size_t i, Rng& rng) const;

  /// Inverse of sq_cdf at u in [0,1].
  double sq_quantile(std::size_t i, double u) const;

 private:
  struct Table;

  void check_index(std::size_t i) const;
  double table_cdf(std::size_t i, double x) const;

  BasisKind kind_ = BasisKind::sine_half;
  std::string name_;
  bool constant_mode_ = false;
  std::size_t max_index_ = 0;
  EvalFn eval_;
  std::shared_ptr<const std::vector<Table>> tables_;
};

}  // namespace stdinfo
