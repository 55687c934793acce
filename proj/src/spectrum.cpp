#include "stdinfo/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "stdinfo/errors.hpp"
#include "stdinfo/numerics.hpp"

namespace stdinfo {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ln(e^u + 1) without overflow.
double log1p_exp(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double power_log_value(const PowerLogParams& p, double x) {
  return p.mu * p.mu * std::pow(x, -2.0 * p.r) * std::pow(std::log(x + 1.0), 2.0 * p.q);
}

// ln lambda^2 at x = e^u.
double power_log_log_value(const PowerLogParams& p, double u) {
  return 2.0 * std::log(p.mu) - 2.0 * p.r * u + 2.0 * p.q * std::log(log1p_exp(u));
}

double brownian_value(double x) {
  const double s = x - 0.5;
  return 1.0 / (kPi * kPi * s * s);
}

// e^u * lambda^2(e^u) for Brownian motion.
double brownian_scaled(double u) {
  const double e = std::exp(-u);
  const double s = 1.0 - 0.5 * e;
  return e / (kPi * kPi * s * s);
}

bool by_value_desc(const RankedValue& a, const RankedValue& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.original_index < b.original_index;
}

}  // namespace

UnivariateSpectrum UnivariateSpectrum::power_log(double mu, double r, double q, double lambda0_sq,
                                                 BasisFamily basis) {
  if (!(mu > 0.0)) throw InvalidArgument("power_log: mu must be positive");
  if (!(r > 0.5)) throw Divergent("power_log: r must exceed 1/2 for sum lambda(i)^2 to converge");
  if (q == r) throw InvalidArgument("power_log: q == r is excluded from the asymptotic class");
  if (!(lambda0_sq >= 0.0)) throw InvalidArgument("lambda0_sq must be nonnegative");
  UnivariateSpectrum s;
  s.kind_ = SpectrumKind::power_log;
  s.params_ = {mu, r, q};
  s.lambda0_sq_ = lambda0_sq;
  s.basis_ = std::move(basis);
  if (q > 0.0) {
    // d/dx ln lambda^2 < 0  <=>  r (x+1) ln(x+1) > q x; the left side grows faster.
    std::size_t x = 1;
    while (!(r * (x + 1.0) * std::log(x + 1.0) > q * static_cast<double>(x))) ++x;
    s.monotone_from_ = x;
  }
  return s;
}

UnivariateSpectrum UnivariateSpectrum::explicit_values(std::vector<double> values,
                                                       double lambda0_sq, BasisFamily basis) {
  if (values.empty()) throw InvalidArgument("explicit spectrum needs at least one value");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("explicit spectrum values must be finite and nonnegative");
    }
  }
  if (!(lambda0_sq >= 0.0)) throw InvalidArgument("lambda0_sq must be nonnegative");
  UnivariateSpectrum s;
  s.kind_ = SpectrumKind::explicit_values;
  s.values_ = std::move(values);
  s.lambda0_sq_ = lambda0_sq;
  s.basis_ = std::move(basis);
  for (std::size_t i = 0; i < s.values_.size(); ++i) {
    if (s.values_[i] > 0.0) s.explicit_sorted_.push_back({s.values_[i], i + 1});
  }
  std::stable_sort(s.explicit_sorted_.begin(), s.explicit_sorted_.end(), by_value_desc);
  if (s.explicit_sorted_.empty()) throw InvalidArgument("explicit spectrum is identically zero");
  if (s.values_.size() > s.basis_.max_index()) {
    throw InvalidArgument("explicit spectrum longer than its basis family");
  }
  return s;
}

UnivariateSpectrum UnivariateSpectrum::brownian_motion(double lambda0_sq, BasisFamily basis) {
  if (!(lambda0_sq >= 0.0)) throw InvalidArgument("lambda0_sq must be nonnegative");
  UnivariateSpectrum s;
  s.kind_ = SpectrumKind::brownian_motion;
  s.lambda0_sq_ = lambda0_sq;
  s.basis_ = std::move(basis);
  return s;
}

std::string UnivariateSpectrum::kind_name() const {
  switch (kind_) {
    case SpectrumKind::power_log: return "power_log";
    case SpectrumKind::explicit_values: return "explicit";
    case SpectrumKind::brownian_motion: return "brownian_motion";
  }
  return "unknown";
}

double UnivariateSpectrum::eigenvalue_sq(std::size_t i) const {
  if (i == 0) {
    throw InvalidArgument("eigenvalue_sq: index 0 is lambda(0), read it from lambda0_sq()");
  }
  switch (kind_) {
    case SpectrumKind::power_log: return power_log_value(params_, static_cast<double>(i));
    case SpectrumKind::explicit_values: return i <= values_.size() ? values_[i - 1] : 0.0;
    case SpectrumKind::brownian_motion: return brownian_value(static_cast<double>(i));
  }
  return 0.0;
}

std::optional<std::size_t> UnivariateSpectrum::nonzero_count() const {
  if (kind_ == SpectrumKind::explicit_values) return explicit_sorted_.size();
  return std::nullopt;
}

std::vector<RankedValue> UnivariateSpectrum::sorted_prefix(std::size_t count) const {
  std::vector<RankedValue> out;
  switch (kind_) {
    case SpectrumKind::explicit_values:
      out.assign(explicit_sorted_.begin(),
                 explicit_sorted_.begin() + std::min(count, explicit_sorted_.size()));
      return out;
    case SpectrumKind::brownian_motion:
      out.reserve(count);
      for (std::size_t i = 1; i <= count; ++i) out.push_back({brownian_value(i), i});
      return out;
    case SpectrumKind::power_log: {
      // Past monotone_from_ the sequence decreases, so the `count` largest
      // values all have index below count + monotone_from_.
      const std::size_t scan = count + monotone_from_;
      out.reserve(scan);
      for (std::size_t i = 1; i <= scan; ++i) out.push_back({eigenvalue_sq(i), i});
      if (monotone_from_ > 1) std::stable_sort(out.begin(), out.end(), by_value_desc);
      out.resize(count);
      return out;
    }
  }
  return out;
}

std::optional<PowerLogParams> UnivariateSpectrum::asymptotic_params() const {
  switch (kind_) {
    case SpectrumKind::power_log: return params_;
    case SpectrumKind::brownian_motion: return PowerLogParams{1.0 / kPi, 1.0, 0.0};
    case SpectrumKind::explicit_values: return std::nullopt;
  }
  return std::nullopt;
}

UnivariateSpectrum UnivariateSpectrum::with_lambda0_sq(double lambda0_sq) const {
  if (!(lambda0_sq >= 0.0)) throw InvalidArgument("lambda0_sq must be nonnegative");
  UnivariateSpectrum s = *this;
  s.lambda0_sq_ = lambda0_sq;
  return s;
}

UnivariateSpectrum UnivariateSpectrum::with_basis(BasisFamily basis) const {
  UnivariateSpectrum s = *this;
  s.basis_ = std::move(basis);
  return s;
}

SortedSpectrumCache::SortedSpectrumCache(const UnivariateSpectrum& spec)
    : spec_(&spec), limit_(spec.nonzero_count()) {}

void SortedSpectrumCache::ensure(std::size_t rank) {
  if (rank <= prefix_.size()) return;
  if (limit_ && prefix_.size() == *limit_) return;
  std::size_t want = std::max<std::size_t>({rank, 2 * prefix_.size(), 64});
  if (limit_) want = std::min(want, *limit_);
  prefix_ = spec_->sorted_prefix(want);
}

double SortedSpectrumCache::value(std::size_t rank) {
  if (rank == 0) return spec_->lambda0_sq();
  ensure(rank);
  return rank <= prefix_.size() ? prefix_[rank - 1].value : 0.0;
}

std::size_t SortedSpectrumCache::original_index(std::size_t rank) {
  if (rank == 0) return 0;
  ensure(rank);
  if (rank > prefix_.size()) throw InvalidArgument("rank beyond the nonzero spectrum");
  return prefix_[rank - 1].original_index;
}

SpectralMoments spectral_moments(const UnivariateSpectrum& spec, bool include_zero) {
  double lambda = 0.0, s1 = 0.0, m2 = 0.0;
  bool degenerate = false;

  const double l0 = include_zero ? spec.lambda0_sq() : 0.0;
  auto add_term = [&](double v) {
    if (v <= 0.0) return;
    const double lv = std::log(v);
    lambda += v;
    s1 += 0.5 * lv * v;
    m2 += 0.25 * lv * lv * v;
  };

  switch (spec.kind()) {
    case SpectrumKind::explicit_values: {
      add_term(l0);
      for (double v : spec.explicit_list()) add_term(v);
      double first = 0.0;
      degenerate = true;
      auto check = [&](double v) {
        if (v <= 0.0) return;
        if (first == 0.0) first = v;
        else if (v != first) degenerate = false;
      };
      check(l0);
      for (double v : spec.explicit_list()) check(v);
      break;
    }
    case SpectrumKind::power_log:
    case SpectrumKind::brownian_motion: {
      const bool pl = spec.kind() == SpectrumKind::power_log;
      const PowerLogParams p = spec.power_log_params();
      auto value = [&](double x) { return pl ? power_log_value(p, x) : brownian_value(x); };
      // e^u lambda^2(e^u) and ln lambda^2(e^u), evaluated without overflow.
      auto scaled = [&](double u) {
        return pl ? std::exp(power_log_log_value(p, u) + u) : brownian_scaled(u);
      };
      auto log_value = [&](double u) {
        return pl ? power_log_log_value(p, u) : std::log(brownian_scaled(u)) - u;
      };
      const auto lam = num::sum_series(value, 1, 1e-12, std::uint64_t{1} << 16, scaled);
      const auto s = num::sum_series(
          [&](double x) { const double v = value(x); return 0.5 * std::log(v) * v; }, 1, 1e-12,
          std::uint64_t{1} << 16, [&](double u) { return 0.5 * log_value(u) * scaled(u); });
      const auto sq = num::sum_series(
          [&](double x) { const double v = value(x), lv = std::log(v); return 0.25 * lv * lv * v; },
          1, 1e-12, std::uint64_t{1} << 16,
          [&](double u) { const double lv = log_value(u); return 0.25 * lv * lv * scaled(u); });
      lambda = lam.value;
      s1 = s.value;
      m2 = sq.value;
      if (l0 > 0.0) {
        const double lv = std::log(l0);
        lambda += l0;
        s1 += 0.5 * lv * l0;
        m2 += 0.25 * lv * lv * l0;
      }
      break;
    }
  }

  SpectralMoments out;
  out.Lambda = lambda;
  out.M = -s1 / lambda;
  out.M2 = m2;
  out.degenerate = degenerate;
  out.sigma_sq = degenerate ? 0.0 : std::max(0.0, m2 / lambda - out.M * out.M);
  out.Lambda_tilde = lambda * std::exp(2.0 * out.M);
  return out;
}

double power_log_root_sum(const UnivariateSpectrum& spec) {
  const auto p = spec.asymptotic_params();
  if (!p) throw InvalidArgument("power_log_root_sum needs a power-law spectrum");
  if (spec.kind() == SpectrumKind::brownian_motion || !(p->q / p->r < -1.0)) {
    throw Divergent("sum lambda(i)^{1/r} diverges unless q/r < -1");
  }
  const double a = p->q / p->r;
  const double mu_root = std::pow(p->mu, 1.0 / p->r);
  auto term = [&](double x) { return mu_root / x * std::pow(std::log(x + 1.0), a); };
  auto scaled = [&](double u) { return mu_root * std::pow(log1p_exp(u), a); };
  return num::sum_series(term, 1, 1e-13, std::uint64_t{1} << 16, scaled).value;
}

}  // namespace stdinfo
