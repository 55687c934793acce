#include "stdinfo/numerics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>

#include "stdinfo/errors.hpp"

namespace stdinfo::num {

double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_tail_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("normal_tail_inverse: p must lie in (0,1)");
  }
  if (p == 0.5) return 0.0;
  // Newton on ln tail(x) - ln p inside a shrinking bracket; tail is decreasing.
  double lo = -40.0;
  double hi = 40.0;
  double x = p < 0.5 ? std::sqrt(-2.0 * std::log(p)) : -std::sqrt(-2.0 * std::log1p(-p));
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  const double log_p = std::log(p);
  for (int iter = 0; iter < 200; ++iter) {
    const double t = normal_tail(x);
    const double h = std::log(t) - log_p;
    if (h == 0.0) return x;
    if (h > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    double next = x + h * t / density;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4e-16 * (1.0 + std::abs(x))) return next;
    x = next;
    if (hi - lo <= 4e-16 * (1.0 + std::abs(x))) break;
  }
  return x;
}

double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r) < 9007199254740992.0 ? std::round(r) : r;
}

std::uint64_t binomial_u64(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) {
      throw BudgetExceeded("binomial coefficient overflows 64 bits");
    }
  }
  return static_cast<std::uint64_t>(r);
}

double pow0(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  return std::pow(base, exponent);
}

double integrate_log_domain(const std::function<double(double)>& g, double u0) {
  // u = u0 e^w: power-law and logarithmic tails both become at least
  // exponentially decaying in w, which exp_sinh resolves to ~1e-14.
  if (!(u0 > 0.0)) throw InvalidArgument("integrate_log_domain: need u0 > 0");
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  auto h = [&g, u0](double w) {
    const double u = u0 * std::exp(w);
    if (!std::isfinite(u)) return 0.0;
    const double v = g(u) * u;
    return std::isfinite(v) ? v : 0.0;
  };
  return integrator.integrate(h, 0.0, std::numeric_limits<double>::infinity(),
                              1e-14, &error, &l1);
}

double integrate_to_infinity(const std::function<double(double)>& f, double a) {
  if (!(a > 1.0)) throw InvalidArgument("integrate_to_infinity: need a > 1");
  auto g = [&f](double u) {
    const double x = std::exp(u);
    return std::isfinite(x) ? f(x) * x : 0.0;
  };
  return integrate_log_domain(g, std::log(a));
}

SeriesResult sum_series(const std::function<double(double)>& f,
                        std::uint64_t first, double rel_tol,
                        std::uint64_t max_terms,
                        const std::function<double(double)>& log_integrand) {
  CompensatedSum<double> acc;
  std::uint64_t i = first;
  std::uint64_t checkpoint = first + 64;
  const std::uint64_t last = first + max_terms;
  SeriesResult out;
  while (true) {
    for (; i < checkpoint && i < last; ++i) acc.add(f(static_cast<double>(i)));
    // Tail beyond the terms summed so far: sum_{j >= i} f(j).
    const double a = static_cast<double>(i) - 0.5;
    const double h = 1e-3 * a;
    const double deriv = (f(a + h) - f(a - h)) / (2.0 * h);
    const double integral = log_integrand
                                ? integrate_log_domain(log_integrand, std::log(a))
                                : integrate_to_infinity(f, a);
    const double tail = integral - deriv / 24.0;
    const double partial = acc.value();
    if (std::abs(tail) <= rel_tol * std::abs(partial) || i >= last) {
      out.terms = i - first;
      out.tail_estimate = tail;
      out.value = partial + tail;
      return out;
    }
    checkpoint = std::min<std::uint64_t>(last, checkpoint * 4);
  }
}

}  // namespace stdinfo::num
