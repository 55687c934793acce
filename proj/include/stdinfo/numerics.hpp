#pragma once

#include <cstdint>
#include <functional>

namespace stdinfo::num {

/// Neumaier-compensated accumulator.
template <typename Real = double>
class CompensatedSum {
 public:
  void add(Real x) {
    const Real t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(Real x) {
    add(x);
    return *this;
  }
  Real value() const { return sum_ + comp_; }

 private:
  Real sum_ = 0;
  Real comp_ = 0;
};

/// Upper tail of the standard normal law, P(Z > x).
double normal_tail(double x);

/// Inverse of normal_tail: returns x with P(Z > x) = p, p in (0,1).
/// Safeguarded Newton on erfc inside a shrinking bisection bracket;
/// relative accuracy better than 1e-10 across (1e-300, 1 - 1e-16).
double normal_tail_inverse(double p);

/// Binomial coefficient as a double; exact while the result fits in 2^53.
double binomial(unsigned n, unsigned k);

/// Binomial coefficient as an integer; throws BudgetExceeded on overflow.
std::uint64_t binomial_u64(unsigned n, unsigned k);

/// pow with the convention 0^0 = 1.
double pow0(double base, double exponent);

struct SeriesResult {
  double value = 0.0;
  std::uint64_t terms = 0;     // terms summed explicitly
  double tail_estimate = 0.0;  // integral estimate of the omitted tail (added to value)
};

/// Sums f(first) + f(first+1) + ... for a term function that is smooth and
/// eventually monotone in x. Terms are summed explicitly until the integral
/// estimate of the remaining tail drops below rel_tol * |partial sum| or
/// max_terms is reached; the remaining tail is then added as
/// integral_{N+1/2}^inf f(x) dx - f'(N+1/2)/24 (midpoint Euler-Maclaurin).
///
/// `log_integrand`, when given, must return f(e^u) e^u evaluated stably for
/// large u; it is needed for logarithmically decaying tails whose mass lies
/// beyond the double range of x.
SeriesResult sum_series(const std::function<double(double)>& f,
                        std::uint64_t first = 1, double rel_tol = 1e-12,
                        std::uint64_t max_terms = std::uint64_t{1} << 16,
                        const std::function<double(double)>& log_integrand = {});

/// integral_a^inf f(x) dx for a decaying integrand (a > 1).
double integrate_to_infinity(const std::function<double(double)>& f, double a);

/// integral_{u0}^inf g(u) du for a decaying integrand (u0 > 0).
double integrate_log_domain(const std::function<double(double)>& g, double u0);

}  // namespace stdinfo::num
