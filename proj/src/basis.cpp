#include "stdinfo/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stdinfo/errors.hpp"

namespace stdinfo {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kResync = 128;

double legendre_normalized(std::size_t i, double t) {
  const double x = 2.0 * t - 1.0;
  if (i == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (std::size_t n = 1; n < i; ++n) {
    const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * i + 1.0) * p1;
}

// 4-point Gauss-Legendre on [-1,1].
constexpr double kGl4Nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
constexpr double kGl4Weights[4] = {0.3478548451374538, 0.6521451548625461,
                                   0.6521451548625461, 0.3478548451374538};

double hermite(double x0, double h, double f0, double f1, double d0, double d1,
               double x) {
  const double s = (x - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 +
         (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * h * d1;
}

}  // namespace

struct BasisFamily::Table {
  std::vector<double> cdf;    // F at k / kCdfCells
  std::vector<double> slope;  // limited derivative at the nodes
};

BasisFamily BasisFamily::sine_half() {
  BasisFamily b;
  b.kind_ = BasisKind::sine_half;
  b.name_ = "sine_half";
  b.constant_mode_ = false;
  b.max_index_ = kUnbounded;
  return b;
}

BasisFamily BasisFamily::cosine() {
  BasisFamily b;
  b.kind_ = BasisKind::cosine;
  b.name_ = "cosine";
  b.constant_mode_ = true;
  b.max_index_ = kUnbounded;
  return b;
}

BasisFamily BasisFamily::legendre(std::size_t max_index) {
  auto b = custom("legendre", legendre_normalized, max_index, true);
  b.kind_ = BasisKind::legendre;
  return b;
}

BasisFamily BasisFamily::custom(std::string name, EvalFn eval, std::size_t max_index,
                                bool constant_zero_mode) {
  if (!eval) throw InvalidArgument("custom basis needs an evaluation function");
  BasisFamily b;
  b.kind_ = BasisKind::custom;
  b.name_ = std::move(name);
  b.constant_mode_ = constant_zero_mode;
  b.max_index_ = max_index;
  b.eval_ = std::move(eval);

  auto tables = std::make_shared<std::vector<Table>>(max_index + 1);
  const double h = 1.0 / kCdfCells;
  for (std::size_t i = b.first_index(); i <= max_index; ++i) {
    Table& tab = (*tables)[i];
    tab.cdf.assign(kCdfCells + 1, 0.0);
    std::vector<double> dens(kCdfCells + 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < kCdfCells; ++k) {
      const double mid = (k + 0.5) * h;
      double cell = 0.0;
      for (int q = 0; q < 4; ++q) {
        const double v = b.eval_(i, mid + 0.5 * h * kGl4Nodes[q]);
        cell += kGl4Weights[q] * v * v;
      }
      acc += 0.5 * h * cell;
      tab.cdf[k + 1] = acc;
    }
    for (std::size_t k = 0; k <= kCdfCells; ++k) {
      const double v = b.eval_(i, k * h);
      dens[k] = v * v / acc;
      tab.cdf[k] /= acc;
    }
    tab.cdf[kCdfCells] = 1.0;
    // Fritsch-Carlson limiter keeps each cubic piece monotone.
    tab.slope = dens;
    for (std::size_t k = 0; k < kCdfCells; ++k) {
      const double delta = (tab.cdf[k + 1] - tab.cdf[k]) / h;
      if (delta <= 0.0) {
        tab.slope[k] = 0.0;
        tab.slope[k + 1] = 0.0;
        continue;
      }
      const double a = tab.slope[k] / delta;
      const double c = tab.slope[k + 1] / delta;
      const double r2 = a * a + c * c;
      if (r2 > 9.0) {
        const double tau = 3.0 / std::sqrt(r2);
        tab.slope[k] = tau * a * delta;
        tab.slope[k + 1] = tau * c * delta;
      }
    }
  }
  b.tables_ = std::move(tables);
  return b;
}

BasisFamily BasisFamily::from_name(const std::string& name) {
  if (name == "sine_half") return sine_half();
  if (name == "cosine") return cosine();
  if (name == "legendre") return legendre();
  throw InvalidArgument("unknown basis family '" + name + "'");
}

void BasisFamily::check_index(std::size_t i) const {
  if (i < first_index() || i > max_index_) {
    throw InvalidArgument("basis index " + std::to_string(i) + " outside " + name_ +
                          " family");
  }
}

double BasisFamily::eval(std::size_t i, double t) const {
  check_index(i);
  switch (kind_) {
    case BasisKind::sine_half:
      return std::sqrt(2.0) * std::sin((static_cast<double>(i) - 0.5) * kPi * t);
    case BasisKind::cosine:
      return i == 0 ? 1.0 : std::sqrt(2.0) * std::cos(static_cast<double>(i) * kPi * t);
    default:
      return eval_(i, t);
  }
}

namespace {

// phi_i(t) = sqrt(2) sin((i - 1/2) pi t) or sqrt(2) cos(i pi t) for i >= 1.
// Four interleaved phases z_i = exp(i theta_i) advance by w^4, w = exp(i pi t);
// each block of kResync indices restarts from one cos/sin evaluation.
template <bool Sine>
void trig_table(double t, std::span<double> out) {
  const std::size_t count = out.size();
  const double rt2 = std::sqrt(2.0);
  const double wc = std::cos(kPi * t), ws = std::sin(kPi * t);
  const double w2c = wc * wc - ws * ws, w2s = 2.0 * wc * ws;
  const double w4c = w2c * w2c - w2s * w2s, w4s = 2.0 * w2c * w2s;
  out[0] = Sine ? 0.0 : 1.0;
  for (std::size_t base = 1; base < count; base += kResync) {
    const std::size_t end = std::min(count, base + kResync);
    const double theta = (Sine ? static_cast<double>(base) - 0.5 : static_cast<double>(base)) * kPi * t;
    double zc[4], zs[4];
    zc[0] = std::cos(theta);
    zs[0] = std::sin(theta);
    for (std::size_t c = 1; c < 4; ++c) {
      zc[c] = zc[c - 1] * wc - zs[c - 1] * ws;
      zs[c] = zc[c - 1] * ws + zs[c - 1] * wc;
    }
    std::size_t i = base;
    for (; i + 4 <= end; i += 4) {
      for (std::size_t c = 0; c < 4; ++c) {
        out[i + c] = rt2 * (Sine ? zs[c] : zc[c]);
        const double nc = zc[c] * w4c - zs[c] * w4s;
        zs[c] = zc[c] * w4s + zs[c] * w4c;
        zc[c] = nc;
      }
    }
    for (std::size_t c = 0; i < end; ++i, ++c) out[i] = rt2 * (Sine ? zs[c] : zc[c]);
  }
}

}  // namespace

void BasisFamily::eval_all(double t, std::span<double> out) const {
  const std::size_t count = out.size();
  if (count == 0) return;
  switch (kind_) {
    case BasisKind::sine_half:
    case BasisKind::cosine: {
      if (kind_ == BasisKind::sine_half) {
        trig_table<true>(t, out);
      } else {
        trig_table<false>(t, out);
      }
      return;
    }
    case BasisKind::legendre: {
      const double x = 2.0 * t - 1.0;
      double p0 = 1.0, p1 = x;
      out[0] = 1.0;
      if (count > 1) out[1] = std::sqrt(3.0) * x;
      for (std::size_t n = 1; n + 1 < count; ++n) {
        const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
        out[n + 1] = std::sqrt(2.0 * (n + 1) + 1.0) * p2;
      }
      return;
    }
    case BasisKind::custom:
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = (i < first_index() || i > max_index_) ? 0.0 : eval_(i, t);
      }
      return;
  }
}

double BasisFamily::table_cdf(std::size_t i, double x) const {
  const Table& tab = (*tables_)[i];
  const double h = 1.0 / kCdfCells;
  std::size_t k = static_cast<std::size_t>(x * kCdfCells);
  if (k >= kCdfCells) return 1.0;
  return hermite(k * h, h, tab.cdf[k], tab.cdf[k + 1], tab.slope[k], tab.slope[k + 1], x);
}

double BasisFamily::sq_cdf(std::size_t i, double x) const {
  check_index(i);
  x = std::clamp(x, 0.0, 1.0);
  switch (kind_) {
    case BasisKind::sine_half: {
      const double w = (2.0 * static_cast<double>(i) - 1.0) * kPi;
      return x - std::sin(w * x) / w;
    }
    case BasisKind::cosine: {
      if (i == 0) return x;
      const double w = 2.0 * static_cast<double>(i) * kPi;
      return x + std::sin(w * x) / w;
    }
    default:
      if (i == 0 && constant_mode_) return x;
      return table_cdf(i, x);
  }
}

double BasisFamily::sq_quantile(std::size_t i, double u) const {
  check_index(i);
  u = std::clamp(u, 0.0, 1.0);
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  if (i == 0 && constant_mode_) return u;

  double lo = 0.0, hi = 1.0;
  if (kind_ == BasisKind::sine_half || kind_ == BasisKind::cosine) {
    // Safeguarded Newton with the exact density phi_i^2.
    double x = u;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
      const double f = sq_cdf(i, x) - u;
      if (f == 0.0) return x;
      if (f < 0.0) lo = x; else hi = x;
      const double phi = eval(i, x);
      const double dens = phi * phi;
      double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) < 1e-14) return next;
      x = next;
    }
    return 0.5 * (lo + hi);
  }

  const Table& tab = (*tables_)[i];
  const auto it = std::upper_bound(tab.cdf.begin(), tab.cdf.end(), u);
  const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - tab.cdf.begin() - 1));
  const double h = 1.0 / kCdfCells;
  lo = k * h;
  hi = std::min(1.0, (k + 1) * h);
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (table_cdf(i, mid) < u) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double BasisFamily::sample_sq(std::size_t i, Rng& rng) const {
  return sq_quantile(i, rng.uniform());
}

}  // namespace stdinfo
