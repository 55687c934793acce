#include "stdinfo/additive_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <tuple>

#include "stdinfo/errors.hpp"
#include "stdinfo/numerics.hpp"

namespace stdinfo {

AdditiveModel::AdditiveModel(std::size_t d_, std::size_t b_, UnivariateSpectrum spec_)
    : d(d_), b(b_), spec(std::move(spec_)) {
  if (b < 1 || b > d) throw InvalidArgument("additive model needs 1 <= b <= d");
  if (!spec.basis().has_constant_mode()) {
    throw InvalidArgument("additive model needs a basis containing phi_0 == 1 (got " +
                          spec.basis().name() + ")");
  }
  if (spec.lambda0_sq() < 0.0) throw InvalidArgument("lambda0_sq must be nonnegative");
}

double AdditiveModel::lambda_plus() const { return spectral_moments(spec).Lambda; }

double AdditiveModel::lambda_full() const { return spec.lambda0_sq() + lambda_plus(); }

double AdditiveModel::total_mass() const {
  return num::binomial(static_cast<unsigned>(d), static_cast<unsigned>(b)) *
         std::pow(lambda_full(), static_cast<double>(b));
}

namespace {

double layer_multiplier(const AdditiveModel& model, std::size_t h) {
  const auto free = static_cast<unsigned>(model.b - h);
  return num::binomial(static_cast<unsigned>(model.d - h), free) *
         num::pow0(model.spec.lambda0_sq(), static_cast<double>(free));
}

bool next_combination(std::vector<std::uint32_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::uint32_t> first_combination(std::size_t k) {
  std::vector<std::uint32_t> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = static_cast<std::uint32_t>(i);
  return c;
}

MultiIndex spread(const MultiIndex& base, const std::vector<std::uint32_t>& subset,
                  std::size_t d) {
  MultiIndex k{std::vector<std::uint32_t>(d, 0)};
  for (std::size_t i = 0; i < subset.size(); ++i) k.coords[subset[i]] = base.coords[i];
  return k;
}

struct LayerCursor {
  std::size_t h;
  double multiplier;
  std::unique_ptr<ProductEnumerator> en;
  RankedEntry current;
  std::vector<std::uint32_t> subset;

  bool advance_base() {
    auto e = en->next();
    if (!e) return false;
    current = std::move(*e);
    current.value *= multiplier;
    subset = first_combination(h);
    return true;
  }
};

}  // namespace

HLayer layer(const AdditiveModel& model, std::size_t h, std::size_t base_count) {
  if (h > model.b) throw InvalidArgument("layer index h must satisfy h <= b");
  HLayer L;
  L.h = h;
  L.multiplier = layer_multiplier(model, h);
  L.multiplicity = num::binomial(static_cast<unsigned>(model.d), static_cast<unsigned>(h));
  L.layer_mass = L.multiplier * L.multiplicity *
                 std::pow(model.lambda_plus(), static_cast<double>(h));
  if (h >= 1 && base_count > 0) L.base = top_k(model.spec, h, base_count);
  return L;
}

RankedSpectrum merged_top_k(const AdditiveModel& model, std::size_t count,
                            std::size_t visited_cap) {
  std::vector<LayerCursor> layers;
  for (std::size_t h = 0; h <= model.b; ++h) {
    const double mult = layer_multiplier(model, h);
    if (!(mult > 0.0)) continue;
    LayerCursor c{h, mult, std::make_unique<ProductEnumerator>(model.spec, h, visited_cap), {}, {}};
    if (c.advance_base()) layers.push_back(std::move(c));
  }

  auto later = [&](std::size_t a, std::size_t b) {
    const double va = layers[a].current.value, vb = layers[b].current.value;
    if (va != vb) return va < vb;
    return layers[a].h > layers[b].h;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> heads(later);
  for (std::size_t i = 0; i < layers.size(); ++i) heads.push(i);

  std::vector<RankedEntry> out;
  out.reserve(count);
  while (out.size() < count && !heads.empty()) {
    const std::size_t i = heads.top();
    heads.pop();
    LayerCursor& c = layers[i];
    out.push_back({spread(c.current.index, c.subset, model.d), c.current.value});
    if (next_combination(c.subset, model.d) || c.advance_base()) heads.push(i);
  }
  return RankedSpectrum(model.d, std::move(out), model.total_mass(), heads.empty());
}

std::vector<RankedEntry> merged_bruteforce(const AdditiveModel& model, std::size_t max_rank) {
  struct Keyed {
    RankedEntry e;
    std::size_t h;
    MultiIndex base;
    std::size_t set_rank;
  };
  std::vector<Keyed> all;
  SortedSpectrumCache cache(model.spec);
  for (std::size_t h = 0; h <= model.b; ++h) {
    const double mult = layer_multiplier(model, h);
    if (!(mult > 0.0)) continue;
    std::vector<MultiIndex> bases;
    MultiIndex k{std::vector<std::uint32_t>(h, 1)};
    while (true) {
      bases.push_back(k);
      std::size_t l = h;
      while (l > 0 && k.coords[l - 1] == max_rank) k.coords[--l] = 1;
      if (l == 0) break;
      ++k.coords[l - 1];
    }
    for (const MultiIndex& base : bases) {
      const double v = mult * rank_product(cache, base);
      if (!(v > 0.0)) continue;
      auto subset = first_combination(h);
      std::size_t rank = 0;
      do {
        all.push_back({{spread(base, subset, model.d), v}, h, base, rank++});
      } while (next_combination(subset, model.d));
    }
  }
  std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    if (a.e.value != b.e.value) return a.e.value > b.e.value;
    return std::tie(a.h, a.base, a.set_rank) < std::tie(b.h, b.base, b.set_rank);
  });
  std::vector<RankedEntry> out;
  out.reserve(all.size());
  for (auto& k : all) out.push_back(std::move(k.e));
  return out;
}

AllocationPlan allocation(const AdditiveModel& model, std::size_t m) {
  const auto p = model.spec.asymptotic_params();
  if (!p) throw InvalidArgument("allocation needs a power-law spectrum");
  if (!(p->q / p->r < -1.0)) {
    throw UnsupportedCase("allocation is defined only on the q/r < -1 branch");
  }
  if (m < model.b) throw InvalidArgument("allocation needs m >= b");
  const double r = p->r, q = p->q;
  AllocationPlan plan;
  plan.m = m;
  std::vector<double> w;
  double wsum = 0.0;
  for (std::size_t h = 1; h <= model.b; ++h) {
    const double B = asymptotic_constants(model.spec, h).B;
    const double cdh = num::binomial(static_cast<unsigned>(model.d), static_cast<unsigned>(h));
    const double Qh = layer_multiplier(model, h) * B * B * std::pow(cdh, 2.0 * r);
    plan.Q_h.push_back(Qh);
    w.push_back(std::pow(Qh, 1.0 / (2.0 * r)));
    wsum += w.back();
  }
  plan.Q = std::pow(wsum, 2.0 * r) / (2.0 * r - 1.0);
  const double md = static_cast<double>(m);
  double lhs = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto mh = static_cast<std::size_t>(std::floor(md * w[i] / wsum));
    plan.m_h.push_back(mh);
    const double x = static_cast<double>(mh);
    lhs += plan.Q_h[i] * std::pow(x, 1.0 - 2.0 * r) * std::pow(std::log(x), 2.0 * q);
  }
  plan.chain_lhs = lhs / (2.0 * r - 1.0);
  plan.chain_rhs = plan.Q * std::pow(md, 1.0 - 2.0 * r) * std::pow(std::log(md), 2.0 * q);
  return plan;
}

RateExponents rate_exponents(const AdditiveModel& model) {
  const auto p = model.spec.asymptotic_params();
  if (!p) throw InvalidArgument("rate_exponents needs a power-law spectrum");
  if (p->q == -p->r) throw UnsupportedCase("q = -r (alpha = -1) is not covered");
  RateExponents e;
  e.power = 1.0 - 2.0 * p->r;
  e.log_exp = p->q > -p->r ? 2.0 * static_cast<double>(model.b) * (p->r + p->q) - 1.0
                           : 2.0 * (p->q + p->r) - 1.0;
  return e;
}

double explosion_p(const AdditiveModel& model) {
  return 1.0 - model.spec.lambda0_sq() / model.lambda_full();
}

double explosion_lambda_tilde(const UnivariateSpectrum& spec) {
  return spectral_moments(spec, true).Lambda_tilde;
}

double explosion_coefficient(double f, double p, double lambda_tilde) {
  if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("explosion_coefficient: f must lie in [0,1]");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("explosion_coefficient: p must lie in [0,1]");
  if (!(lambda_tilde > 0.0)) throw InvalidArgument("explosion_coefficient: Lambda_tilde must be positive");
  const double fp = f * p;
  const double a = 1.0 - fp, ea = fp - 1.0;
  const double c = 1.0 - p, ec = (1.0 - p) * f;
  // At f = 1 the two bases coincide and their exponents cancel exactly.
  const double ac = a == c ? num::pow0(a, ea + ec) : num::pow0(a, ea) * num::pow0(c, ec);
  return ac * num::pow0(f, -fp) * std::pow(lambda_tilde, f);
}

double explosion_term_bound(double V, std::size_t d, double delta) {
  return std::pow(V, (1.0 + delta) * static_cast<double>(d));
}

FixedOrderCardinality cardinality_fixed_b(const AdditiveModel& model, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("cardinality_fixed_b: eps must lie in (0,1)");
  const AsymptoticConstants c = asymptotic_constants(model.spec, model.b);
  const double r = c.r;
  const double rb = r * c.beta;
  FixedOrderCardinality out;
  out.beta = c.beta;
  out.B = c.B;
  const double base = c.B * std::pow(std::abs(std::log(eps)), rb) /
                      (std::sqrt(2.0) * std::pow(r - 0.5, rb + 0.5) * eps);
  out.n_b = std::pow(base, 1.0 / (r - 0.5));
  const double bd = static_cast<double>(model.b);
  out.n_db = std::pow(static_cast<double>(model.d), bd) / std::tgamma(bd + 1.0) *
             std::pow(model.lambda_full(), -bd / (2.0 * r - 1.0)) * out.n_b;
  return out;
}

}  // namespace stdinfo
