#include "stdinfo/tensor_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stdinfo/errors.hpp"
#include "stdinfo/numerics.hpp"

namespace stdinfo {

std::size_t MultiIndex::active() const {
  return static_cast<std::size_t>(
      std::count_if(coords.begin(), coords.end(), [](std::uint32_t c) { return c != 0; }));
}

std::size_t MultiIndexHash::operator()(const MultiIndex& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint32_t c : k.coords) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

RankedSpectrum::RankedSpectrum(std::size_t dim, std::vector<RankedEntry> entries,
                               double total_mass, bool shortfall)
    : dim_(dim), entries_(std::move(entries)), total_mass_(total_mass), shortfall_(shortfall) {
  prefix_.resize(entries_.size() + 1);
  num::CompensatedSum<long double> acc;
  prefix_[0] = 0.0;
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    acc.add(entries_[j].value);
    prefix_[j + 1] = static_cast<double>(acc.value());
  }
}

double RankedSpectrum::partial_sum(std::size_t m) const {
  if (m > entries_.size()) throw InvalidArgument("partial_sum beyond ranked entries");
  return prefix_[m];
}

double RankedSpectrum::tail_after(std::size_t m) const {
  if (m == 0) return total_mass_;
  if (shortfall_ && m >= entries_.size()) return 0.0;
  return std::max(0.0, total_mass_ - partial_sum(m));
}

double rank_product(SortedSpectrumCache& cache, const MultiIndex& k) {
  std::vector<std::uint32_t> ranks = k.coords;
  std::sort(ranks.begin(), ranks.end());
  double v = 1.0;
  for (std::uint32_t r : ranks) v *= cache.value(r);
  return v;
}

ProductEnumerator::ProductEnumerator(const UnivariateSpectrum& spec, std::size_t dim,
                                     std::size_t visited_cap)
    : dim_(dim), cap_(visited_cap), cache_(spec) {
  if (dim_ > 0) push(MultiIndex{std::vector<std::uint32_t>(dim_, 1)});
}

double ProductEnumerator::product(const MultiIndex& k) { return rank_product(cache_, k); }

void ProductEnumerator::push(MultiIndex k) {
  if (visited_.size() >= cap_) {
    throw BudgetExceeded("rearrangement enumeration exceeded its visited-set cap of " +
                         std::to_string(cap_) + " multi-indices");
  }
  if (!visited_.insert(k).second) return;
  const double v = product(k);
  if (v > 0.0) frontier_.push(Node{v, std::move(k)});
}

std::optional<RankedEntry> ProductEnumerator::next() {
  if (dim_ == 0) {
    if (emitted_empty_) return std::nullopt;
    emitted_empty_ = true;
    return RankedEntry{MultiIndex{}, 1.0};
  }
  if (frontier_.empty()) return std::nullopt;
  Node top = frontier_.top();
  frontier_.pop();
  for (std::size_t l = 0; l < dim_; ++l) {
    MultiIndex child = top.index;
    ++child.coords[l];
    if (cache_.limit() && child.coords[l] > *cache_.limit()) continue;
    push(std::move(child));
  }
  return RankedEntry{std::move(top.index), top.value};
}

namespace {

double total_mass(const UnivariateSpectrum& spec, std::size_t dim) {
  return std::pow(spectral_moments(spec).Lambda, static_cast<double>(dim));
}

}  // namespace

RankedSpectrum top_k(const UnivariateSpectrum& spec, std::size_t dim, std::size_t count,
                     std::size_t visited_cap) {
  if (dim == 0) throw InvalidArgument("top_k: dimension must be at least 1");
  ProductEnumerator en(spec, dim, visited_cap);
  std::vector<RankedEntry> entries;
  entries.reserve(count);
  bool exhausted = false;
  while (entries.size() < count) {
    auto e = en.next();
    if (!e) {
      exhausted = true;
      break;
    }
    entries.push_back(std::move(*e));
  }
  if (!exhausted) {
    if (auto n = spec.nonzero_count()) {
      const double all = std::pow(static_cast<double>(*n), static_cast<double>(dim));
      exhausted = static_cast<double>(entries.size()) >= all;
    }
  }
  return RankedSpectrum(dim, std::move(entries), total_mass(spec, dim), exhausted);
}

double tail_sum(const UnivariateSpectrum& spec, std::size_t dim, std::size_t m) {
  if (m == 0) return total_mass(spec, dim);
  return top_k(spec, dim, m).tail_after(m);
}

AsymptoticConstants asymptotic_constants(const UnivariateSpectrum& spec, std::size_t dim) {
  const auto p = spec.asymptotic_params();
  if (!p) throw InvalidArgument("asymptotic_constants needs a power-law spectrum");
  if (dim == 0) throw InvalidArgument("asymptotic_constants: dimension must be at least 1");
  if (p->q == p->r) throw InvalidArgument("asymptotic_constants: q == r is excluded");
  AsymptoticConstants c;
  c.alpha = p->q / p->r;
  c.r = p->r;
  c.mu = p->mu;
  const double d = static_cast<double>(dim);
  if (c.alpha == -1.0) {
    throw UnsupportedCase(
        "alpha = q/r = -1: the rearrangement carries a ln ln j factor and is skipped here");
  }
  if (c.alpha > -1.0) {
    c.branch = AsymptoticBranch::alpha_gt_neg1;
    c.beta = (d - 1.0) + d * c.alpha;
    const double num = std::pow(std::tgamma(c.alpha + 1.0), d);
    const double den = std::tgamma(d * (c.alpha + 1.0));
    double ratio = num / den;
    if (!std::isfinite(num) || !std::isfinite(den) || ratio == 0.0) {
      ratio = std::exp(d * std::lgamma(c.alpha + 1.0) - std::lgamma(d * (c.alpha + 1.0)));
    }
    c.B = std::pow(p->mu, d) * std::pow(ratio, p->r);
  } else {
    c.branch = AsymptoticBranch::alpha_lt_neg1;
    c.beta = c.alpha;
    const double s = power_log_root_sum(spec);
    c.B = p->mu * std::pow(d, p->r) * std::pow(s, (d - 1.0) * p->r);
  }
  return c;
}

namespace {

struct Group {
  double value;
  long double multiplicity;
};

void compositions(std::size_t atoms, std::size_t remaining, std::vector<std::uint32_t>& counts,
                  std::size_t pos, const std::function<void()>& visit) {
  if (pos + 1 == atoms) {
    counts[pos] = static_cast<std::uint32_t>(remaining);
    visit();
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    counts[pos] = static_cast<std::uint32_t>(c);
    compositions(atoms, remaining - c, counts, pos + 1, visit);
  }
}

CardinalityResult heap_cardinality(const UnivariateSpectrum& spec, std::size_t dim,
                                   long double total, long double threshold,
                                   std::uint64_t max_terms) {
  ProductEnumerator en(spec, dim, std::max<std::uint64_t>(max_terms, 16) * dim + 16);
  num::CompensatedSum<long double> acc;
  long double tail = total;
  std::uint64_t count = 0;
  while (tail > threshold) {
    if (count >= max_terms) {
      throw BudgetExceeded("heap cardinality backend exceeded " + std::to_string(max_terms) +
                           " terms");
    }
    auto e = en.next();
    if (!e) {
      tail = 0.0L;
      break;
    }
    acc.add(e->value);
    ++count;
    tail = total - acc.value();
  }
  CardinalityResult r;
  r.count = count;
  r.tail = static_cast<double>(std::max(tail, 0.0L));
  r.backend = CardinalityBackend::heap;
  return r;
}

CardinalityResult convolution_cardinality(const UnivariateSpectrum& spec, std::size_t dim,
                                          long double total, long double threshold,
                                          std::uint64_t max_groups) {
  if (spec.kind() != SpectrumKind::explicit_values) {
    throw InvalidArgument("convolution backend needs an explicit (atomic) spectrum");
  }
  const auto atoms = spec.sorted_prefix(*spec.nonzero_count());
  const std::size_t s = atoms.size();
  if (num::binomial(static_cast<unsigned>(dim + s - 1), static_cast<unsigned>(s - 1)) >
      static_cast<double>(max_groups)) {
    throw BudgetExceeded("convolution backend: too many atom-count compositions");
  }
  std::vector<Group> groups;
  std::vector<std::uint32_t> counts(s, 0);
  compositions(s, dim, counts, 0, [&] {
    double v = 1.0;
    long double mult = 1.0L;
    std::size_t left = dim;
    for (std::size_t a = 0; a < s; ++a) {
      for (std::uint32_t c = 0; c < counts[a]; ++c) v *= atoms[a].value;
      mult *= static_cast<long double>(
          num::binomial(static_cast<unsigned>(left), counts[a]));
      left -= counts[a];
    }
    groups.push_back({v, mult});
  });
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return a.value > b.value; });

  long double tail = total;
  long double count = 0.0L;
  for (const Group& g : groups) {
    if (!(tail > threshold)) break;
    const long double v = g.value;
    const long double mass = g.multiplicity * v;
    if (tail - mass > threshold) {
      tail -= mass;
      count += g.multiplicity;
      continue;
    }
    long double need = std::floor((tail - threshold) / v);
    while (tail - need * v > threshold) need += 1.0L;
    while (need > 0.0L && !(tail - (need - 1.0L) * v > threshold)) need -= 1.0L;
    tail -= need * v;
    count += need;
    break;
  }
  CardinalityResult r;
  r.count = static_cast<std::uint64_t>(count);
  r.tail = static_cast<double>(std::max(tail, 0.0L));
  r.backend = CardinalityBackend::convolution;
  return r;
}

}  // namespace

CardinalityResult cardinality_relative(const UnivariateSpectrum& spec, std::size_t dim,
                                       double eps, CardinalityBackend backend,
                                       std::uint64_t max_terms) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("cardinality_relative: eps must lie in (0,1)");
  if (dim == 0) throw InvalidArgument("cardinality_relative: dimension must be at least 1");
  const long double lambda = spectral_moments(spec).Lambda;
  const long double total = std::pow(lambda, static_cast<long double>(dim));
  const long double threshold = static_cast<long double>(eps) * eps * total;
  CardinalityResult r = backend == CardinalityBackend::heap
                            ? heap_cardinality(spec, dim, total, threshold, max_terms)
                            : convolution_cardinality(spec, dim, total, threshold, max_terms);
  r.threshold = static_cast<double>(threshold);
  return r;
}

double TheoremPrediction::predicted_ln_m(std::size_t dim) const {
  const double d = static_cast<double>(dim);
  return d * ln_lambda_tilde + 2.0 * q_star * std::sqrt(d);
}

TheoremPrediction theorem_prediction(const UnivariateSpectrum& spec, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("theorem_prediction: eps must lie in (0,1)");
  const SpectralMoments mom = spectral_moments(spec);
  if (mom.degenerate || mom.sigma_sq <= 0.0) {
    throw DegenerateSpectrum("sigma^2 = 0: all nonzero eigenvalues are equal");
  }
  TheoremPrediction t;
  t.sigma = std::sqrt(mom.sigma_sq);
  t.q_star = t.sigma * num::normal_tail_inverse(eps * eps);
  t.ln_lambda_tilde = std::log(mom.Lambda_tilde);
  return t;
}

}  // namespace stdinfo
