#include "stdinfo/field_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "stdinfo/errors.hpp"
#include "stdinfo/numerics.hpp"

namespace stdinfo {

std::size_t default_truncation(std::size_t m) { return std::max<std::size_t>(4 * m, 4096); }

SpectralSystem::SpectralSystem(UnivariateSpectrum spec, RankedSpectrum ranked, bool additive)
    : spec_(std::move(spec)), ranked_(std::move(ranked)), additive_(additive) {
  std::uint32_t top = 0;
  flat_.reserve(ranked_.size() * ranked_.dim());
  for (const auto& e : ranked_.entries()) {
    for (std::uint32_t k : e.index.coords) {
      top = std::max(top, k);
      flat_.push_back(k);
    }
  }
  SortedSpectrumCache cache(spec_);
  rank_to_index_.resize(static_cast<std::size_t>(top) + 1);
  rank_to_index_[0] = 0;
  for (std::size_t r = 1; r <= top; ++r) {
    rank_to_index_[r] = cache.original_index(r);
    max_original_ = std::max(max_original_, rank_to_index_[r]);
  }
  contiguous_ = ranked_.dim() == 1;
  for (std::size_t j = 0; j < flat_.size() && contiguous_; ++j) contiguous_ = flat_[j] == j + 1;
  identity_ = true;
  for (std::size_t r = 0; r <= top; ++r) identity_ = identity_ && rank_to_index_[r] == r;
  if (max_original_ > spec_.basis().max_index()) {
    throw InvalidArgument("basis " + spec_.basis().name() + " supports indices up to " +
                          std::to_string(spec_.basis().max_index()) + ", the system needs " +
                          std::to_string(max_original_));
  }
}

std::shared_ptr<const SpectralSystem> SpectralSystem::tensor(const UnivariateSpectrum& spec,
                                                             std::size_t d, std::size_t T) {
  if (T == 0) throw InvalidArgument("truncation T must be positive");
  return std::shared_ptr<const SpectralSystem>(new SpectralSystem(spec, top_k(spec, d, T), false));
}

std::shared_ptr<const SpectralSystem> SpectralSystem::additive(const AdditiveModel& model,
                                                               std::size_t T) {
  if (T == 0) throw InvalidArgument("truncation T must be positive");
  return std::shared_ptr<const SpectralSystem>(
      new SpectralSystem(model.spec, merged_top_k(model, T), true));
}

std::shared_ptr<const SpectralSystem> SpectralSystem::from_ranked(const UnivariateSpectrum& spec,
                                                                  RankedSpectrum ranked,
                                                                  bool additive) {
  return std::shared_ptr<const SpectralSystem>(
      new SpectralSystem(spec, std::move(ranked), additive));
}

void SpectralSystem::eval_ranks(double t, std::span<double> out,
                                std::vector<double>& scratch) const {
  if (identity_) {
    spec_.basis().eval_all(t, out.first(rank_to_index_.size()));
    out[0] = 1.0;
    return;
  }
  scratch.resize(max_original_ + 1);
  spec_.basis().eval_all(t, scratch);
  for (std::size_t r = 0; r < rank_to_index_.size(); ++r) out[r] = scratch[rank_to_index_[r]];
  out[0] = 1.0;
}

void SpectralSystem::eval_modes(std::span<const double> t, std::size_t cols,
                                std::span<double> out) const {
  const std::size_t d = dim();
  if (t.size() != d) throw InvalidArgument("point dimension does not match the field");
  const std::size_t width = max_rank() + 1;
  std::vector<double> tables(d * width), scratch;
  for (std::size_t l = 0; l < d; ++l) {
    eval_ranks(t[l], std::span<double>(tables.data() + l * width, width), scratch);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const auto& k = ranked_[j].index.coords;
    double v = 1.0;
    for (std::size_t l = 0; l < d; ++l) v *= tables[l * width + k[l]];
    out[j] = v;
  }
}

void SpectralSystem::sample_mode(std::size_t j, Rng& rng, std::span<double> point) const {
  const auto& k = ranked_[j].index.coords;
  for (std::size_t l = 0; l < k.size(); ++l) {
    point[l] = k[l] == 0 ? rng.uniform() : spec_.basis().sample_sq(rank_to_index_[k[l]], rng);
  }
}

double FieldRealization::eval_at(std::span<const double> t) const {
  std::vector<double> phi(coefficients.size());
  system->eval_modes(t, coefficients.size(), phi);
  double s = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) s += coefficients[j] * phi[j];
  return s;
}

double FieldRealization::sq_norm() const { return out_span_mass(coefficients, 0); }

FieldRealization simulate(SystemPtr system, Rng& rng) {
  FieldRealization fr;
  fr.coefficients.resize(system->size());
  for (std::size_t j = 0; j < system->size(); ++j) {
    fr.coefficients[j] = std::sqrt(system->value(j)) * rng.normal();
  }
  fr.system = std::move(system);
  return fr;
}

double out_span_mass(std::span<const double> coefficients, std::size_t m) {
  num::CompensatedSum<double> s;
  for (std::size_t j = m; j < coefficients.size(); ++j) s.add(coefficients[j] * coefficients[j]);
  return s.value();
}

ErrorDecomposition exact_sq_error(const FieldRealization& fr, std::span<const double> estimates) {
  const std::size_t m = estimates.size();
  if (m > fr.coefficients.size()) {
    throw InvalidArgument("estimate index set exceeds the retained modes");
  }
  ErrorDecomposition e;
  num::CompensatedSum<double> in;
  for (std::size_t j = 0; j < m; ++j) {
    const double diff = estimates[j] - fr.coefficients[j];
    in.add(diff * diff);
  }
  e.in_span = in.value();
  e.out_span = out_span_mass(fr.coefficients, m);
  e.analytic_tail = fr.system->analytic_tail();
  return e;
}

void write_realization_csv(const FieldRealization& fr, std::ostream& os) {
  const std::size_t d = fr.system->dim();
  for (std::size_t l = 0; l < d; ++l) os << 'k' << (l + 1) << ',';
  os << "coefficient\n";
  os << std::setprecision(17);
  for (std::size_t j = 0; j < fr.coefficients.size(); ++j) {
    for (std::uint32_t k : fr.system->index(j).coords) os << fr.system->original_index(k) << ',';
    os << fr.coefficients[j] << '\n';
  }
}

FieldRealization read_realization_csv(SystemPtr system, std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("realization CSV is empty");
  const std::size_t d = system->dim();
  FieldRealization fr;
  fr.coefficients.reserve(system->size());
  std::size_t j = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (j >= system->size()) throw InvalidArgument("realization CSV has more rows than modes");
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t l = 0; l < d; ++l) {
      std::getline(ss, cell, ',');
      const auto k = std::stoull(cell);
      if (k != system->original_index(system->index(j).coords[l])) {
        throw InvalidArgument("realization CSV row " + std::to_string(j + 1) +
                              " does not match the mode order of the system");
      }
    }
    std::getline(ss, cell);
    fr.coefficients.push_back(std::stod(cell));
    ++j;
  }
  if (j != system->size()) throw InvalidArgument("realization CSV has fewer rows than modes");
  fr.system = std::move(system);
  return fr;
}

}  // namespace stdinfo
