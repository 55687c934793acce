#include "stdinfo/cli.hpp"

#include <omp.h>

#include <boost/version.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "stdinfo/errors.hpp"
#include "stdinfo/prob_setting.hpp"
#include "stdinfo/std_approx.hpp"
#include "stdinfo/tensor_spectrum.hpp"

namespace stdinfo::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSubcommands = {
    "spectrum", "topk",        "cardinality", "additive-spectrum", "allocation", "simulate",
    "approximate", "rate-sweep", "prob",      "explosion"};

std::size_t line_of(const std::string& text, const std::string& key) {
  if (text.empty() || key.empty()) return 0;
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

class Checker {
 public:
  Checker(const std::string& text, std::vector<Diagnostic>& out) : text_(text), out_(out) {}

  void error(const std::string& path, const std::string& msg) {
    // Missing keys are located at their enclosing section.
    std::size_t line = 0;
    std::string rest = path;
    while (line == 0 && !rest.empty()) {
      const auto dot = rest.rfind('.');
      std::string leaf = dot == std::string::npos ? rest : rest.substr(dot + 1);
      leaf = leaf.substr(0, leaf.find('['));
      line = line_of(text_, leaf);
      rest = dot == std::string::npos ? std::string() : rest.substr(0, dot);
    }
    out_.push_back({line, path, msg});
  }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(path, "must be a JSON object");
    return false;
  }

  void known_keys(const json& obj, const std::string& prefix, const std::set<std::string>& keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!keys.count(it.key()) && it.key().rfind('_', 0) != 0 && it.key() != "comment") {
        error(join(prefix, it.key()), "unknown field");
      }
    }
  }

  // Number field; `requirement` describes the admissible range.
  std::optional<double> number(const json& obj, const std::string& prefix, const std::string& key,
                               bool required, bool (*pred)(double), const char* requirement) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) {
      if (required) error(path, "missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(path, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (pred && !pred(x))) {
      error(path, std::string("must satisfy ") + requirement);
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::int64_t> integer(const json& obj, const std::string& prefix,
                                      const std::string& key, bool required, std::int64_t min) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) {
      if (required) error(path, "missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(path, "must be an integer");
      return std::nullopt;
    }
    const auto x = v.get<std::int64_t>();
    if (x < min) {
      error(path, "must be at least " + std::to_string(min));
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::string> choice(const json& obj, const std::string& prefix,
                                    const std::string& key, bool required,
                                    const std::set<std::string>& allowed) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) {
      if (required) error(path, "missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    std::string all;
    for (const auto& a : allowed) all += (all.empty() ? "" : ", ") + a;
    if (!v.is_string() || !allowed.count(v.get<std::string>())) {
      error(path, "must be one of: " + all);
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> number_list(const json& obj, const std::string& prefix,
                                                 const std::string& key, bool required,
                                                 bool (*pred)(double), const char* requirement) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) {
      if (required) error(path, "missing required field");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      error(path, "must be a non-empty array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()) ||
          (pred && !pred(v[i].get<double>()))) {
        error(path + "[" + std::to_string(i) + "]", std::string("must satisfy ") + requirement);
        return std::nullopt;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const std::string& text_;
  std::vector<Diagnostic>& out_;
};

bool positive(double x) { return x > 0.0; }
bool nonnegative(double x) { return x >= 0.0; }
bool above_half(double x) { return x > 0.5; }
bool open_unit(double x) { return x > 0.0 && x < 1.0; }
bool closed_unit(double x) { return x >= 0.0 && x <= 1.0; }
bool any_number(double) { return true; }
bool integral_ge4(double x) { return x >= 4.0 && x == std::floor(x); }
bool integral_ge2(double x) { return x >= 2.0 && x == std::floor(x); }

const json kEmpty = json::object();

const json& section(const json& cfg, const char* key) {
  return cfg.contains(key) && cfg.at(key).is_object() ? cfg.at(key) : kEmpty;
}

void check_spectrum(Checker& c, const json& s, bool additive) {
  if (!c.object(s, "spectrum")) return;
  const auto kind =
      c.choice(s, "spectrum", "kind", true, {"power_log", "explicit", "brownian_motion"});
  c.number(s, "spectrum", "lambda0_sq", false, nonnegative, "lambda0_sq >= 0");
  const auto basis = c.choice(s, "spectrum", "basis", false, {"sine_half", "cosine", "legendre"});
  if (additive && basis && *basis == "sine_half") {
    c.error("spectrum.basis", "additive fields need a basis containing phi_0 == 1 (cosine or legendre)");
  }
  if (!kind) return;
  if (*kind == "power_log") {
    c.known_keys(s, "spectrum", {"kind", "mu", "r", "q", "lambda0_sq", "basis"});
    c.number(s, "spectrum", "mu", true, positive, "mu > 0");
    const auto r = c.number(s, "spectrum", "r", true, above_half, "r > 1/2 (summable spectrum)");
    const auto q = c.number(s, "spectrum", "q", true, any_number, "a finite value");
    if (r && q && *q == *r) c.error("spectrum.q", "q must differ from r");
  } else if (*kind == "explicit") {
    c.known_keys(s, "spectrum", {"kind", "values", "lambda0_sq", "basis"});
    const auto v = c.number_list(s, "spectrum", "values", true, nonnegative, "lambda(i)^2 >= 0");
    if (v && std::none_of(v->begin(), v->end(), [](double x) { return x > 0.0; })) {
      c.error("spectrum.values", "needs at least one positive eigenvalue");
    }
  } else {
    c.known_keys(s, "spectrum", {"kind", "lambda0_sq", "basis"});
  }
}

void check_approx(Checker& c, const json& a) {
  if (!c.object(a, "approx")) return;
  c.known_keys(a, "approx", {"n", "m", "k", "Z", "S", "R_cal", "reps", "T"});
  const auto n = c.integer(a, "approx", "n", false, 2);
  const auto m = c.integer(a, "approx", "m", false, 1);
  c.integer(a, "approx", "k", false, 1);
  c.number(a, "approx", "Z", false, positive, "Z > 0");
  c.integer(a, "approx", "S", false, 1);
  c.integer(a, "approx", "R_cal", false, 1);
  c.integer(a, "approx", "reps", false, 1);
  const auto T = c.integer(a, "approx", "T", false, 1);
  if (n && m && *m >= *n) {
    c.error("approx.m", "m < n is required for the iteration to contract (m/n < 1); got m = " +
                            std::to_string(*m) + ", n = " + std::to_string(*n));
  }
  const std::int64_t mm = m ? *m : (n ? *n / 2 : 0);
  if (T && mm > *T) c.error("approx.T", "T must be at least the span size m");
}

}  // namespace

std::string Diagnostic::str() const {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << (field.empty() ? "<config>" : field) << ": " << message;
  return os.str();
}

std::vector<Diagnostic> validate_config(const json& cfg, const std::string& text,
                                        const std::string& sub) {
  std::vector<Diagnostic> out;
  Checker c(text, out);
  if (!cfg.is_object()) {
    c.error("", "the config must be a JSON object");
    return out;
  }
  c.known_keys(cfg, "", {"spectrum", "field", "seed", "threads", "output_dir", "topk",
                         "cardinality", "additive", "allocation", "simulate", "approx", "sweep",
                         "prob", "explosion"});

  bool additive = false;
  std::int64_t d = 1, b = 1;
  if (cfg.contains("field")) {
    const json& f = cfg.at("field");
    if (c.object(f, "field")) {
      c.known_keys(f, "field", {"kind", "d", "b"});
      const auto kind = c.choice(f, "field", "kind", true, {"tensor", "additive"});
      additive = kind && *kind == "additive";
      if (auto v = c.integer(f, "field", "d", true, 1)) d = *v;
      if (additive) {
        if (auto v = c.integer(f, "field", "b", true, 1)) {
          b = *v;
          if (b > d) c.error("field.b", "order b must satisfy 1 <= b <= d");
        }
      } else if (f.contains("b")) {
        c.error("field.b", "only additive fields have an order b");
      }
    }
  }
  if (cfg.contains("spectrum")) {
    check_spectrum(c, cfg.at("spectrum"), additive);
  } else {
    c.error("spectrum", "missing required field");
  }
  c.integer(cfg, "", "seed", false, 0);
  c.integer(cfg, "", "threads", false, 0);
  if (cfg.contains("output_dir") && !cfg.at("output_dir").is_string()) {
    c.error("output_dir", "must be a string");
  }

  if (cfg.contains("topk") && c.object(cfg.at("topk"), "topk")) {
    c.known_keys(cfg.at("topk"), "topk", {"N"});
    c.integer(cfg.at("topk"), "topk", "N", false, 1);
  }
  if (cfg.contains("cardinality") && c.object(cfg.at("cardinality"), "cardinality")) {
    const json& s = cfg.at("cardinality");
    c.known_keys(s, "cardinality", {"eps", "backend", "max_terms", "csv_limit"});
    c.number(s, "cardinality", "eps", false, open_unit, "0 < eps < 1");
    const auto be = c.choice(s, "cardinality", "backend", false, {"heap", "convolution"});
    if (be && *be == "convolution" && cfg.contains("spectrum") && cfg["spectrum"].is_object() &&
        cfg["spectrum"].value("kind", "") != "explicit") {
      c.error("cardinality.backend", "the convolution backend needs an explicit spectrum");
    }
    c.integer(s, "cardinality", "max_terms", false, 1);
    c.integer(s, "cardinality", "csv_limit", false, 0);
  }
  if (cfg.contains("additive") && c.object(cfg.at("additive"), "additive")) {
    c.known_keys(cfg.at("additive"), "additive", {"N"});
    c.integer(cfg.at("additive"), "additive", "N", false, 0);
  }
  if (cfg.contains("allocation") && c.object(cfg.at("allocation"), "allocation")) {
    c.known_keys(cfg.at("allocation"), "allocation", {"m"});
    if (auto m = c.integer(cfg.at("allocation"), "allocation", "m", false, 1); m && *m < b) {
      c.error("allocation.m", "allocation needs m >= b");
    }
  }
  if (cfg.contains("simulate") && c.object(cfg.at("simulate"), "simulate")) {
    c.known_keys(cfg.at("simulate"), "simulate", {"T"});
    c.integer(cfg.at("simulate"), "simulate", "T", false, 1);
  }
  if (cfg.contains("approx")) check_approx(c, cfg.at("approx"));
  if (cfg.contains("sweep") && c.object(cfg.at("sweep"), "sweep")) {
    const json& s = cfg.at("sweep");
    c.known_keys(s, "sweep", {"n_grid", "reps", "Z", "p", "log_exp"});
    if (auto g = c.number_list(s, "sweep", "n_grid", false, integral_ge4, "integer n >= 4")) {
      if (!std::is_sorted(g->begin(), g->end()) ||
          std::adjacent_find(g->begin(), g->end()) != g->end()) {
        c.error("sweep.n_grid", "must be strictly increasing");
      }
    }
    c.integer(s, "sweep", "reps", false, 1);
    c.number(s, "sweep", "Z", false, positive, "Z > 0");
    c.number(s, "sweep", "p", false, positive, "p > 0");
    c.number(s, "sweep", "log_exp", false, any_number, "a finite value");
  }
  if (cfg.contains("prob") && c.object(cfg.at("prob"), "prob")) {
    const json& s = cfg.at("prob");
    c.known_keys(s, "prob", {"eps", "gamma", "reps", "calibration_n", "calibration_reps", "Z"});
    c.number(s, "prob", "eps", sub == "prob", positive, "eps > 0");
    c.number(s, "prob", "gamma", sub == "prob", open_unit, "0 < gamma < 1");
    c.integer(s, "prob", "reps", false, 1);
    if (auto g = c.number_list(s, "prob", "calibration_n", false, integral_ge2, "integer n >= 2")) {
      if (g->size() < 4) c.error("prob.calibration_n", "needs at least 4 grid values");
    }
    c.integer(s, "prob", "calibration_reps", false, 1);
    c.number(s, "prob", "Z", false, positive, "Z > 0");
  } else if (sub == "prob") {
    c.error("prob", "missing required section (eps, gamma)");
  }
  if (cfg.contains("explosion") && c.object(cfg.at("explosion"), "explosion")) {
    const json& s = cfg.at("explosion");
    c.known_keys(s, "explosion", {"f", "delta"});
    c.number_list(s, "explosion", "f", false, closed_unit, "0 <= f <= 1");
    c.number(s, "explosion", "delta", false, nonnegative, "delta >= 0");
  }

  if ((sub == "additive-spectrum" || sub == "allocation") && !additive) {
    c.error("field.kind", "subcommand " + sub + " needs an additive field");
  }
  return out;
}

std::vector<Diagnostic> validate_config_file(const std::string& path, const std::string& sub) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto pos = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
    return {{line, "", std::string("JSON parse error: ") + e.what()}};
  }
  return validate_config(cfg, text, sub);
}

UnivariateSpectrum parse_spectrum(const json& s, bool additive) {
  const std::string kind = s.at("kind").get<std::string>();
  const double l0 = s.value("lambda0_sq", 0.0);
  const std::string basis_name = s.value("basis", additive ? "cosine" : "sine_half");
  const BasisFamily basis = BasisFamily::from_name(basis_name);
  if (kind == "power_log") {
    return UnivariateSpectrum::power_log(s.at("mu").get<double>(), s.at("r").get<double>(),
                                         s.at("q").get<double>(), l0, basis);
  }
  if (kind == "explicit") {
    return UnivariateSpectrum::explicit_values(s.at("values").get<std::vector<double>>(), l0,
                                               basis);
  }
  if (kind == "brownian_motion") return UnivariateSpectrum::brownian_motion(l0, basis);
  throw ConfigError("unknown spectrum kind " + kind);
}

std::uint64_t config_hash(const json& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : cfg.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct Field {
  bool additive = false;
  std::size_t d = 1, b = 1;
  UnivariateSpectrum spec;
  std::optional<AdditiveModel> model;
};

Field make_field(const json& cfg) {
  const json& f = section(cfg, "field");
  const bool additive = f.value("kind", "tensor") == "additive";
  Field out{additive, f.value("d", std::size_t{1}), f.value("b", std::size_t{1}),
            parse_spectrum(cfg.at("spectrum"), additive), std::nullopt};
  if (additive) out.model.emplace(out.d, out.b, out.spec);
  return out;
}

SystemPtr make_system(const Field& f, std::size_t T) {
  return f.additive ? SpectralSystem::additive(*f.model, T)
                    : SpectralSystem::tensor(f.spec, f.d, T);
}

std::optional<RateModel> field_rate(const Field& f) {
  try {
    return f.additive ? additive_rate_model(*f.model) : tensor_rate_model(f.spec, f.d);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(fs::path(dir_) / name);
    if (!os) throw Error("cannot write " + (fs::path(dir_) / name).string());
    os << std::setprecision(17);
    return os;
  }

  void write_json(const std::string& name, const json& j) {
    auto os = open(name);
    os << j.dump(2) << '\n';
  }

  const std::vector<std::string>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string index_label(SortedSpectrumCache& cache, const MultiIndex& k) {
  std::string s;
  for (std::size_t l = 0; l < k.coords.size(); ++l) {
    if (l) s += ':';
    s += std::to_string(cache.original_index(k.coords[l]));
  }
  return s;
}

void write_ranked_csv(std::ostream& os, const RankedSpectrum& rs, const UnivariateSpectrum& spec,
                      std::size_t rows) {
  SortedSpectrumCache cache(spec);
  os << "rank,index,value,cumsum,tail\n";
  for (std::size_t j = 0; j < std::min(rows, rs.size()); ++j) {
    os << (j + 1) << ',' << index_label(cache, rs[j].index) << ',' << rs[j].value
       << ',' << rs.partial_sum(j + 1) << ',' << rs.tail_after(j + 1) << '\n';
  }
}

json moments_json(const SpectralMoments& m) {
  return {{"Lambda", m.Lambda},     {"M", m.M},
          {"M2", m.M2},             {"sigma_sq", m.sigma_sq},
          {"Lambda_tilde", m.Lambda_tilde}, {"degenerate", m.degenerate}};
}

json summary_json(const MCSummary& s) {
  return {{"reps", s.reps},
          {"points_used", s.points_used},
          {"mean_error", s.mean_error},
          {"stderr", s.stderr_error},
          {"mean_sq_norm", s.mean_sq_norm},
          {"mean_trace", s.mean_trace},
          {"bound_trace", s.bound_trace}};
}

void cmd_spectrum(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  json j;
  j["kind"] = f.spec.kind_name();
  j["basis"] = f.spec.basis().name();
  j["lambda0_sq"] = f.spec.lambda0_sq();
  j["moments"] = moments_json(spectral_moments(f.spec));
  if (f.spec.lambda0_sq() > 0.0 || f.additive) {
    j["moments_with_zero"] = moments_json(spectral_moments(f.spec, true));
  }
  const std::size_t dim = f.additive ? f.b : f.d;
  try {
    const AsymptoticConstants c = asymptotic_constants(f.spec, dim);
    j["asymptotic"] = {{"d", dim},   {"alpha", c.alpha}, {"beta", c.beta},
                       {"B", c.B},   {"r", c.r},         {"mu", c.mu},
                       {"branch", c.branch == AsymptoticBranch::alpha_gt_neg1 ? "alpha_gt_neg1"
                                                                              : "alpha_lt_neg1"}};
  } catch (const Error& e) {
    j["asymptotic"] = {{"unavailable", e.what()}};
  }
  if (f.additive) {
    j["Lambda_full"] = f.model->lambda_full();
    j["total_mass"] = f.model->total_mass();
  } else {
    j["total_mass"] = std::pow(spectral_moments(f.spec).Lambda, static_cast<double>(f.d));
  }
  out.write_json("spectrum.json", j);
}

void cmd_topk(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  const auto N = section(cfg, "topk").value("N", std::size_t{10});
  const RankedSpectrum rs = f.additive ? merged_top_k(*f.model, N) : top_k(f.spec, f.d, N);
  auto os = out.open("topk.csv");
  write_ranked_csv(os, rs, f.spec, N);
  out.write_json("topk.json", {{"N", N}, {"returned", rs.size()}, {"shortfall", rs.shortfall()},
                               {"total_mass", rs.total_mass()}});
}

void cmd_cardinality(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  if (f.additive) throw ConfigError("cardinality is defined for tensor fields");
  const json& s = section(cfg, "cardinality");
  const double eps = s.value("eps", 0.1);
  const auto backend = s.value("backend", "heap") == "convolution" ? CardinalityBackend::convolution
                                                                   : CardinalityBackend::heap;
  const auto max_terms = s.value("max_terms", std::uint64_t{10'000'000});
  const auto csv_limit = s.value("csv_limit", std::size_t{100'000});
  const CardinalityResult c = cardinality_relative(f.spec, f.d, eps, backend, max_terms);
  json j = {{"eps", eps},
            {"d", f.d},
            {"count", c.count},
            {"tail", c.tail},
            {"threshold", c.threshold},
            {"backend", backend == CardinalityBackend::heap ? "heap" : "convolution"}};
  try {
    const TheoremPrediction t = theorem_prediction(f.spec, eps);
    j["q_star"] = t.q_star;
    j["sigma"] = t.sigma;
    j["ln_lambda_tilde"] = t.ln_lambda_tilde;
    j["predicted_ln_m"] = t.predicted_ln_m(f.d);
    if (c.count > 0) {
      const double d = static_cast<double>(f.d);
      j["normalized_ln_m"] = (std::log(static_cast<double>(c.count)) - d * t.ln_lambda_tilde) / std::sqrt(d);
      j["limit_2q_star"] = 2.0 * t.q_star;
    }
  } catch (const DegenerateSpectrum& e) {
    j["prediction"] = e.what();
  }
  if (c.count <= csv_limit) {
    const RankedSpectrum rs = top_k(f.spec, f.d, static_cast<std::size_t>(c.count));
    auto os = out.open("cardinality.csv");
    write_ranked_csv(os, rs, f.spec, rs.size());
  }
  out.write_json("cardinality.json", j);
}

void cmd_additive(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  const AdditiveModel& model = *f.model;
  {
    auto os = out.open("additive_spectrum.csv");
    os << "h,multiplier,multiplicity,layer_mass\n";
    for (std::size_t h = 0; h <= model.b; ++h) {
      const HLayer L = layer(model, h);
      os << h << ',' << L.multiplier << ',' << L.multiplicity << ',' << L.layer_mass << '\n';
    }
  }
  const auto N = section(cfg, "additive").value("N", std::size_t{20});
  if (N > 0) {
    const RankedSpectrum rs = merged_top_k(model, N);
    auto os = out.open("merged_topk.csv");
    write_ranked_csv(os, rs, f.spec, N);
  }
  json j = {{"d", model.d},
            {"b", model.b},
            {"Lambda_full", model.lambda_full()},
            {"Lambda_plus", model.lambda_plus()},
            {"total_mass", model.total_mass()}};
  try {
    const RateExponents e = rate_exponents(model);
    j["rate_exponents"] = {{"power", e.power}, {"log_exp", e.log_exp}};
  } catch (const Error& e) {
    j["rate_exponents"] = {{"unavailable", e.what()}};
  }
  out.write_json("additive_spectrum.json", j);
}

void cmd_allocation(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  const auto m = section(cfg, "allocation").value("m", std::size_t{1000});
  const AllocationPlan plan = allocation(*f.model, m);
  {
    auto os = out.open("allocation.csv");
    os << "h,Q_h,m_h\n";
    for (std::size_t i = 0; i < plan.m_h.size(); ++i) {
      os << (i + 1) << ',' << plan.Q_h[i] << ',' << plan.m_h[i] << '\n';
    }
  }
  out.write_json("allocation.json", {{"m", plan.m},
                                     {"Q", plan.Q},
                                     {"chain_lhs", plan.chain_lhs},
                                     {"chain_rhs", plan.chain_rhs},
                                     {"chain_ratio", plan.chain_lhs / plan.chain_rhs}});
}

void cmd_explosion(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  const json& s = section(cfg, "explosion");
  std::vector<double> fs_;
  if (s.contains("f")) {
    fs_ = s.at("f").get<std::vector<double>>();
  } else {
    for (int i = 0; i <= 10; ++i) fs_.push_back(i / 10.0);
  }
  const double delta = s.value("delta", 0.05);
  const SpectralMoments mz = spectral_moments(f.spec, true);
  const double lambda_full = mz.Lambda;
  const double p = 1.0 - f.spec.lambda0_sq() / lambda_full;
  const double lt = mz.Lambda_tilde;
  auto os = out.open("explosion.csv");
  os << "f,V,term_bound\n";
  for (double x : fs_) {
    const double V = explosion_coefficient(x, p, lt);
    os << x << ',' << V << ',' << explosion_term_bound(V, f.d, delta) << '\n';
  }
  out.write_json("explosion.json",
                 {{"p", p}, {"Lambda_tilde", lt}, {"Lambda_full", lambda_full}, {"delta", delta}, {"d", f.d}});
}

void cmd_simulate(const json& cfg, Output& out) {
  const Field f = make_field(cfg);
  const auto T = section(cfg, "simulate").value("T", std::size_t{4096});
  const auto seed = cfg.value("seed", std::uint64_t{0});
  SystemPtr sys = make_system(f, T);
  Rng rng = Rng::stream(seed, 0);
  const FieldRealization fr = simulate(sys, rng);
  {
    auto os = out.open("realization.csv");
    write_realization_csv(fr, os);
  }
  out.write_json("simulate.json", {{"T", sys->size()},
                                   {"sq_norm", fr.sq_norm()},
                                   {"retained_mass", sys->ranked().partial_sum(sys->size())},
                                   {"analytic_tail", sys->analytic_tail()},
                                   {"total_mass", sys->total_mass()}});
}

ApproxConfig approx_config(const json& cfg, const Field& f) {
  const json& a = section(cfg, "approx");
  const auto rate = field_rate(f);
  const double p = rate ? rate->p : 0.5;
  ApproxConfig c;
  c.n = a.value("n", std::size_t{64});
  c.m = a.value("m", c.n / 2);
  c.Z = a.value("Z", 2.0 * p + 1.0);
  c.k = a.value("k", iteration_count(std::max<std::size_t>(c.n, 2), c.Z));
  c.S = a.value("S", std::size_t{8});
  c.R_cal = a.value("R_cal", std::size_t{64});
  c.seed = cfg.value("seed", std::uint64_t{0});
  return c;
}

void cmd_approximate(const json& cfg, Output& out, int threads) {
  const Field f = make_field(cfg);
  const ApproxConfig c = approx_config(cfg, f);
  check_config(c);
  const json& a = section(cfg, "approx");
  const auto T = a.value("T", default_truncation(c.m));
  const auto reps = a.value("reps", std::size_t{100});
  SystemPtr sys = make_system(f, T);
  const MCSummary s = mc_iterate(sys, c, reps, c.seed, threads);
  {
    auto os = out.open("trace.csv");
    os << "step,mean_error,mean_in_span,bound\n";
    for (std::size_t i = 0; i < s.mean_trace.size(); ++i) {
      os << i << ',' << s.mean_trace[i] << ',' << s.mean_in_span_trace[i] << ',' << s.bound_trace[i]
         << '\n';
    }
  }
  json j = summary_json(s);
  j["n"] = c.n;
  j["m"] = c.m;
  j["k"] = c.k;
  j["Z"] = c.Z;
  j["S"] = c.S;
  j["R_cal"] = c.R_cal;
  j["T"] = sys->size();
  j["total_mass"] = sys->total_mass();
  j["tail_m"] = sys->tail_after(c.m);
  j["analytic_tail"] = sys->analytic_tail();
  out.write_json("approximate.json", j);
}

void cmd_rate_sweep(const json& cfg, Output& out, int threads) {
  const Field f = make_field(cfg);
  const json& s = section(cfg, "sweep");
  auto rate = field_rate(f);
  if (s.contains("p")) {
    rate = RateModel{s.at("p").get<double>(), s.value("log_exp", 0.0), 1.0};
  }
  if (!rate) throw ConfigError("sweep: the spectrum has no power-law rate; give sweep.p and sweep.log_exp");
  std::vector<std::size_t> grid = {32, 64, 128, 256};
  if (s.contains("n_grid")) {
    grid.clear();
    for (double x : s.at("n_grid").get<std::vector<double>>()) grid.push_back(static_cast<std::size_t>(x));
  }
  ApproxConfig base;
  base.Z = s.value("Z", 2.0 * rate->p + 1.0);
  base.S = 1;
  const auto reps = s.value("reps", std::size_t{100});
  SystemPtr sys = make_system(f, default_truncation(grid.back() / 2));
  const SweepResult r = rate_sweep(sys, grid, base, *rate, reps, cfg.value("seed", std::uint64_t{0}), threads);
  auto os = out.open("rate_sweep.csv");
  os << "n,m,k,points_used,mc_error,stderr,bound_pyth4,bound_prop\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << row.m << ',' << row.k << ',' << row.points_used << ',' << row.mc_error << ','
       << row.stderr_error << ',' << row.bound_iterated << ',' << row.bound_prop << '\n';
  }
  out.write_json("rate_sweep.json", {{"C", r.C},
                                     {"p", rate->p},
                                     {"log_exp", rate->log_exp},
                                     {"prop_log_exp", rate->prop_log_exp()},
                                     {"reps", reps},
                                     {"Z", base.Z}});
}

void cmd_prob(const json& cfg, Output& out, int threads) {
  const Field f = make_field(cfg);
  const json& s = section(cfg, "prob");
  const ProbRequirement req{s.at("eps").get<double>(), s.at("gamma").get<double>()};
  const auto rate = field_rate(f);
  if (!rate) throw ConfigError("prob: the spectrum has no power-law rate");
  const double r = rate->p + 0.5;
  const double beta = rate->log_exp / (2.0 * r);
  const double Z = s.value("Z", 2.0 * rate->p + 1.0);
  const auto seed = cfg.value("seed", std::uint64_t{0});
  std::vector<std::size_t> grid = {64, 128, 256, 512};
  if (s.contains("calibration_n")) {
    grid.clear();
    for (double x : s.at("calibration_n").get<std::vector<double>>()) grid.push_back(static_cast<std::size_t>(x));
  }
  const auto cal_reps = s.value("calibration_reps", std::size_t{200});
  const auto reps = s.value("reps", std::size_t{1000});

  SystemPtr cal_sys = make_system(f, default_truncation(*std::max_element(grid.begin(), grid.end()) / 2));
  const CalibratedRate cr = calibrate_C0(cal_sys, r, beta, grid, cal_reps, Rng::derive(seed, 1), Z, threads);
  const double v = req.v();
  const std::uint64_t budget = point_budget(v, cr);
  const ApproxConfig c = config_for_budget(budget, Z, seed);
  SystemPtr sys = c.m * 4 <= cal_sys->size() ? cal_sys : make_system(f, default_truncation(c.m));
  const VerifyResult vr = verify(sys, c, req, reps, Rng::derive(seed, 2), threads);
  out.write_json("prob.json", {{"eps", req.eps},
                               {"gamma", req.gamma},
                               {"v", v},
                               {"C0", cr.C0},
                               {"budget", budget},
                               {"closed_form_budget", closed_form_budget(v, cr)},
                               {"exceedance", vr.exceedance},
                               {"reps", reps},
                               {"tolerance", vr.tolerance},
                               {"n", c.n},
                               {"m", c.m},
                               {"k", c.k},
                               {"points_used", vr.points_used},
                               {"mean_sq_error", vr.mean_sq_error},
                               {"calibration",
                                {{"N", cr.grid_N},
                                 {"error", cr.grid_error},
                                 {"reps", cr.reps},
                                 {"safety", cr.safety},
                                 {"r", cr.r},
                                 {"beta", cr.beta}}}});
}

int effective_threads(const json& cfg) { return cfg.value("threads", 0); }

}  // namespace

void run_subcommand(const std::string& sub, const json& cfg, const std::string& out_dir,
                    std::ostream& log) {
  Output out(out_dir);
  const int threads = effective_threads(cfg);
  if (threads > 0) omp_set_num_threads(threads);
  if (sub == "spectrum") cmd_spectrum(cfg, out);
  else if (sub == "topk") cmd_topk(cfg, out);
  else if (sub == "cardinality") cmd_cardinality(cfg, out);
  else if (sub == "additive-spectrum") cmd_additive(cfg, out);
  else if (sub == "allocation") cmd_allocation(cfg, out);
  else if (sub == "explosion") cmd_explosion(cfg, out);
  else if (sub == "simulate") cmd_simulate(cfg, out);
  else if (sub == "approximate") cmd_approximate(cfg, out, threads);
  else if (sub == "rate-sweep") cmd_rate_sweep(cfg, out, threads);
  else if (sub == "prob") cmd_prob(cfg, out, threads);
  else throw ConfigError("unknown subcommand " + sub);

  json manifest = {{"subcommand", sub},
                   {"config", cfg},
                   {"config_hash", hex(config_hash(cfg))},
                   {"seed", cfg.value("seed", std::uint64_t{0})},
                   {"threads", threads},
                   {"version", kVersion},
                   {"libraries",
                    {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"boost", BOOST_LIB_VERSION},
                     {"openmp", _OPENMP}}},
                   {"outputs", out.files()}};
  std::ofstream(fs::path(out_dir) / "manifest.json") << manifest.dump(2) << '\n';
  log << sub << ": wrote";
  for (const auto& file : out.files()) log << ' ' << file;
  log << " and manifest.json to " << out_dir << '\n';
}

namespace {

struct Overrides {
  std::optional<std::size_t> d, b, N, n, m, k, S, reps, T;
  std::optional<double> eps, gamma;
  std::vector<double> f;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* app, std::string& config, std::string& out_dir, Overrides& o) {
  app->add_option("--config,-c", config, "experiment config (JSON)")->required();
  app->add_option("--out,-o", out_dir, "output directory");
  app->add_option("--d", o.d, "field dimension");
  app->add_option("--b", o.b, "additive order");
  app->add_option("--N", o.N, "number of ranked eigenvalues");
  app->add_option("--eps", o.eps, "error level");
  app->add_option("--gamma", o.gamma, "failure probability");
  app->add_option("--f", o.f, "ratio grid b/d for explosion")->delimiter(',');
  app->add_option("--n", o.n, "points per pass");
  app->add_option("--m", o.m, "span size");
  app->add_option("--k", o.k, "number of passes");
  app->add_option("--S", o.S, "candidate designs per pass");
  app->add_option("--reps", o.reps, "Monte Carlo replications");
  app->add_option("--T", o.T, "retained KL terms");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--threads", o.threads, "OpenMP threads (0 = default)");
}

void apply(json& cfg, const std::string& sub, const Overrides& o) {
  auto sec = [&](const char* name) -> json& {
    if (!cfg.contains(name) || !cfg[name].is_object()) cfg[name] = json::object();
    return cfg[name];
  };
  if (o.d) sec("field")["d"] = *o.d;
  if (o.b) sec("field")["b"] = *o.b;
  if (o.d || o.b) {
    if (!cfg["field"].contains("kind")) cfg["field"]["kind"] = o.b ? "additive" : "tensor";
  }
  if (o.N) sec(sub == "additive-spectrum" ? "additive" : "topk")["N"] = *o.N;
  if (o.eps) sec(sub == "prob" ? "prob" : "cardinality")["eps"] = *o.eps;
  if (o.gamma) sec("prob")["gamma"] = *o.gamma;
  if (!o.f.empty()) sec("explosion")["f"] = o.f;
  if (o.n) sec("approx")["n"] = *o.n;
  if (o.m) sec(sub == "allocation" ? "allocation" : "approx")["m"] = *o.m;
  if (o.k) sec("approx")["k"] = *o.k;
  if (o.S) sec("approx")["S"] = *o.S;
  if (o.reps) {
    if (sub == "rate-sweep") sec("sweep")["reps"] = *o.reps;
    else if (sub == "prob") sec("prob")["reps"] = *o.reps;
    else sec("approx")["reps"] = *o.reps;
  }
  if (o.T) sec(sub == "simulate" ? "simulate" : "approx")["T"] = *o.T;
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.threads) cfg["threads"] = *o.threads;
}

std::string default_out_dir(const json& cfg, const std::string& sub) {
  if (cfg.contains("output_dir") && cfg["output_dir"].is_string()) {
    return cfg["output_dir"].get<std::string>();
  }
  if (const char* env = std::getenv("STDINFO_OUT_DIR"); env && *env) return (fs::path(env) / sub).string();
  return (fs::path("stdinfo_out") / sub).string();
}

int report(const std::vector<Diagnostic>& diags, std::ostream& err) {
  for (const auto& d : diags) err << "config error: " << d.str() << '\n';
  return kConfigError;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Randomized point-value approximation of Gaussian random fields", "stdinfo");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config, out_dir, manifest;
  Overrides o;
  std::vector<CLI::App*> subs;
  for (const auto& name : kSubcommands) {
    auto* sc = app.add_subcommand(name);
    add_common(sc, config, out_dir, o);
    subs.push_back(sc);
  }
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config,-c", config, "experiment config (JSON)")->required();
  std::string for_sub;
  validate->add_option("--for", for_sub, "also check the sections a subcommand needs");
  auto* replay = app.add_subcommand("replay", "re-run the experiment recorded in a manifest");
  replay->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out,-o", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (validate->parsed()) {
      const auto diags = validate_config_file(config, for_sub);
      if (!diags.empty()) return report(diags, err);
      out << config << ": ok\n";
      return kOk;
    }
    if (replay->parsed()) {
      std::ifstream in(manifest);
      if (!in) throw ConfigError("cannot read manifest " + manifest);
      const json m = json::parse(in);
      const std::string sub = m.at("subcommand").get<std::string>();
      const json cfg = m.at("config");
      if (auto diags = validate_config(cfg, {}, sub); !diags.empty()) return report(diags, err);
      run_subcommand(sub, cfg, out_dir.empty() ? default_out_dir(cfg, sub) : out_dir, out);
      return kOk;
    }
    for (auto* sc : subs) {
      if (!sc->parsed()) continue;
      const std::string sub = sc->get_name();
      if (auto diags = validate_config_file(config, sub); !diags.empty()) return report(diags, err);
      std::ifstream in(config);
      json cfg = json::parse(in);
      apply(cfg, sub, o);
      if (auto diags = validate_config(cfg, {}, sub); !diags.empty()) return report(diags, err);
      run_subcommand(sub, cfg, out_dir.empty() ? default_out_dir(cfg, sub) : out_dir, out);
      return kOk;
    }
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return kBudgetError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedCase& e) {
    err << "unsupported case: " << e.what() << '\n';
    return kConfigError;
  } catch (const Divergent& e) {
    err << "divergent spectrum: " << e.what() << '\n';
    return kConfigError;
  } catch (const DegenerateSpectrum& e) {
    err << "degenerate spectrum: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace stdinfo::cli
