#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "stdinfo/additive_spectrum.hpp"
#include "stdinfo/field_sim.hpp"
#include "stdinfo/spectrum.hpp"

namespace stdinfo::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Exit statuses of the command-line tool.
enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kBudgetError = 3 };

struct Diagnostic {
  std::size_t line = 0;  // 1-based line in the config text, 0 if unknown
  std::string field;     // dotted path, e.g. "spectrum.r"
  std::string message;
  std::string str() const;
};

/// Every violation found in the document (not just the first). With a
/// subcommand, sections that subcommand needs are checked too.
std::vector<Diagnostic> validate_config(const nlohmann::json& cfg, const std::string& text = {},
                                        const std::string& subcommand = {});

/// Reads and validates a file. Parse errors come back as a diagnostic with
/// the offending line; an unreadable file throws ConfigError.
std::vector<Diagnostic> validate_config_file(const std::string& path,
                                             const std::string& subcommand = {});

/// Builds a spectrum from its JSON description. The basis defaults to
/// cosine for additive fields and sine_half otherwise.
UnivariateSpectrum parse_spectrum(const nlohmann::json& s, bool additive = false);

/// FNV-1a 64 of the canonical dump.
std::uint64_t config_hash(const nlohmann::json& cfg);

/// Runs one subcommand with an already validated config and writes its
/// artifacts plus manifest.json into out_dir.
void run_subcommand(const std::string& subcommand, const nlohmann::json& cfg,
                    const std::string& out_dir, std::ostream& log);

/// Entry point of the `stdinfo` executable; returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stdinfo::cli
