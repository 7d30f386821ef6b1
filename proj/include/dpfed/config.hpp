#pragma once

// Experiment configuration files.
//
// The format is INI: `key = value` lines grouped under [model], [dp],
// [federation], [data] and, for sweeps, [sweep]. Lines starting with ';' or
// '#' are comments. Every key is optional and falls back to the default in
// ExperimentConfig. Unknown sections or keys are rejected. The full grammar
// is documented in README.md.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpfed/dp.hpp"
#include "dpfed/federation.hpp"

namespace dpfed::config {

struct SweepSpec {
  std::vector<dp::Mechanism> mechanisms;
  /// +inf stands for "no noise".
  std::vector<double> epsilons;
  std::vector<std::size_t> cluster_counts;
  /// Seeds per cell: master_seed, master_seed + 1, ...
  std::size_t repetitions = 1;

  void validate() const;
};

struct ConfigFile {
  federation::ExperimentConfig experiment;
  std::optional<SweepSpec> sweep;
};

/// Parses INI text. Relative data paths are resolved against `base_dir`.
/// Throws ValidationError naming the offending `section.key`.
ConfigFile parse_config(std::string_view text, const std::string& base_dir = "");
/// Reads and parses a file; throws IoError when it cannot be read.
ConfigFile load_config(const std::string& path);

struct Entry {
  std::string section;
  std::string key;
  std::string value;
};

/// The fully resolved configuration as ordered (section, key, value)
/// triples, in the same spelling parse_config accepts.
std::vector<Entry> config_entries(const federation::ExperimentConfig& cfg);
std::vector<Entry> sweep_entries(const SweepSpec& spec);
/// INI rendering of config_entries; parsing it back gives the same config.
std::string render_config(const federation::ExperimentConfig& cfg);

/// Parses a real number, accepting "inf".
double parse_real(std::string_view text, const std::string& field);
std::uint64_t parse_unsigned(std::string_view text, const std::string& field);

}  // namespace dpfed::config
