// Run configuration: a flat text file of dotted `key = value` lines, merged
// over an optional built-in preset and validated against a fixed schema.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nlif/analysis.hpp"
#include "nlif/multiscale.hpp"

namespace nlif {

enum class Experiment {
  run_micro,
  run_macro,
  run_hybrid,
  tests_1_4,
  bias_study,
  threshold_sweep,
  refractory_study,
  mc_scaling,
  diffusion_check,
  benchmark,
};

const char* to_string(Experiment e);

/// Canonical key -> value text, every value normalised by its schema type.
using Settings = std::map<std::string, std::string>;

struct RunConfig {
  Experiment experiment = Experiment::run_hybrid;
  std::uint64_t seed = 0;
  HybridConfig hybrid;
  std::int64_t k_rec = 100;
  std::vector<double> snapshots;  // extra density snapshot times

  std::vector<std::int64_t> sizes;  // bias study, mc scaling, benchmark
  int replicas = 20;

  ThresholdSearch search;
  std::vector<double> sweep_b;      // connectivity values for the threshold sweep

  int observable_order = 1;         // mc scaling
  double diffusion_rate = 5.0;      // constant N for the diffusion check
  double diffusion_kick = 1e-4;

  std::string benchmark_name;

  Settings settings;
  std::string fingerprint;
};

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys, unknown
/// keys and malformed lines are ConfigErrors naming the line.
Settings parse_settings(const std::string& text, const std::string& origin = "config");

Settings load_settings(const std::string& path);

std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
Settings preset(const std::string& name);

/// Later entries override earlier ones.
Settings merge(const Settings& base, const Settings& over);

/// Fills defaults, normalises values, checks required keys (all missing ones
/// are reported together) and builds the typed configuration. With
/// `full_fidelity`, `full.<key>` entries replace `<key>`.
RunConfig build_config(const Settings& raw, bool full_fidelity = false);

/// Sorted `key=value` lines of the normalised settings.
std::string canonical_text(const Settings& settings);

/// 16 hex digits of FNV-1a over the canonical text.
std::string fingerprint(const Settings& settings);

}  // namespace nlif
