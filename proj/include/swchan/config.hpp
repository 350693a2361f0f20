#pragma once

// Experiment configuration, resource caps and the report pipeline shared by
// the command-line front end.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "swchan/channel.hpp"
#include "swchan/estimation.hpp"

namespace swchan {

/// Environment variable holding cap overrides, e.g.
/// SWCHAN_CAPS="max_states=100000,oracle_seconds=5".
inline constexpr const char* kCapsEnvVar = "SWCHAN_CAPS";

struct ResourceCaps {
  std::uint64_t max_states = std::uint64_t{1} << 22;
  std::uint64_t max_vertices = std::uint64_t{1} << 13;  // oracle block space q^t
  std::uint64_t max_work = 20'000'000;                  // zero-error verification
  std::uint64_t max_inputs = 16;                        // maximin subset search
  std::uint64_t max_steps = 10'000'000;                 // simulation horizon
  double oracle_seconds = 60.0;

  /// Lists every non-positive cap.
  std::vector<std::string> violations() const;
  /// Applies "key=value,..." overrides; throws ConfigError on unknown keys or
  /// malformed values.
  void apply_overrides(const std::string& text);
  /// Reads kCapsEnvVar if set.
  void apply_environment();
};

void to_json(nlohmann::json& j, const ResourceCaps& c);
void from_json(const nlohmann::json& j, ResourceCaps& c);

/// Analyses in dependency order.
inline const std::vector<std::string> kAnalyses = {"states", "entropy", "capacity", "count", "bounds",
                                                   "oracle", "classify", "simulate"};

struct ExperimentConfig {
  ChannelSpec channel;
  std::vector<std::string> analyses;

  int k_max = 0;            // capacity DP iterations (0: 10 |S|)
  int count_horizon = 12;   // count
  int oracle_t = 0;         // oracle block length (0: n)
  int bounds_t_max = 6;     // best oracle rate over t <= bounds_t_max
  int maximin_t_max = -1;   // maximin rows up to this t (-1: skip)
  std::optional<PlantSpec> plant;
  std::string code_path;    // simulate: codebook file (empty: use the oracle result)
  std::string adversary = "greedy";
  std::uint64_t steps = 3000;
  std::string noise = "extremal";
  std::uint64_t seed = 1;

  std::string trace_path;   // simulate: trace CSV destination (empty: none)
  std::string codes_out;    // oracle: codebook JSON destination (empty: none)
  std::string out_dir;      // where per-analysis artifacts are written (empty: none)
  std::string format = "json";
  ResourceCaps caps;

  /// Every violation at once, joined into one ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Throws ConfigError listing every problem found.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// "greedy", "none", "random:<seed>", "block:<len>[,<burst>]".
AdversaryPolicy parse_adversary(const std::string& text, const ChannelSpec& spec);

struct Report {
  nlohmann::json config;
  nlohmann::json results = nlohmann::json::object();
  std::map<std::string, double> timings_ms;

  /// Timings live under their own key so the rest is reproducible.
  nlohmann::json to_json(bool include_timings = true) const;
};

/// Runs one analysis. Later analyses reuse the codebook stored in `report`
/// by an earlier oracle run.
nlohmann::json run_analysis(const std::string& name, const ExperimentConfig& config, Report& report);

/// Runs every requested analysis in dependency order; module errors are
/// rethrown with the analysis name prefixed.
Report run(const ExperimentConfig& config);

std::string version_string();

}  // namespace swchan
