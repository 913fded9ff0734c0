#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vimar/corpus.hpp"
#include "vimar/eval.hpp"
#include "vimar/policy.hpp"
#include "vimar/prm.hpp"
#include "vimar/search.hpp"
#include "vimar/value.hpp"
#include "vimar/world.hpp"

namespace vimar {

struct PrmSection {
  OracleWeights weights;
  MarginConfig margin;
  // When false, tau is recalibrated from the training corpus.
  bool pin_tau = false;
  double percentile = 17.0;
};

struct ValueSection {
  std::size_t epochs = 40;
  double learning_rate = 0.05;
  double gamma = 0.9;
  std::uint64_t shuffle_seed = 0;
};

struct SearchSection {
  SearchConfig search;
  // When false, the refinement threshold is calibrated on the decode corpus.
  bool pin_refine_threshold = false;
  double refine_percentile = 25.0;
  std::size_t calibration_scenes = 200;
};

struct EvalSection {
  JudgeConfig judge;
  std::string baseline = "greedy";
};

// One reproducibility artifact per experiment: every module's settings plus
// the master seed.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::size_t workers = 1;
  WorldConfig world;
  CorpusConfig corpus;
  PolicyConfig policy;
  PrmSection prm;
  ValueSection value;
  SearchSection search;
  EvalSection eval;

  // Cross-field checks; throws ConfigError.
  void validate() const;
  TrainConfig train_config() const;
};

// Strict parse: unknown keys and type mismatches raise ConfigError naming
// the offending key path (e.g. "search.k_per_tmp").
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);

// Applies "section.key=value" where value is parsed as JSON, falling back to
// a plain string.
void apply_override(nlohmann::json& j, std::string_view assignment);

// 16 hex digits of FNV-1a over the canonical JSON of the effective config.
// Excludes settings that legitimately differ between runs of one experiment:
// the strategy, worker count and output directory.
std::string config_hash(const RunConfig& cfg);

}  // namespace vimar
