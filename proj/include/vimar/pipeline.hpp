#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vimar/config.hpp"

namespace vimar {

// Library-level drivers behind the CLI subcommands. They take an already
// validated RunConfig and do no file I/O.

Corpus run_gen(const RunConfig& cfg);

struct TrainOutcome {
  ValueParams params;
  CalibrationReport calibration;
  bool tau_calibrated = false;
  MarginConfig margin;  // the margin actually used for rewards
};

// Calibrates tau on `corpus` unless the config pins it, then trains.
TrainOutcome run_train(const RunConfig& cfg, const Corpus& corpus);

struct DecodeOutcome {
  Strategy strategy = Strategy::greedy;
  std::vector<DecodeResult> results;  // corpus order
  BudgetReport total;
  // Present for the two-stage strategy only.
  bool has_refine_threshold = false;
  double refine_threshold = 0.0;
};

// Decodes every corpus scene. `params` may be null for strategies that need
// no value model; DomainError otherwise.
DecodeOutcome run_decode(const RunConfig& cfg, const Corpus& corpus, const ValueParams* params, Strategy strategy);

struct BenchRow {
  std::string scene_id;
  BudgetReport measured;
  BudgetReport predicted;
};

// Recomputes each result's closed-form budget from its own shape.
std::vector<BenchRow> bench(std::span<const DecodeResult> results, const SearchConfig& search);

std::map<std::string, const Scene*> scene_index(const Corpus& corpus);

}  // namespace vimar
