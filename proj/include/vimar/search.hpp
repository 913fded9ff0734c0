#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vimar/policy.hpp"
#include "vimar/prm.hpp"
#include "vimar/value.hpp"

namespace vimar {

enum class Strategy { greedy, bon, prm_step, value_step, vimar_two_stage };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
bool needs_value_model(Strategy s);

struct SearchConfig {
  std::vector<double> temperatures = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t k_per_temp = 6;
  // Sentences valued below this are flagged by the grounding audit.
  double refine_threshold = -std::numeric_limits<double>::infinity();
  std::size_t max_refinements = 3;
  // Unmentioned objects at or above this salience trigger a missing-content site.
  double salient_cutoff = 0.5;
  Strategy strategy = Strategy::vimar_two_stage;

  std::size_t pool_size() const { return temperatures.size() * k_per_temp; }
  void validate() const;
};

// Scores one candidate sentence in the context of the caption built so far.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual double score(const Sentence& candidate, const Scene& scene, const Caption& prefix) const = 0;
};

// Scores a complete caption.
class CaptionScorer {
 public:
  virtual ~CaptionScorer() = default;
  virtual double score(const Caption& caption, const Scene& scene) const = 0;
};

// A value model usable by the value-guided strategies: sentence mode for
// stepwise scoring and refinement, caption mode for stage-1 selection.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual double sentence_value(const Sentence& unit, const Scene& scene, const Caption& prefix) const = 0;
  virtual double caption_value(const Caption& caption, const Scene& scene) const = 0;
};

// The grounding oracle as a process reward: ignores the prefix.
class PrmScorer final : public SentenceScorer {
 public:
  explicit PrmScorer(OracleWeights w = {}) : w_(w) {}
  double score(const Sentence& candidate, const Scene& scene, const Caption&) const override {
    return similarity(candidate, scene, w_).delta;
  }

 private:
  OracleWeights w_;
};

class LinearValue final : public ValueFunction {
 public:
  // IntegrityError on a feature-spec or dimension mismatch.
  explicit LinearValue(ValueParams params);
  double sentence_value(const Sentence& unit, const Scene& scene, const Caption& prefix) const override;
  double caption_value(const Caption& caption, const Scene& scene) const override;
  const ValueParams& params() const { return params_; }

 private:
  ValueParams params_;
};

struct BudgetReport {
  std::size_t policy_sentence_calls = 0;
  std::size_t policy_caption_calls = 0;
  // PRM calls for prm_step; judge calls for bon.
  std::size_t reward_calls = 0;
  // Candidate-scoring calls of the value model.
  std::size_t value_calls = 0;
  // Value calls spent by the grounding audit (per existing sentence); kept
  // apart from candidate scoring.
  std::size_t audit_value_calls = 0;
  std::size_t sentences_in_output = 0;
  // Candidate-selection rounds of stepwise strategies, including a final
  // round that selects EOS.
  std::size_t selection_steps = 0;
  std::size_t refinement_rounds = 0;

  BudgetReport& operator+=(const BudgetReport& o);
  friend bool operator==(const BudgetReport&, const BudgetReport&) = default;
};

// Closed-form budget a strategy must report for a pool of `pool` candidates
// (N*K), `steps` stepwise selections and `rounds` refinement rounds.
BudgetReport expected_budget(Strategy s, std::size_t pool, std::size_t steps, std::size_t rounds,
                             std::size_t sentences_in_output, std::size_t audit_calls = 0);

struct Candidate {
  std::size_t temperature_index = 0;
  std::size_t k = 0;
  double temperature = 0.0;
  Caption caption;    // full-caption rounds
  Sentence sentence;  // sentence rounds
  double score = 0.0;
};

enum class RoundKind { caption, step, refine };

struct SelectionRound {
  RoundKind kind = RoundKind::step;
  std::size_t index = 0;
  std::vector<Candidate> candidates;
  std::size_t selected = 0;
};

struct RefinementSite {
  enum class Kind { low_value, missing_content };
  Kind kind = Kind::low_value;
  std::size_t sentence_index = 0;  // low_value only
  std::vector<std::string> missing;  // missing_content only

  friend bool operator==(const RefinementSite&, const RefinementSite&) = default;
};

struct DecodeResult {
  std::string scene_id;
  Strategy strategy = Strategy::greedy;
  std::uint64_t seed = 0;
  Caption caption;
  BudgetReport budget;
  std::vector<double> per_sentence_values;
  std::vector<RefinementSite> audit;
  std::vector<SelectionRound> log;
};

// Index of the maximum; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

DecodeResult decode_greedy(const Scene& scene, const Policy& policy);

DecodeResult decode_bon(const Scene& scene, const Policy& policy, const CaptionScorer& judge,
                        const SearchConfig& cfg, std::uint64_t seed);

DecodeResult decode_prm_step(const Scene& scene, const Policy& policy, const SentenceScorer& prm,
                             const SearchConfig& cfg, std::uint64_t seed);

DecodeResult decode_value_step(const Scene& scene, const Policy& policy, const ValueFunction& value,
                               const SearchConfig& cfg, std::uint64_t seed);

DecodeResult decode_vimar(const Scene& scene, const Policy& policy, const ValueFunction& value,
                          const SearchConfig& cfg, std::uint64_t seed);

struct AuditResult {
  std::vector<RefinementSite> sites;
  std::vector<double> sentence_values;  // value of each sentence given its prefix
};

// Flags sentences valued below `threshold` and, as one site, the salient
// scene objects the caption never mentions.
AuditResult audit_grounding(const Caption& caption, const Scene& scene, const ValueFunction& value,
                            double threshold, double salient_cutoff);

// 25th percentile of stage-1 per-sentence values over `scenes`.
double calibrate_refine_threshold(std::span<const Scene> scenes, const Policy& policy,
                                  const ValueFunction& value, const SearchConfig& cfg, std::uint64_t seed,
                                  double pct = 25.0);

}  // namespace vimar
