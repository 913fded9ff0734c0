#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vimar/corpus.hpp"
#include "vimar/prm.hpp"

namespace vimar {

inline constexpr std::string_view kFeatureSpecVersion = "vimar-linear-v1";

enum Feature : std::size_t {
  kGroundedFraction = 0,
  kHallucinatedFraction,
  kAnyHallucination,
  kAttributeCoverage,
  kPrefixCoverage,
  kCoverageGain,
  kLateHallucination,
  kLength,
  kBias,
  kFeatureCount,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "grounded_fraction", "hallucinated_fraction", "any_hallucination", "attribute_coverage",
    "prefix_coverage",   "coverage_gain",         "late_hallucination", "length",
    "bias",
};

using FeatureVector = std::vector<double>;

// Features of `unit` appended after `prefix`. The EOS sentinel maps to the
// zero vector, so a terminal state is worth exactly 0.
FeatureVector sentence_features(const Sentence& unit, const Scene& scene, const Caption& prefix);

// Caption mode: sentence features averaged along the caption, each sentence
// conditioned on the ones before it. An empty caption maps to zero.
FeatureVector caption_features(const Caption& caption, const Scene& scene);

struct TrainingMetadata {
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;  // mean loss per epoch
  std::size_t triplets = 0;
  double tau = 0.0;
  std::string penalty_mode;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct ValueParams {
  std::vector<double> weights;
  std::string feature_spec_version{kFeatureSpecVersion};
  double gamma = 0.9;
  TrainingMetadata meta;

  // Throws IntegrityError on a non-finite weight or gamma outside [0,1].
  void validate() const;
  friend bool operator==(const ValueParams&, const ValueParams&) = default;
};

// Dot product; IntegrityError when the dimensions differ.
double predict(const ValueParams& params, std::span<const double> features);

// Sentence mode. IntegrityError unless params were built for the engine's
// feature spec.
double predict(const ValueParams& params, const Sentence& unit, const Scene& scene, const Caption& prefix);
double predict(const ValueParams& params, const Caption& caption, const Scene& scene);

// (y_i, y_{i+1}, I) addressed inside a corpus. caption 0 is the ground
// truth, caption j > 0 is sample j - 1. Terminal triplets have no successor.
struct TrainingTriplet {
  std::size_t entry = 0;
  std::size_t caption = 0;
  std::size_t index = 0;
  bool terminal = false;
  double reward = 0.0;  // margin_reward(similarity(current, scene))

  const Scene& scene(const Corpus& corpus) const;
  const Caption& source(const Corpus& corpus) const;
  const Sentence& current(const Corpus& corpus) const;
  const Sentence* next(const Corpus& corpus) const;
  // Sentences before `current`.
  Caption prefix(const Corpus& corpus) const;
};

// A caption of m sentences yields m-1 successor triplets and one terminal
// triplet.
std::vector<TrainingTriplet> build_triplets(const Corpus& corpus, const MarginConfig& margin,
                                            const OracleWeights& oracle = {});

// Recomputes the reward from the PRM and compares it with the cached value.
bool verify_reward(const TrainingTriplet& t, const Corpus& corpus, const MarginConfig& margin,
                   const OracleWeights& oracle = {});

// Featurized transition, the unit td_step consumes.
struct Transition {
  FeatureVector current;
  std::optional<FeatureVector> next;  // nullopt: terminal, bootstraps to 0
  double reward = 0.0;
};

Transition featurize(const TrainingTriplet& t, const Corpus& corpus);

struct TdStep {
  ValueParams params;
  double loss = 0.0;
};

// Semi-gradient TD(0): target = r + gamma * V(next) held constant,
// loss = (target - V(current))^2, w <- w + 2 lr (target - V(current)) phi(current).
// Throws DivergenceError on a non-finite loss or update.
TdStep td_step(const ValueParams& params, const Transition& transition, double lr);

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 0.05;
  double gamma = 0.9;
  std::uint64_t shuffle_seed = 0;
  MarginConfig margin;
  OracleWeights oracle;

  void validate() const;
};

// Online SGD over `transitions` with a seeded permutation per epoch.
ValueParams train_transitions(std::span<const Transition> transitions, const TrainConfig& cfg,
                              std::size_t dimension, std::string feature_spec_version);

// build_triplets + featurize + train_transitions.
ValueParams train(const Corpus& corpus, const TrainConfig& cfg);

// Explicit Markov reward process for exact policy evaluation.
struct ExplicitMdp {
  struct Edge {
    std::size_t to = 0;
    double probability = 0.0;
  };
  std::vector<double> rewards;
  std::vector<std::vector<Edge>> transitions;  // empty list: absorbing terminal
  double gamma = 0.9;
};

// Iterative policy evaluation to a 1e-10 max-norm residual. Terminal states
// are worth 0. OracleError when the iteration cap is hit.
std::vector<double> value_oracle(const ExplicitMdp& mdp, std::size_t max_iterations = 1'000'000);

}  // namespace vimar
