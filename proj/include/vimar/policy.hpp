#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vimar/rng.hpp"
#include "vimar/text.hpp"
#include "vimar/world.hpp"

namespace vimar {

// Sentence-level caption generator. Implementations must be deterministic
// given the rng stream and safe to call concurrently.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual std::size_t max_sentences() const = 0;

  // Next sentence conditioned on `prefix`; may return the EOS sentinel.
  // Throws DomainError for temperature <= 0 and StateError when `prefix`
  // is already terminated.
  virtual Sentence sample_sentence(const Scene& scene, const Caption& prefix, double temperature,
                                   Rng& rng) const = 0;

  // Argmax decoding; identical across calls.
  virtual Caption greedy_caption(const Scene& scene) const = 0;

  // Chains sample_sentence on a single stream until EOS. Always terminated
  // and holds between 1 and max_sentences() sentences.
  Caption sample_caption(const Scene& scene, double temperature, Rng& rng) const;
};

struct ToyDescriberConfig {
  // Probability that a sampled sentence mentions a non-scene object.
  double hallucination_rate = 0.3;
  // Tendency to skip low-salience objects and to stop before covering them.
  double omission_bias = 0.2;
  std::size_t max_sentences = 8;
  // EOS probability once every scene object has been mentioned.
  double stop_prob = 0.85;
  // Share of hallucinated sentences that also describe a real object.
  double mixed_hallucination = 0.7;
  // Hallucination grows as the salient content gets used up: a sentence
  // after a prefix with salience coverage c hallucinates with probability
  // min(1, hallucination_rate * (1 + saturation_hallucination * c^2)).
  double saturation_hallucination = 1.2;
  // Attribute error grows linearly in temperature with this slope.
  double attribute_noise = 0.5;
  // Keys the fixed per-scene misperceptions that greedy decoding reproduces.
  std::uint64_t greedy_seed = 0;

  void validate() const;
};

enum class PolicyKind { toy, overconfident };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::toy;
  ToyDescriberConfig toy;
};

class ToyDescriber : public Policy {
 public:
  ToyDescriber(ToyDescriberConfig cfg, Vocabulary vocab);

  std::string name() const override { return "toy"; }
  std::size_t max_sentences() const override { return cfg_.max_sentences; }
  Sentence sample_sentence(const Scene& scene, const Caption& prefix, double temperature,
                           Rng& rng) const override;
  Caption greedy_caption(const Scene& scene) const override;

  const ToyDescriberConfig& config() const { return cfg_; }

  // Stopping rule: probability of EOS after a non-empty prefix whose
  // salience-weighted coverage of the scene is `coverage`.
  virtual double stop_probability(double coverage) const;
  virtual double hallucination_probability(std::size_t sentence_index, double coverage) const;
  virtual double attribute_accuracy(double temperature, double salience) const;

 private:
  class Decider;
  class SamplingDecider;
  class GreedyDecider;

  Sentence compose(const Scene& scene, const Caption& prefix, double temperature, Decider& d) const;

  ToyDescriberConfig cfg_;
  Vocabulary vocab_;
};

// Deliberately miscalibrated variant: keeps talking well past full coverage,
// hallucinates more the longer the caption gets and is sloppier with
// attributes, so many continuations land below the reward margin.
class OverconfidentDescriber : public ToyDescriber {
 public:
  using ToyDescriber::ToyDescriber;

  std::string name() const override { return "overconfident"; }
  double stop_probability(double coverage) const override;
  double hallucination_probability(std::size_t sentence_index, double coverage) const override;
  double attribute_accuracy(double temperature, double salience) const override;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const Vocabulary& vocab);

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

}  // namespace vimar
