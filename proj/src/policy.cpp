#include "vimar/policy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vimar/error.hpp"

namespace vimar {

namespace {

constexpr double kRepeatPenalty = 1.0;

// Filler-slot templates; non-negative entries index the filler vocabulary.
constexpr int kAttrs = -1;
constexpr int kObject = -2;
constexpr int kOther = -3;
const std::vector<std::vector<int>> kTemplates = {
    {2, 3, 0, kAttrs, kObject},              // there is a <attrs> <obj>
    {1, 4, 5, 0, kAttrs, kObject},           // the image shows a <attrs> <obj>
    {0, kAttrs, kObject, 3, 6, 7, 1, 8},     // a <attrs> <obj> is visible in the scene
};
const std::vector<double> kTemplateLogits = {1.0, 0.6, 0.3};
const std::vector<int> kMixedTemplate = {0, kAttrs, kObject, 3, 9, 0, kOther};  // a <attrs> <obj> is near a <other>
const std::vector<double> kAttrCountLogits = {0.4, 0.0};

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

Caption Policy::sample_caption(const Scene& scene, double temperature, Rng& rng) const {
  Caption caption;
  while (true) {
    Sentence s = sample_sentence(scene, caption, temperature, rng);
    if (s.is_eos()) break;
    caption.append(std::move(s));
  }
  if (caption.empty()) throw StateError(name() + ": policy emitted EOS before any sentence");
  caption.terminated = true;
  return caption;
}

void ToyDescriberConfig::validate() const {
  if (!in_unit(hallucination_rate)) throw ConfigError("policy.hallucination_rate must lie in [0,1]");
  if (!in_unit(omission_bias)) throw ConfigError("policy.omission_bias must lie in [0,1]");
  if (max_sentences < 1) throw ConfigError("policy.max_sentences must be >= 1");
  if (!in_unit(stop_prob)) throw ConfigError("policy.stop_prob must lie in [0,1]");
  if (!in_unit(mixed_hallucination)) throw ConfigError("policy.mixed_hallucination must lie in [0,1]");
  if (!(saturation_hallucination >= 0.0 && std::isfinite(saturation_hallucination))) {
    throw ConfigError("policy.saturation_hallucination must be a finite non-negative number");
  }
  if (!(attribute_noise >= 0.0 && std::isfinite(attribute_noise))) {
    throw ConfigError("policy.attribute_noise must be a finite non-negative number");
  }
}

// Every discrete choice the describer makes goes through a Decider, so the
// sampling and greedy paths share one generative program.
class ToyDescriber::Decider {
 public:
  virtual ~Decider() = default;
  virtual bool stop(double p) = 0;
  virtual bool hallucinate(double p, std::size_t sentence_index) = 0;
  virtual bool mixed(double p, std::size_t sentence_index) = 0;
  virtual bool correct(double p) = 0;
  virtual std::size_t pick(const std::vector<double>& logits, double temperature) = 0;
  virtual std::size_t uniform_index(std::size_t n) = 0;
};

class ToyDescriber::SamplingDecider final : public ToyDescriber::Decider {
 public:
  explicit SamplingDecider(Rng& rng) : rng_(rng) {}
  bool stop(double p) override { return rng_.bernoulli(p); }
  bool hallucinate(double p, std::size_t) override { return rng_.bernoulli(p); }
  bool mixed(double p, std::size_t) override { return rng_.bernoulli(p); }
  bool correct(double p) override { return rng_.bernoulli(p); }
  std::size_t pick(const std::vector<double>& logits, double temperature) override {
    return rng_.softmax_choice(logits, temperature);
  }
  std::size_t uniform_index(std::size_t n) override { return rng_.below(n); }

 private:
  Rng& rng_;
};

// Argmax everywhere except for the hallucination events, which are a fixed
// function of (scene, sentence index): the systematic misperceptions a
// deterministic decoder keeps repeating on the same image.
class ToyDescriber::GreedyDecider final : public ToyDescriber::Decider {
 public:
  GreedyDecider(std::uint64_t seed, const std::string& scene_id)
      : key_(derive_seed(seed, {hash_string(scene_id)})) {}
  bool stop(double p) override { return p >= 0.5; }
  bool hallucinate(double p, std::size_t i) override { return hashed_uniform(key_, {1, i}) < p; }
  bool mixed(double p, std::size_t i) override { return hashed_uniform(key_, {2, i}) < p; }
  bool correct(double p) override { return p >= 0.5; }
  std::size_t pick(const std::vector<double>& logits, double) override {
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  std::size_t uniform_index(std::size_t) override { return 0; }

 private:
  std::uint64_t key_;
};

ToyDescriber::ToyDescriber(ToyDescriberConfig cfg, Vocabulary vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  if (vocab_.fillers().empty() || vocab_.attributes().empty()) {
    throw ConfigError("policy: vocabulary needs fillers and attributes");
  }
}

double ToyDescriber::stop_probability(double coverage) const {
  return cfg_.stop_prob * std::pow(std::clamp(coverage, 0.0, 1.0), 1.0 - cfg_.omission_bias);
}

double ToyDescriber::hallucination_probability(std::size_t, double coverage) const {
  const double c = std::clamp(coverage, 0.0, 1.0);
  return std::min(1.0, cfg_.hallucination_rate * (1.0 + cfg_.saturation_hallucination * c * c));
}

double ToyDescriber::attribute_accuracy(double temperature, double salience) const {
  return std::clamp((1.0 - cfg_.attribute_noise * temperature) * (0.6 + 0.4 * salience), 0.0, 1.0);
}

double OverconfidentDescriber::stop_probability(double coverage) const {
  return 0.4 * ToyDescriber::stop_probability(coverage);
}

double OverconfidentDescriber::hallucination_probability(std::size_t sentence_index, double coverage) const {
  const double base = ToyDescriber::hallucination_probability(sentence_index, coverage);
  return std::min(1.0, base * (1.0 + 0.5 * static_cast<double>(sentence_index)));
}

double OverconfidentDescriber::attribute_accuracy(double temperature, double salience) const {
  return std::clamp((1.0 - 1.5 * config().attribute_noise * temperature) * (0.5 + 0.4 * salience), 0.0, 1.0);
}

Sentence ToyDescriber::sample_sentence(const Scene& scene, const Caption& prefix, double temperature,
                                       Rng& rng) const {
  if (!(temperature > 0.0)) throw DomainError("sample_sentence: temperature must be > 0");
  if (prefix.terminated) throw StateError("sample_sentence: prefix is terminated");
  SamplingDecider d(rng);
  return compose(scene, prefix, temperature, d);
}

Caption ToyDescriber::greedy_caption(const Scene& scene) const {
  GreedyDecider d(cfg_.greedy_seed, scene.id);
  Caption caption;
  while (true) {
    Sentence s = compose(scene, caption, 0.0, d);
    if (s.is_eos()) break;
    caption.append(std::move(s));
  }
  caption.terminated = true;
  return caption;
}

Sentence ToyDescriber::compose(const Scene& scene, const Caption& prefix, double temperature,
                               Decider& d) const {
  if (scene.objects.empty()) throw DataError(scene.id + ": scene has no objects");
  const std::size_t n = prefix.size();
  if (n >= cfg_.max_sentences) return Sentence::eos();

  const std::vector<std::string> said = prefix.mentions();
  const double covered = salience_coverage(said, scene);
  if (n > 0 && d.stop(stop_probability(covered))) return Sentence::eos();

  const auto& fillers = vocab_.fillers();
  const auto& attrs = vocab_.attributes();
  auto mentioned = [&](const std::string& name) {
    return std::binary_search(said.begin(), said.end(), name);
  };

  auto choose_object = [&]() -> const ObjectSpec& {
    std::vector<double> logits;
    for (const auto& o : scene.objects) {
      logits.push_back(o.salience - 2.0 * cfg_.omission_bias * (1.0 - o.salience) -
                       (mentioned(o.name) ? kRepeatPenalty : 0.0));
    }
    return scene.objects[d.pick(logits, temperature)];
  };

  auto choose_attributes = [&](const ObjectSpec& obj) {
    std::vector<std::string> out;
    const std::size_t count = 1 + d.pick(kAttrCountLogits, temperature);
    std::vector<std::string> unused;
    const auto stated = prefix.attributes_of(obj.name);
    for (const auto& a : obj.attributes) {
      if (!std::binary_search(stated.begin(), stated.end(), a)) unused.push_back(a);
    }
    const double accuracy = attribute_accuracy(temperature, obj.salience);
    for (std::size_t slot = 0; slot < count; ++slot) {
      if (!unused.empty() && d.correct(accuracy)) {
        const std::size_t i = d.uniform_index(unused.size());
        out.push_back(unused[i]);
        unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      std::vector<std::string> wrong;
      for (const auto& a : attrs) {
        if (std::find(obj.attributes.begin(), obj.attributes.end(), a) == obj.attributes.end() &&
            std::find(out.begin(), out.end(), a) == out.end()) {
          wrong.push_back(a);
        }
      }
      if (!wrong.empty()) out.push_back(wrong[d.uniform_index(wrong.size())]);
    }
    return out;
  };

  auto render = [&](const std::vector<int>& tmpl, const std::vector<std::string>& attr_words,
                    const std::string& object, const std::string& other) {
    std::vector<Token> tokens;
    for (int slot : tmpl) {
      if (slot == kAttrs) {
        for (const auto& a : attr_words) tokens.push_back({a, TokenKind::attribute});
      } else if (slot == kObject) {
        tokens.push_back({object, TokenKind::object});
      } else if (slot == kOther) {
        tokens.push_back({other, TokenKind::object});
      } else {
        tokens.push_back({fillers[static_cast<std::size_t>(slot) % fillers.size()], TokenKind::filler});
      }
    }
    return Sentence(std::move(tokens));
  };

  if (d.hallucinate(hallucination_probability(n, covered), n)) {
    std::vector<std::string> pool;
    for (const auto& o : scene.objects) {
      for (auto& c : vocab_.companions(o.name)) {
        if (!scene.contains(c) && std::find(pool.begin(), pool.end(), c) == pool.end()) pool.push_back(c);
      }
    }
    if (pool.empty()) {
      for (const auto& c : vocab_.objects()) {
        if (!scene.contains(c)) pool.push_back(c);
      }
    }
    if (!pool.empty()) {
      std::vector<double> logits(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) logits[i] = -0.25 * static_cast<double>(i);
      const std::string ghost = pool[d.pick(logits, temperature)];
      if (d.mixed(cfg_.mixed_hallucination, n)) {
        const ObjectSpec& real = choose_object();
        return render(kMixedTemplate, choose_attributes(real), real.name, ghost);
      }
      std::vector<std::string> ghost_attrs = {attrs[d.uniform_index(attrs.size())]};
      return render(kTemplates[0], ghost_attrs, ghost, {});
    }
  }

  const ObjectSpec& obj = choose_object();
  const std::size_t t = d.pick(kTemplateLogits, temperature);
  return render(kTemplates[t], choose_attributes(obj), obj.name, {});
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const Vocabulary& vocab) {
  switch (cfg.kind) {
    case PolicyKind::toy:
      return std::make_unique<ToyDescriber>(cfg.toy, vocab);
    case PolicyKind::overconfident:
      return std::make_unique<OverconfidentDescriber>(cfg.toy, vocab);
  }
  throw ConfigError("unknown policy kind");
}

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::toy ? "toy" : "overconfident";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "toy") return PolicyKind::toy;
  if (name == "overconfident") return PolicyKind::overconfident;
  throw ConfigError("policy.kind: unknown policy '" + name + "' (expected toy|overconfident)");
}

}  // namespace vimar
