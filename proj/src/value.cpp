#include "vimar/value.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vimar/error.hpp"
#include "vimar/rng.hpp"

namespace vimar {

namespace {

constexpr double kLengthScale = 16.0;

void check_spec(const ValueParams& params) {
  if (params.feature_spec_version != kFeatureSpecVersion) {
    throw IntegrityError("value params were built for feature spec '" + params.feature_spec_version +
                         "', engine uses '" + std::string(kFeatureSpecVersion) + "'");
  }
}

std::vector<std::string> merged(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace

FeatureVector sentence_features(const Sentence& unit, const Scene& scene, const Caption& prefix) {
  FeatureVector f(kFeatureCount, 0.0);
  if (unit.is_eos()) return f;
  const GroundingTerms t = grounding_terms(unit, scene);
  const auto before = prefix.mentions();
  const double prefix_cov = salience_coverage(before, scene);
  const double after_cov = salience_coverage(merged(before, unit.mentions()), scene);
  f[kGroundedFraction] = t.grounded_fraction;
  f[kHallucinatedFraction] = t.hallucinated_fraction;
  f[kAnyHallucination] = t.hallucinated_fraction > 0.0 ? 1.0 : 0.0;
  f[kAttributeCoverage] = t.attribute_coverage;
  f[kPrefixCoverage] = prefix_cov;
  f[kCoverageGain] = after_cov - prefix_cov;
  f[kLateHallucination] = f[kAnyHallucination] * prefix_cov;
  f[kLength] = std::min(1.0, static_cast<double>(unit.tokens().size()) / kLengthScale);
  f[kBias] = 1.0;
  return f;
}

// Mean of the prefix-conditioned sentence features, so the caption score is
// the average per-sentence value under the sentence-trained weights.
FeatureVector caption_features(const Caption& caption, const Scene& scene) {
  FeatureVector f(kFeatureCount, 0.0);
  Caption prefix;
  for (const auto& s : caption.sentences) {
    if (s.is_eos()) continue;
    const FeatureVector g = sentence_features(s, scene, prefix);
    for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] += g[i];
    prefix.sentences.push_back(s);
  }
  if (!prefix.empty()) {
    for (auto& x : f) x /= static_cast<double>(prefix.size());
  }
  return f;
}

void ValueParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw IntegrityError("value params: gamma outside [0,1]");
  for (double w : weights) {
    if (!std::isfinite(w)) throw IntegrityError("value params: non-finite weight");
  }
}

double predict(const ValueParams& params, std::span<const double> features) {
  if (params.weights.size() != features.size()) {
    throw IntegrityError("predict: weight dimension " + std::to_string(params.weights.size()) +
                         " != feature dimension " + std::to_string(features.size()));
  }
  double v = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) v += params.weights[i] * features[i];
  return v;
}

double predict(const ValueParams& params, const Sentence& unit, const Scene& scene, const Caption& prefix) {
  check_spec(params);
  return predict(params, sentence_features(unit, scene, prefix));
}

double predict(const ValueParams& params, const Caption& caption, const Scene& scene) {
  check_spec(params);
  return predict(params, caption_features(caption, scene));
}

const Scene& TrainingTriplet::scene(const Corpus& corpus) const { return corpus.entries.at(entry).scene; }

const Caption& TrainingTriplet::source(const Corpus& corpus) const {
  const auto& e = corpus.entries.at(entry);
  return caption == 0 ? e.ground_truth : e.samples.at(caption - 1).caption;
}

const Sentence& TrainingTriplet::current(const Corpus& corpus) const { return source(corpus).sentences.at(index); }

const Sentence* TrainingTriplet::next(const Corpus& corpus) const {
  if (terminal) return nullptr;
  return &source(corpus).sentences.at(index + 1);
}

Caption TrainingTriplet::prefix(const Corpus& corpus) const {
  const auto& src = source(corpus).sentences;
  Caption p;
  p.sentences.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(index));
  return p;
}

std::vector<TrainingTriplet> build_triplets(const Corpus& corpus, const MarginConfig& margin,
                                            const OracleWeights& oracle) {
  margin.validate();
  std::vector<TrainingTriplet> out;
  for (std::size_t e = 0; e < corpus.entries.size(); ++e) {
    const auto& entry = corpus.entries[e];
    const std::size_t captions = 1 + entry.samples.size();
    for (std::size_t c = 0; c < captions; ++c) {
      const Caption& cap = c == 0 ? entry.ground_truth : entry.samples[c - 1].caption;
      for (std::size_t i = 0; i < cap.size(); ++i) {
        TrainingTriplet t;
        t.entry = e;
        t.caption = c;
        t.index = i;
        t.terminal = i + 1 == cap.size();
        t.reward = margin_reward(similarity(cap.sentences[i], entry.scene, oracle).delta, margin);
        out.push_back(t);
      }
    }
  }
  return out;
}

bool verify_reward(const TrainingTriplet& t, const Corpus& corpus, const MarginConfig& margin,
                   const OracleWeights& oracle) {
  const double r = margin_reward(similarity(t.current(corpus), t.scene(corpus), oracle).delta, margin);
  return r == t.reward;
}

Transition featurize(const TrainingTriplet& t, const Corpus& corpus) {
  const Scene& scene = t.scene(corpus);
  Caption prefix = t.prefix(corpus);
  Transition tr;
  tr.current = sentence_features(t.current(corpus), scene, prefix);
  tr.reward = t.reward;
  if (const Sentence* nx = t.next(corpus)) {
    prefix.sentences.push_back(t.current(corpus));
    tr.next = sentence_features(*nx, scene, prefix);
  }
  return tr;
}

namespace {

// In-place semi-gradient update; returns the squared TD error.
double td_update(std::vector<double>& w, double gamma, const Transition& tr, double lr) {
  auto dot = [&](const FeatureVector& f) {
    if (f.size() != w.size()) throw IntegrityError("td_step: feature dimension does not match weights");
    double v = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) v += w[i] * f[i];
    return v;
  };
  const double target = tr.reward + (tr.next ? gamma * dot(*tr.next) : 0.0);
  const double err = target - dot(tr.current);
  const double loss = err * err;
  if (!std::isfinite(loss)) throw DivergenceError("td_step: non-finite loss (reduce the learning rate)");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += 2.0 * lr * err * tr.current[i];
  return loss;
}

// Mean squared TD error of `w` over every transition, targets held fixed.
double mean_td_loss(const std::vector<double>& w, double gamma, std::span<const Transition> transitions) {
  auto dot = [&](const FeatureVector& f) {
    double v = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) v += w[i] * f[i];
    return v;
  };
  double total = 0.0;
  for (const auto& tr : transitions) {
    const double err = tr.reward + (tr.next ? gamma * dot(*tr.next) : 0.0) - dot(tr.current);
    total += err * err;
  }
  return total / static_cast<double>(transitions.size());
}

}  // namespace

TdStep td_step(const ValueParams& params, const Transition& transition, double lr) {
  if (!(lr > 0.0)) throw DomainError("td_step: learning rate must be > 0");
  TdStep out{params, 0.0};
  out.loss = td_update(out.params.weights, params.gamma, transition, lr);
  for (double w : out.params.weights) {
    if (!std::isfinite(w)) throw DivergenceError("td_step: non-finite weight after update");
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("value.epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("value.learning_rate must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("value.gamma must lie in [0,1]");
  margin.validate();
  oracle.validate();
}

ValueParams train_transitions(std::span<const Transition> transitions, const TrainConfig& cfg,
                              std::size_t dimension, std::string feature_spec_version) {
  cfg.validate();
  if (transitions.empty()) throw DataError("train: no transitions");
  ValueParams params;
  params.weights.assign(dimension, 0.0);
  params.feature_spec_version = std::move(feature_spec_version);
  params.gamma = cfg.gamma;

  std::vector<std::size_t> order(transitions.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(cfg.shuffle_seed, {epoch});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t idx : order) td_update(params.weights, cfg.gamma, transitions[idx], cfg.learning_rate);
    const double mean = mean_td_loss(params.weights, cfg.gamma, transitions);
    if (!std::isfinite(mean)) throw DivergenceError("train: loss diverged at epoch " + std::to_string(epoch));
    params.meta.loss_curve.push_back(mean);
  }
  params.validate();
  params.meta.epochs = cfg.epochs;
  params.meta.learning_rate = cfg.learning_rate;
  params.meta.final_loss = params.meta.loss_curve.back();
  params.meta.triplets = transitions.size();
  params.meta.tau = cfg.margin.tau;
  params.meta.penalty_mode = to_string(cfg.margin.mode);
  return params;
}

ValueParams train(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  const auto triplets = build_triplets(corpus, cfg.margin, cfg.oracle);
  std::vector<Transition> transitions;
  transitions.reserve(triplets.size());
  for (const auto& t : triplets) transitions.push_back(featurize(t, corpus));
  return train_transitions(transitions, cfg, kFeatureCount, std::string(kFeatureSpecVersion));
}

std::vector<double> value_oracle(const ExplicitMdp& mdp, std::size_t max_iterations) {
  const std::size_t n = mdp.rewards.size();
  if (mdp.transitions.size() != n) throw OracleError("value_oracle: transitions/rewards size mismatch");
  if (n > 10'000) throw OracleError("value_oracle: more than 10^4 states");
  if (!(mdp.gamma >= 0.0 && mdp.gamma <= 1.0)) throw OracleError("value_oracle: gamma outside [0,1]");
  for (const auto& edges : mdp.transitions) {
    double mass = 0.0;
    for (const auto& e : edges) {
      if (e.to >= n || e.probability < 0.0) throw OracleError("value_oracle: invalid edge");
      mass += e.probability;
    }
    if (!edges.empty() && std::abs(mass - 1.0) > 1e-9) throw OracleError("value_oracle: row does not sum to 1");
  }
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.transitions[s].empty()) {
        next[s] = 0.0;
        continue;
      }
      double expected = 0.0;
      for (const auto& e : mdp.transitions[s]) expected += e.probability * v[e.to];
      next[s] = mdp.rewards[s] + mdp.gamma * expected;
      residual = std::max(residual, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (residual < 1e-10) return v;
  }
  throw OracleError("value_oracle: no convergence within " + std::to_string(max_iterations) + " iterations");
}

}  // namespace vimar
