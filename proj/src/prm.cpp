#include "vimar/prm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vimar/error.hpp"

namespace vimar {

namespace {

double jaccard(const std::vector<std::string>& stated, const std::vector<std::string>& truth) {
  std::vector<std::string> t = truth;
  std::sort(t.begin(), t.end());
  std::size_t both = 0;
  for (const auto& a : stated) both += std::binary_search(t.begin(), t.end(), a) ? 1 : 0;
  const std::size_t either = stated.size() + t.size() - both;
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

template <typename AttributesOf>
GroundingTerms terms_for(const std::vector<std::string>& mentions, const Scene& scene,
                         AttributesOf attributes_of) {
  GroundingTerms t;
  if (mentions.empty()) return t;
  std::size_t grounded = 0;
  double weight = 0.0;
  double weighted = 0.0;
  for (const auto& m : mentions) {
    const ObjectSpec* obj = scene.find(m);
    if (obj == nullptr) continue;
    ++grounded;
    weight += obj->salience;
    weighted += obj->salience * jaccard(attributes_of(m), obj->attributes);
  }
  const double n = static_cast<double>(mentions.size());
  t.grounded_fraction = static_cast<double>(grounded) / n;
  t.hallucinated_fraction = static_cast<double>(mentions.size() - grounded) / n;
  if (weight > 0.0) {
    t.attribute_coverage = weighted / weight;
  } else if (grounded > 0) {
    // All grounded objects have zero salience; fall back to an unweighted mean.
    double sum = 0.0;
    for (const auto& m : mentions) {
      if (const ObjectSpec* obj = scene.find(m)) sum += jaccard(attributes_of(m), obj->attributes);
    }
    t.attribute_coverage = sum / static_cast<double>(grounded);
  }
  return t;
}

}  // namespace

void OracleWeights::validate() const {
  for (double w : {grounded, coverage, hallucinated}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("prm.weights must be finite and non-negative");
  }
}

GroundingTerms grounding_terms(const Sentence& sentence, const Scene& scene) {
  if (sentence.is_eos()) return {};
  return terms_for(sentence.mentions(), scene, [&](const std::string& m) {
    const auto* b = sentence.binding(m);
    return b ? b->attributes : std::vector<std::string>{};
  });
}

GroundingTerms grounding_terms(const Caption& caption, const Scene& scene) {
  return terms_for(caption.mentions(), scene, [&](const std::string& m) { return caption.attributes_of(m); });
}

SimilarityScore similarity(const Sentence& sentence, const Scene& scene, const OracleWeights& w) {
  const GroundingTerms t = grounding_terms(sentence, scene);
  const double raw = w.grounded * t.grounded_fraction + w.coverage * t.attribute_coverage -
                     w.hallucinated * t.hallucinated_fraction;
  return {std::clamp(raw, 0.0, 1.0)};
}

void MarginConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("prm.tau must lie in (0,1)");
}

double margin_reward(double delta, const MarginConfig& cfg) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("margin_reward: delta outside [0,1]");
  if (delta >= cfg.tau) return delta;
  const double gap = cfg.tau - delta;
  return cfg.mode == PenaltyMode::literal ? gap : -gap;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile must lie in [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> corpus_similarities(const Corpus& corpus, const OracleWeights& w) {
  std::vector<double> out;
  auto add = [&](const Caption& c, const Scene& scene) {
    for (const auto& s : c.sentences) out.push_back(similarity(s, scene, w).delta);
  };
  for (const auto& e : corpus.entries) {
    add(e.ground_truth, e.scene);
    for (const auto& s : e.samples) add(s.caption, e.scene);
  }
  return out;
}

double calibrate_tau(const Corpus& corpus, double pct, const OracleWeights& w) {
  if (!(pct > 0.0 && pct < 100.0)) throw DomainError("calibrate_tau: percentile must lie in (0,100)");
  auto deltas = corpus_similarities(corpus, w);
  if (deltas.empty()) throw DataError("calibrate_tau: corpus has no sentences");
  return percentile(std::move(deltas), pct);
}

CalibrationReport calibration_report(const Corpus& corpus, double pct, const OracleWeights& w) {
  CalibrationReport r;
  r.percentile = pct;
  r.tau = calibrate_tau(corpus, pct, w);
  auto deltas = corpus_similarities(corpus, w);
  r.count = deltas.size();
  r.min = *std::min_element(deltas.begin(), deltas.end());
  r.max = *std::max_element(deltas.begin(), deltas.end());
  r.mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
  r.p10 = percentile(deltas, 10);
  r.p20 = percentile(deltas, 20);
  r.p50 = percentile(deltas, 50);
  r.p80 = percentile(deltas, 80);
  r.p90 = percentile(deltas, 90);
  return r;
}

std::string to_string(PenaltyMode mode) {
  return mode == PenaltyMode::literal ? "literal" : "signed";
}

PenaltyMode penalty_mode_from_string(const std::string& name) {
  if (name == "literal") return PenaltyMode::literal;
  if (name == "signed") return PenaltyMode::signed_gap;
  throw ConfigError("prm.penalty_mode: unknown mode '" + name + "' (expected literal|signed)");
}

}  // namespace vimar
