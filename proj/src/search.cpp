#include "vimar/search.hpp"

#include <algorithm>
#include <cmath>

#include "vimar/error.hpp"
#include "vimar/rng.hpp"

namespace vimar {

namespace {

constexpr std::uint64_t kCaptionPool = 1;
constexpr std::uint64_t kStepPool = 2;
constexpr std::uint64_t kRefinePool = 3;
constexpr std::uint64_t kCalibration = 4;

std::uint64_t scene_key(std::uint64_t seed, const Scene& scene) {
  return derive_seed(seed, {hash_string(scene.id)});
}

// Counts one unit of work per invocation; these counters are the budget
// instrumentation.
struct Counter {
  std::size_t& slot;
  void tick() { ++slot; }
};

struct CaptionPool {
  std::vector<Candidate> candidates;
  std::vector<double> scores;
};

template <typename ScoreFn>
CaptionPool sample_caption_pool(const Scene& scene, const Policy& policy, const SearchConfig& cfg,
                                std::uint64_t key, Counter policy_calls, Counter score_calls, ScoreFn score) {
  CaptionPool pool;
  for (std::size_t n = 0; n < cfg.temperatures.size(); ++n) {
    for (std::size_t k = 0; k < cfg.k_per_temp; ++k) {
      Rng rng = Rng::stream(key, {kCaptionPool, n, k});
      Candidate c;
      c.temperature_index = n;
      c.k = k;
      c.temperature = cfg.temperatures[n];
      c.caption = policy.sample_caption(scene, c.temperature, rng);
      policy_calls.tick();
      c.score = score(c.caption);
      score_calls.tick();
      pool.scores.push_back(c.score);
      pool.candidates.push_back(std::move(c));
    }
  }
  return pool;
}

template <typename ScoreFn>
SelectionRound sentence_round(const Scene& scene, const Policy& policy, const SearchConfig& cfg,
                              const Caption& prefix, std::uint64_t key, std::uint64_t tag, std::size_t index,
                              Counter policy_calls, Counter score_calls, ScoreFn score) {
  SelectionRound round;
  round.kind = tag == kStepPool ? RoundKind::step : RoundKind::refine;
  round.index = index;
  std::vector<double> scores;
  for (std::size_t n = 0; n < cfg.temperatures.size(); ++n) {
    for (std::size_t k = 0; k < cfg.k_per_temp; ++k) {
      Rng rng = Rng::stream(key, {tag, index, n, k});
      Candidate c;
      c.temperature_index = n;
      c.k = k;
      c.temperature = cfg.temperatures[n];
      c.sentence = policy.sample_sentence(scene, prefix, c.temperature, rng);
      policy_calls.tick();
      c.score = score(c.sentence, prefix);
      score_calls.tick();
      scores.push_back(c.score);
      round.candidates.push_back(std::move(c));
    }
  }
  round.selected = argmax(scores);
  return round;
}

template <typename ScoreFn>
DecodeResult stepwise(const Scene& scene, const Policy& policy, const SearchConfig& cfg, std::uint64_t seed,
                      Strategy strategy, bool counts_as_value, ScoreFn score) {
  cfg.validate();
  DecodeResult r;
  r.scene_id = scene.id;
  r.strategy = strategy;
  r.seed = seed;
  const std::uint64_t key = scene_key(seed, scene);
  Counter policy_calls{r.budget.policy_sentence_calls};
  Counter score_calls{counts_as_value ? r.budget.value_calls : r.budget.reward_calls};
  Caption& y = r.caption;
  while (y.size() < policy.max_sentences()) {
    SelectionRound round = sentence_round(scene, policy, cfg, y, key, kStepPool, r.budget.selection_steps,
                                          policy_calls, score_calls, score);
    ++r.budget.selection_steps;
    const Candidate& best = round.candidates[round.selected];
    const bool stop = best.sentence.is_eos();
    if (!stop) {
      if (counts_as_value) r.per_sentence_values.push_back(best.score);
      y.append(best.sentence);
    }
    r.log.push_back(std::move(round));
    if (stop) break;
  }
  y.terminated = true;
  r.budget.sentences_in_output = y.size();
  return r;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::bon: return "bon";
    case Strategy::prm_step: return "prm_step";
    case Strategy::value_step: return "value_step";
    case Strategy::vimar_two_stage: return "vimar_two_stage";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : {Strategy::greedy, Strategy::bon, Strategy::prm_step, Strategy::value_step,
                     Strategy::vimar_two_stage}) {
    if (to_string(s) == name) return s;
  }
  if (name == "vimar") return Strategy::vimar_two_stage;
  throw ConfigError("unknown strategy '" + name + "' (expected greedy|bon|prm_step|value_step|vimar_two_stage)");
}

bool needs_value_model(Strategy s) { return s == Strategy::value_step || s == Strategy::vimar_two_stage; }

void SearchConfig::validate() const {
  if (temperatures.empty()) throw ConfigError("search.temperatures must be non-empty");
  for (double t : temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("search.temperatures must all be > 0");
  }
  if (k_per_temp < 1) throw ConfigError("search.k_per_temp must be >= 1");
  if (std::isnan(refine_threshold)) throw ConfigError("search.refine_threshold is NaN");
  if (!(salient_cutoff >= 0.0 && salient_cutoff <= 1.0)) throw ConfigError("search.salient_cutoff must lie in [0,1]");
}

LinearValue::LinearValue(ValueParams params) : params_(std::move(params)) {
  if (params_.feature_spec_version != kFeatureSpecVersion) {
    throw IntegrityError("value params feature spec '" + params_.feature_spec_version + "' != engine spec '" +
                         std::string(kFeatureSpecVersion) + "'");
  }
  if (params_.weights.size() != kFeatureCount) {
    throw IntegrityError("value params have " + std::to_string(params_.weights.size()) + " weights, expected " +
                         std::to_string(kFeatureCount));
  }
  params_.validate();
}

double LinearValue::sentence_value(const Sentence& unit, const Scene& scene, const Caption& prefix) const {
  return predict(params_, unit, scene, prefix);
}

double LinearValue::caption_value(const Caption& caption, const Scene& scene) const {
  return predict(params_, caption, scene);
}

BudgetReport& BudgetReport::operator+=(const BudgetReport& o) {
  policy_sentence_calls += o.policy_sentence_calls;
  policy_caption_calls += o.policy_caption_calls;
  reward_calls += o.reward_calls;
  value_calls += o.value_calls;
  audit_value_calls += o.audit_value_calls;
  sentences_in_output += o.sentences_in_output;
  selection_steps += o.selection_steps;
  refinement_rounds += o.refinement_rounds;
  return *this;
}

BudgetReport expected_budget(Strategy s, std::size_t pool, std::size_t steps, std::size_t rounds,
                             std::size_t sentences_in_output, std::size_t audit_calls) {
  BudgetReport b;
  b.sentences_in_output = sentences_in_output;
  switch (s) {
    case Strategy::greedy:
      b.policy_caption_calls = 1;
      break;
    case Strategy::bon:
      b.policy_caption_calls = pool;
      b.reward_calls = pool;
      break;
    case Strategy::prm_step:
      b.selection_steps = steps;
      b.policy_sentence_calls = pool * steps;
      b.reward_calls = pool * steps;
      break;
    case Strategy::value_step:
      b.selection_steps = steps;
      b.policy_sentence_calls = pool * steps;
      b.value_calls = pool * steps;
      break;
    case Strategy::vimar_two_stage:
      b.refinement_rounds = rounds;
      b.policy_caption_calls = pool;
      b.policy_sentence_calls = pool * rounds;
      b.value_calls = pool * (1 + rounds);
      b.audit_value_calls = audit_calls;
      break;
  }
  return b;
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw DomainError("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

DecodeResult decode_greedy(const Scene& scene, const Policy& policy) {
  DecodeResult r;
  r.scene_id = scene.id;
  r.strategy = Strategy::greedy;
  r.caption = policy.greedy_caption(scene);
  r.budget.policy_caption_calls = 1;
  r.budget.sentences_in_output = r.caption.size();
  return r;
}

DecodeResult decode_bon(const Scene& scene, const Policy& policy, const CaptionScorer& judge,
                        const SearchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DecodeResult r;
  r.scene_id = scene.id;
  r.strategy = Strategy::bon;
  r.seed = seed;
  CaptionPool pool = sample_caption_pool(
      scene, policy, cfg, scene_key(seed, scene), Counter{r.budget.policy_caption_calls},
      Counter{r.budget.reward_calls}, [&](const Caption& c) { return judge.score(c, scene); });
  SelectionRound round;
  round.kind = RoundKind::caption;
  round.selected = argmax(pool.scores);
  round.candidates = std::move(pool.candidates);
  r.caption = round.candidates[round.selected].caption;
  r.log.push_back(std::move(round));
  r.budget.sentences_in_output = r.caption.size();
  return r;
}

DecodeResult decode_prm_step(const Scene& scene, const Policy& policy, const SentenceScorer& prm,
                             const SearchConfig& cfg, std::uint64_t seed) {
  return stepwise(scene, policy, cfg, seed, Strategy::prm_step, false,
                  [&](const Sentence& s, const Caption& prefix) { return prm.score(s, scene, prefix); });
}

DecodeResult decode_value_step(const Scene& scene, const Policy& policy, const ValueFunction& value,
                               const SearchConfig& cfg, std::uint64_t seed) {
  return stepwise(scene, policy, cfg, seed, Strategy::value_step, true,
                  [&](const Sentence& s, const Caption& prefix) { return value.sentence_value(s, scene, prefix); });
}

AuditResult audit_grounding(const Caption& caption, const Scene& scene, const ValueFunction& value,
                            double threshold, double salient_cutoff) {
  AuditResult out;
  Caption prefix;
  for (std::size_t i = 0; i < caption.size(); ++i) {
    const double v = value.sentence_value(caption.sentences[i], scene, prefix);
    out.sentence_values.push_back(v);
    if (v < threshold) out.sites.push_back({RefinementSite::Kind::low_value, i, {}});
    prefix.sentences.push_back(caption.sentences[i]);
  }
  const auto said = caption.mentions();
  RefinementSite missing{RefinementSite::Kind::missing_content, 0, {}};
  for (const auto& o : scene.objects) {
    if (o.salience >= salient_cutoff && !std::binary_search(said.begin(), said.end(), o.name)) {
      missing.missing.push_back(o.name);
    }
  }
  if (!missing.missing.empty()) out.sites.push_back(std::move(missing));
  return out;
}

DecodeResult decode_vimar(const Scene& scene, const Policy& policy, const ValueFunction& value,
                          const SearchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DecodeResult r;
  r.scene_id = scene.id;
  r.strategy = Strategy::vimar_two_stage;
  r.seed = seed;
  const std::uint64_t key = scene_key(seed, scene);

  // Stage 1: holistic selection among N*K full captions.
  CaptionPool pool = sample_caption_pool(
      scene, policy, cfg, key, Counter{r.budget.policy_caption_calls}, Counter{r.budget.value_calls},
      [&](const Caption& c) { return value.caption_value(c, scene); });
  SelectionRound first;
  first.kind = RoundKind::caption;
  first.selected = argmax(pool.scores);
  first.candidates = std::move(pool.candidates);
  Caption y = first.candidates[first.selected].caption;
  r.log.push_back(std::move(first));

  AuditResult audit = audit_grounding(y, scene, value, cfg.refine_threshold, cfg.salient_cutoff);
  r.budget.audit_value_calls = y.size();
  r.audit = audit.sites;
  r.per_sentence_values = audit.sentence_values;

  // Stage 2: each round samples N*K continuations of the current caption and
  // appends the value-argmax. A round addresses one low-value site; the
  // missing-content site stays open until every salient object is mentioned.
  std::size_t pending_low = 0;
  bool missing = false;
  for (const auto& site : audit.sites) {
    if (site.kind == RefinementSite::Kind::low_value) ++pending_low;
    else missing = true;
  }
  y.terminated = false;
  Counter policy_calls{r.budget.policy_sentence_calls};
  Counter value_calls{r.budget.value_calls};
  while ((pending_low > 0 || missing) && r.budget.refinement_rounds < cfg.max_refinements) {
    SelectionRound round =
        sentence_round(scene, policy, cfg, y, key, kRefinePool, r.budget.refinement_rounds, policy_calls,
                       value_calls, [&](const Sentence& s, const Caption& prefix) {
                         return value.sentence_value(s, scene, prefix);
                       });
    ++r.budget.refinement_rounds;
    const Candidate& best = round.candidates[round.selected];
    const bool stop = best.sentence.is_eos();
    if (!stop) {
      r.per_sentence_values.push_back(best.score);
      y.append(best.sentence);
      if (pending_low > 0) --pending_low;
      const auto said = y.mentions();
      missing = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const ObjectSpec& o) {
        return o.salience >= cfg.salient_cutoff && !std::binary_search(said.begin(), said.end(), o.name);
      });
    }
    r.log.push_back(std::move(round));
    if (stop) break;
  }
  y.terminated = true;
  r.caption = std::move(y);
  r.budget.sentences_in_output = r.caption.size();
  return r;
}

double calibrate_refine_threshold(std::span<const Scene> scenes, const Policy& policy,
                                  const ValueFunction& value, const SearchConfig& cfg, std::uint64_t seed,
                                  double pct) {
  cfg.validate();
  if (scenes.empty()) throw DataError("calibrate_refine_threshold: no scenes");
  std::vector<double> values;
  std::size_t sink_policy = 0, sink_value = 0;
  for (const Scene& scene : scenes) {
    CaptionPool pool = sample_caption_pool(scene, policy, cfg, scene_key(derive_seed(seed, {kCalibration}), scene),
                                           Counter{sink_policy}, Counter{sink_value},
                                           [&](const Caption& c) { return value.caption_value(c, scene); });
    const Caption& best = pool.candidates[argmax(pool.scores)].caption;
    const auto audit = audit_grounding(best, scene, value, -std::numeric_limits<double>::infinity(), 1.0);
    values.insert(values.end(), audit.sentence_values.begin(), audit.sentence_values.end());
  }
  return percentile(std::move(values), pct);
}

}  // namespace vimar
