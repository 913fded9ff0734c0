#include "vimar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vimar/error.hpp"

namespace vimar {

ChairScores chair(std::span<const CaptionRef> items) {
  if (items.empty()) throw DataError("chair: empty caption list");
  ChairScores out;
  for (const auto& item : items) {
    std::size_t hallucinated = 0;
    const auto mentions = item.caption->mentions();
    for (const auto& m : mentions) {
      if (!item.scene->contains(m)) ++hallucinated;
    }
    out.counts.mentioned_objects += mentions.size();
    out.counts.hallucinated_objects += hallucinated;
    out.counts.hallucinated_captions += hallucinated > 0 ? 1 : 0;
    ++out.counts.total_captions;
  }
  const auto& c = out.counts;
  out.chair_i = c.mentioned_objects == 0
                    ? 0.0
                    : static_cast<double>(c.hallucinated_objects) / static_cast<double>(c.mentioned_objects);
  out.chair_s = static_cast<double>(c.hallucinated_captions) / static_cast<double>(c.total_captions);
  return out;
}

double coverage(const Caption& caption, const Scene& scene) {
  return salience_coverage(caption.mentions(), scene);
}

double hallucinated_fraction(const Caption& caption, const Scene& scene) {
  const auto mentions = caption.mentions();
  if (mentions.empty()) return 0.0;
  const auto bad = std::count_if(mentions.begin(), mentions.end(),
                                 [&](const std::string& m) { return !scene.contains(m); });
  return static_cast<double>(bad) / static_cast<double>(mentions.size());
}

void JudgeConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("eval.lambda must be finite and >= 0");
  if (!(tie_epsilon >= 0.0)) throw ConfigError("eval.tie_epsilon must be >= 0");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::a: return "A";
    case Verdict::b: return "B";
    case Verdict::tie: return "tie";
  }
  return "tie";
}

double judge_score(const Caption& caption, const Scene& scene, const JudgeConfig& cfg) {
  return coverage(caption, scene) - cfg.lambda * hallucinated_fraction(caption, scene);
}

Verdict judge_pairwise(const Caption& a, const Caption& b, const Scene& scene, const JudgeConfig& cfg) {
  const double diff = judge_score(a, scene, cfg) - judge_score(b, scene, cfg);
  if (std::abs(diff) < cfg.tie_epsilon) return Verdict::tie;
  return diff > 0.0 ? Verdict::a : Verdict::b;
}

WinRateReport win_rate(std::span<const Verdict> verdicts) {
  WinRateReport r;
  for (Verdict v : verdicts) {
    if (v == Verdict::a) ++r.wins;
    else if (v == Verdict::b) ++r.losses;
    else ++r.ties;
  }
  r.comparisons = verdicts.size();
  r.win_rate = r.comparisons == 0 ? 0.0 : static_cast<double>(r.wins) / static_cast<double>(r.comparisons);
  return r;
}

WinRateReport compare_runs(std::span<const DecodeResult> a, std::span<const DecodeResult> b,
                           const std::map<std::string, const Scene*>& scenes, const JudgeConfig& cfg) {
  std::map<std::string, const DecodeResult*> by_id;
  for (const auto& r : b) by_id[r.scene_id] = &r;
  if (by_id.size() != a.size()) throw DataError("compare_runs: result sets cover different scenes");
  std::vector<Verdict> verdicts;
  for (const auto& r : a) {
    auto it = by_id.find(r.scene_id);
    if (it == by_id.end()) throw DataError("compare_runs: scene '" + r.scene_id + "' missing from the other run");
    auto sc = scenes.find(r.scene_id);
    if (sc == scenes.end()) throw DataError("compare_runs: unknown scene '" + r.scene_id + "'");
    verdicts.push_back(judge_pairwise(r.caption, it->second->caption, *sc->second, cfg));
  }
  return win_rate(verdicts);
}

std::string render_caption_text(const Caption& caption) {
  std::string out;
  for (const auto& s : caption.sentences) {
    if (!out.empty()) out += ' ';
    std::string text = s.text();
    if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    out += text + '.';
  }
  return out;
}

std::vector<SftRecord> export_sft(const Corpus& corpus, std::span<const DecodeResult> results) {
  std::map<std::string, const DecodeResult*> by_id;
  for (const auto& r : results) by_id[r.scene_id] = &r;
  std::vector<SftRecord> out;
  for (const auto& e : corpus.entries) {
    auto it = by_id.find(e.scene.id);
    if (it == by_id.end()) throw DataError("export_sft: no decode result for scene '" + e.scene.id + "'");
    out.push_back({e.scene.id, e.scene.prompt, render_caption_text(it->second->caption)});
  }
  return out;
}

StrategySummary summarize(std::span<const DecodeResult> results, const std::map<std::string, const Scene*>& scenes,
                          const JudgeConfig& cfg) {
  if (results.empty()) throw DataError("summarize: no results");
  StrategySummary s;
  s.strategy = to_string(results.front().strategy);
  s.scenes = results.size();
  std::vector<CaptionRef> refs;
  for (const auto& r : results) {
    auto it = scenes.find(r.scene_id);
    if (it == scenes.end()) throw DataError("summarize: unknown scene '" + r.scene_id + "'");
    refs.push_back({&r.caption, it->second});
    s.mean_coverage += coverage(r.caption, *it->second);
    s.mean_judge_score += judge_score(r.caption, *it->second, cfg);
    s.mean_sentences += static_cast<double>(r.caption.size());
    s.mean_policy_calls += static_cast<double>(r.budget.policy_caption_calls + r.budget.policy_sentence_calls);
    s.mean_reward_calls += static_cast<double>(r.budget.reward_calls);
    s.mean_value_calls += static_cast<double>(r.budget.value_calls);
  }
  const double n = static_cast<double>(results.size());
  for (double* m : {&s.mean_coverage, &s.mean_judge_score, &s.mean_sentences, &s.mean_policy_calls,
                    &s.mean_reward_calls, &s.mean_value_calls}) {
    *m /= n;
  }
  s.chair = chair(refs);
  return s;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

}  // namespace vimar
