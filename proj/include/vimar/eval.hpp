#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vimar/corpus.hpp"
#include "vimar/search.hpp"

namespace vimar {

struct CaptionRef {
  const Caption* caption = nullptr;
  const Scene* scene = nullptr;
};

struct ChairCounts {
  std::size_t hallucinated_objects = 0;
  std::size_t mentioned_objects = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t total_captions = 0;

  friend bool operator==(const ChairCounts&, const ChairCounts&) = default;
};

struct ChairScores {
  double chair_s = 0.0;
  double chair_i = 0.0;
  ChairCounts counts;
};

// Distinct objects per caption: a repeated mention counts once. DataError on
// an empty list.
ChairScores chair(std::span<const CaptionRef> items);

// Salience-weighted fraction of scene objects mentioned.
double coverage(const Caption& caption, const Scene& scene);

// Distinct hallucinated objects / distinct mentioned objects (0 if none).
double hallucinated_fraction(const Caption& caption, const Scene& scene);

struct JudgeConfig {
  double lambda = 1.0;
  double tie_epsilon = 1e-9;

  void validate() const;
};

enum class Verdict { a, b, tie };

std::string to_string(Verdict v);

// coverage - lambda * hallucinated_fraction.
double judge_score(const Caption& caption, const Scene& scene, const JudgeConfig& cfg = {});

Verdict judge_pairwise(const Caption& a, const Caption& b, const Scene& scene, const JudgeConfig& cfg = {});

// Full-caption oracle judge for best-of-N selection.
class OracleJudge final : public CaptionScorer {
 public:
  explicit OracleJudge(JudgeConfig cfg = {}) : cfg_(cfg) {}
  double score(const Caption& caption, const Scene& scene) const override {
    return judge_score(caption, scene, cfg_);
  }

 private:
  JudgeConfig cfg_;
};

struct WinRateReport {
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::size_t comparisons = 0;
  double win_rate = 0.0;
};

// Verdicts are from the point of view of `a`.
WinRateReport win_rate(std::span<const Verdict> verdicts);

// Pairs results by scene id and judges `a` against `b`. DataError when the
// two runs cover different scenes or a scene is missing from `scenes`.
WinRateReport compare_runs(std::span<const DecodeResult> a, std::span<const DecodeResult> b,
                           const std::map<std::string, const Scene*>& scenes, const JudgeConfig& cfg = {});

struct SftRecord {
  std::string scene_id;
  std::string prompt;
  std::string response;

  friend bool operator==(const SftRecord&, const SftRecord&) = default;
};

// One <scene, prompt, response> record per corpus scene, in corpus order.
// DataError when a scene has no result.
std::vector<SftRecord> export_sft(const Corpus& corpus, std::span<const DecodeResult> results);

// Joins sentences with ". " and terminates with a period.
std::string render_caption_text(const Caption& caption);

struct StrategySummary {
  std::string strategy;
  std::size_t scenes = 0;
  ChairScores chair;
  double mean_coverage = 0.0;
  double mean_judge_score = 0.0;
  double mean_sentences = 0.0;
  double mean_policy_calls = 0.0;  // caption + sentence calls
  double mean_reward_calls = 0.0;
  double mean_value_calls = 0.0;
  bool has_win_rate = false;
  std::string baseline;
  WinRateReport vs_baseline;
};

StrategySummary summarize(std::span<const DecodeResult> results, const std::map<std::string, const Scene*>& scenes,
                          const JudgeConfig& cfg = {});

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

}  // namespace vimar
