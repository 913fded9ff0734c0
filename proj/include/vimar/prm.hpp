#pragma once

#include <string>
#include <vector>

#include "vimar/corpus.hpp"
#include "vimar/text.hpp"
#include "vimar/world.hpp"

namespace vimar {

// Grounding similarity between one sentence and a scene, in [0,1].
struct SimilarityScore {
  double delta = 0.0;
};

struct OracleWeights {
  double grounded = 0.5;
  double coverage = 0.4;
  double hallucinated = 0.6;

  void validate() const;
};

// The three ingredients of the grounding oracle for one unit of text.
struct GroundingTerms {
  double grounded_fraction = 0.0;      // distinct mentions present in the scene / distinct mentions
  double hallucinated_fraction = 0.0;  // distinct mentions absent from the scene / distinct mentions
  // Salience-weighted attribute coverage of the grounded mentions: each
  // grounded object contributes the Jaccard overlap between the attributes
  // the text binds to it and its true attributes.
  double attribute_coverage = 0.0;
};

GroundingTerms grounding_terms(const Sentence& sentence, const Scene& scene);
GroundingTerms grounding_terms(const Caption& caption, const Scene& scene);

// delta = clamp(w_g * grounded + w_c * attribute_coverage - w_h * hallucinated, 0, 1).
// The EOS sentinel and mention-free sentences score 0. A ground-truth
// sentence scores w_g + w_c, the maximum over all sentences.
SimilarityScore similarity(const Sentence& sentence, const Scene& scene, const OracleWeights& w = {});

enum class PenaltyMode {
  literal,  // below-margin reward is tau - delta
  signed_gap,  // below-margin reward is -(tau - delta)
};

struct MarginConfig {
  double tau = 0.16;
  PenaltyMode mode = PenaltyMode::signed_gap;

  void validate() const;
};

// Margin-adjusted reward. delta >= tau keeps delta; below the margin the
// reward is the gap to tau, negated in signed mode.
double margin_reward(double delta, const MarginConfig& cfg);

// Linear-interpolation percentile (numpy's default) of `values`, p in [0,100].
double percentile(std::vector<double> values, double p);

// Every sentence/scene similarity in the corpus, ground truth and samples.
std::vector<double> corpus_similarities(const Corpus& corpus, const OracleWeights& w = {});

// tau = the `pct` percentile of the corpus similarity distribution.
double calibrate_tau(const Corpus& corpus, double pct, const OracleWeights& w = {});

struct CalibrationReport {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double p10 = 0.0;
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
  double p90 = 0.0;
  double percentile = 17.0;
  double tau = 0.0;
};

CalibrationReport calibration_report(const Corpus& corpus, double pct, const OracleWeights& w = {});

std::string to_string(PenaltyMode mode);
PenaltyMode penalty_mode_from_string(const std::string& name);

}  // namespace vimar
