#include <algorithm>

#include "doctest.h"
#include "support.hpp"
#include "vimar/error.hpp"
#include "vimar/prm.hpp"

using namespace vimar;
using namespace vimar::testing;

namespace {

const Scene kScene = make_scene("prm", {{"dog", {"brown", "small"}, 0.9}, {"cat", {"black"}, 0.4}});

MarginConfig margin(double tau, PenaltyMode mode) {
  MarginConfig m;
  m.tau = tau;
  m.mode = mode;
  return m;
}

}  // namespace

TEST_CASE("fully grounded sentence with all attributes reaches the oracle maximum") {
  const OracleWeights w;
  CHECK(similarity(sentence("there is a brown small dog"), kScene).delta == doctest::Approx(w.grounded + w.coverage));
  CHECK(similarity(sentence("there is a black cat"), kScene).delta == doctest::Approx(0.9));
}

TEST_CASE("pure hallucination clamps to zero") {
  CHECK(similarity(sentence("there is a red horse"), kScene).delta == 0.0);
  CHECK(similarity(Sentence::eos(), kScene).delta == 0.0);
}

TEST_CASE("similarity terms by hand") {
  // dog grounded with one of two attributes, horse hallucinated:
  // 0.5*0.5 + 0.4*(0.5*0.5 weighted over grounded only) - 0.6*0.5.
  const Sentence s = sentence("a brown dog is near a horse");
  const GroundingTerms t = grounding_terms(s, kScene);
  CHECK(t.grounded_fraction == doctest::Approx(0.5));
  CHECK(t.hallucinated_fraction == doctest::Approx(0.5));
  CHECK(t.attribute_coverage == doctest::Approx(0.5));
  CHECK(similarity(s, kScene).delta == doctest::Approx(std::max(0.0, 0.25 + 0.2 - 0.3)));
  // A wrong attribute lowers the Jaccard overlap: {brown, red} vs {brown, small}.
  CHECK(grounding_terms(sentence("a red brown dog"), kScene).attribute_coverage == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("similarity stays in [0,1] for heavy weights") {
  OracleWeights w;
  w.grounded = 2.0;
  w.coverage = 2.0;
  CHECK(similarity(sentence("there is a brown small dog"), kScene, w).delta == 1.0);
}

TEST_CASE("margin reward worked values") {
  for (PenaltyMode mode : {PenaltyMode::literal, PenaltyMode::signed_gap}) {
    CHECK(margin_reward(0.30, margin(0.16, mode)) == doctest::Approx(0.30));
    CHECK(margin_reward(0.16, margin(0.16, mode)) == doctest::Approx(0.16));
  }
  CHECK(margin_reward(0.10, margin(0.16, PenaltyMode::literal)) == doctest::Approx(0.06));
  CHECK(margin_reward(0.10, margin(0.16, PenaltyMode::signed_gap)) == doctest::Approx(-0.06));
}

TEST_CASE("margin reward monotonicity in both modes") {
  const double tau = 0.16;
  for (int i = 0; i < 1000; ++i) {
    const double a = i / 1000.0, b = (i + 1) / 1000.0;
    const double sa = margin_reward(a, margin(tau, PenaltyMode::signed_gap));
    const double sb = margin_reward(b, margin(tau, PenaltyMode::signed_gap));
    const double la = margin_reward(a, margin(tau, PenaltyMode::literal));
    const double lb = margin_reward(b, margin(tau, PenaltyMode::literal));
    if (a >= tau) {
      REQUIRE(sb > sa);
      REQUIRE(lb > la);
    } else if (b < tau) {
      REQUIRE(sb > sa);
      REQUIRE(lb < la);
    }
    REQUIRE((sa < 0.0) == (a < tau));
  }
}

TEST_CASE("margin reward rejects out-of-range delta and tau") {
  CHECK_THROWS_AS(margin_reward(-0.01, MarginConfig{}), DomainError);
  CHECK_THROWS_AS(margin_reward(1.01, MarginConfig{}), DomainError);
  CHECK_THROWS_AS(margin(0.0, PenaltyMode::literal).validate(), ConfigError);
  CHECK_THROWS_AS(margin(1.0, PenaltyMode::literal).validate(), ConfigError);
}

TEST_CASE("calibrate_tau on a constant distribution returns the constant") {
  Corpus corpus;
  CorpusEntry e;
  e.scene = kScene;
  e.ground_truth = caption({"a brown dog is near a horse", "a brown dog is near a horse"});
  corpus.entries.push_back(e);
  const double c = similarity(e.ground_truth.sentences[0], kScene).delta;
  for (double p : {1.0, 17.0, 50.0, 99.0}) CHECK(calibrate_tau(corpus, p) == doctest::Approx(c));
}

TEST_CASE("calibrate_tau is monotone in the percentile and permutation invariant") {
  Corpus corpus = small_corpus(40, 2);
  double prev = -1.0;
  for (double p = 1.0; p < 100.0; p += 7.0) {
    const double t = calibrate_tau(corpus, p);
    CHECK(t >= prev);
    prev = t;
  }
  Corpus shuffled = corpus;
  std::reverse(shuffled.entries.begin(), shuffled.entries.end());
  for (auto& e : shuffled.entries) std::reverse(e.samples.begin(), e.samples.end());
  CHECK(calibrate_tau(shuffled, 17.0) == calibrate_tau(corpus, 17.0));
}

TEST_CASE("calibrate_tau preconditions") {
  CHECK_THROWS_AS(calibrate_tau(Corpus{}, 17.0), DataError);
  CHECK_THROWS_AS(calibrate_tau(small_corpus(2, 1), 0.0), DomainError);
  CHECK_THROWS_AS(calibrate_tau(small_corpus(2, 1), 100.0), DomainError);
}

TEST_CASE("calibration report is ordered and counts every sentence") {
  const Corpus corpus = small_corpus(30, 8);
  const CalibrationReport r = calibration_report(corpus, 17.0);
  CHECK(r.count == recount_triplets(corpus));
  CHECK(r.min <= r.p10);
  CHECK(r.p10 <= r.tau);
  CHECK(r.tau <= r.p20);
  CHECK(r.p20 <= r.p50);
  CHECK(r.p50 <= r.p80);
  CHECK(r.p80 <= r.p90);
  CHECK(r.p90 <= r.max);
  CHECK(r.mean >= r.min);
}

TEST_CASE("percentile interpolates linearly") {
  CHECK(percentile({0.0, 1.0}, 25.0) == doctest::Approx(0.25));
  CHECK(percentile({3.0, 1.0, 2.0}, 50.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(percentile({}, 50.0), DataError);
}
