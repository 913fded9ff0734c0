#include "doctest.h"
#include "support.hpp"
#include "vimar/error.hpp"
#include "vimar/eval.hpp"
#include "vimar/rng.hpp"

using namespace vimar;
using namespace vimar::testing;

namespace {

const Scene kTwo = make_scene("two", {{"dog", {"red"}, 1.0}, {"cat", {"black"}, 0.5}});

ChairScores chair_of(const Caption& c, const Scene& s) {
  const CaptionRef ref{&c, &s};
  return chair(std::span<const CaptionRef>(&ref, 1));
}

// Random caption over a small object pool so hallucinations are common.
Caption random_caption(Rng& rng, const std::vector<std::string>& pool) {
  Caption c;
  const std::size_t n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = "a " + pool[rng.below(pool.size())];
    if (rng.bernoulli(0.5)) text += " is near a " + pool[rng.below(pool.size())];
    c.sentences.push_back(sentence(text));
  }
  c.terminated = true;
  return c;
}

}  // namespace

TEST_CASE("fully grounded captions have zero CHAIR") {
  const Caption c = caption({"there is a red dog", "a black cat"});
  const auto s = chair_of(c, kTwo);
  CHECK(s.chair_s == 0.0);
  CHECK(s.chair_i == 0.0);
}

TEST_CASE("one of four distinct objects hallucinated") {
  const Scene scene = make_scene("four", {{"dog", {"red"}, 1.0}, {"cat", {"red"}, 0.5}, {"cup", {"red"}, 0.5}});
  const Caption c = caption({"a dog is near a cat", "a cup is near a horse", "the horse"});
  const auto s = chair_of(c, scene);
  CHECK(s.chair_i == doctest::Approx(0.25));
  CHECK(s.chair_s == 1.0);
  CHECK(s.counts.mentioned_objects == 4);
}

TEST_CASE("chair matches a brute-force recount on random pairs") {
  Rng rng(8);
  const std::vector<std::string> pool = {"dog", "cat", "cup", "horse", "bus", "kite"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Scene> scenes;
    std::vector<Caption> caps;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<ObjectSpec> objs;
      for (const auto& o : pool) {
        if (rng.bernoulli(0.5)) objs.push_back({o, {"red"}, 0.6});
      }
      scenes.push_back(make_scene("r", objs));
      caps.push_back(random_caption(rng, pool));
    }
    std::vector<CaptionRef> refs;
    std::vector<std::pair<const Caption*, const Scene*>> raw;
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back({&caps[i], &scenes[i]});
      raw.push_back({&caps[i], &scenes[i]});
    }
    const auto got = chair(refs);
    const auto want = brute_chair(raw);
    REQUIRE(got.counts.hallucinated_objects == want.hallucinated_objects);
    REQUIRE(got.counts.mentioned_objects == want.mentioned_objects);
    REQUIRE(got.counts.hallucinated_captions == want.hallucinated_captions);
    REQUIRE(got.counts.total_captions == want.total_captions);
    REQUIRE(got.chair_s >= 0.0);
    REQUIRE(got.chair_s <= 1.0);
    REQUIRE(got.chair_i <= 1.0);
  }
}

TEST_CASE("adding a hallucinated mention never lowers CHAIR") {
  Rng rng(3);
  const std::vector<std::string> pool = {"dog", "cat", "horse", "bus"};
  for (int trial = 0; trial < 200; ++trial) {
    Caption c = random_caption(rng, pool);
    const auto before = chair_of(c, kTwo);
    c.terminated = false;
    c.append(sentence(rng.bernoulli(0.5) ? "a horse" : "a bus"));
    const auto after = chair_of(c, kTwo);
    REQUIRE(after.counts.hallucinated_objects >= before.counts.hallucinated_objects);
    REQUIRE(after.chair_s >= before.chair_s);
  }
}

TEST_CASE("chair rejects an empty list and counts repeats once") {
  CHECK_THROWS_AS(chair(std::span<const CaptionRef>{}), DataError);
  const Caption c = caption({"a horse", "a horse is near a horse"});
  CHECK(chair_of(c, kTwo).counts.hallucinated_objects == 1);
}

TEST_CASE("coverage worked values") {
  CHECK(coverage(render_gt_caption(kTwo, Vocabulary::builtin()), kTwo) == 1.0);
  CHECK(coverage(caption({"there is a horse"}), kTwo) == 0.0);
  CHECK(coverage(caption({"there is a dog"}), kTwo) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("judge is tie-symmetric and antisymmetric") {
  Rng rng(12);
  const std::vector<std::string> pool = {"dog", "cat", "horse", "bus"};
  for (int trial = 0; trial < 300; ++trial) {
    const Caption a = random_caption(rng, pool);
    const Caption b = random_caption(rng, pool);
    CHECK(judge_pairwise(a, a, kTwo) == Verdict::tie);
    const Verdict ab = judge_pairwise(a, b, kTwo);
    const Verdict ba = judge_pairwise(b, a, kTwo);
    if (ab == Verdict::tie) REQUIRE(ba == Verdict::tie);
    if (ab == Verdict::a) REQUIRE(ba == Verdict::b);
    if (ab == Verdict::b) REQUIRE(ba == Verdict::a);
  }
}

TEST_CASE("judge prefers grounded richness over hallucination") {
  const Caption rich = caption({"a dog", "a cat"});
  const Caption poor = caption({"a dog"});
  const Caption liar = caption({"a dog", "a cat", "a horse"});
  CHECK(judge_pairwise(rich, poor, kTwo) == Verdict::a);
  CHECK(judge_pairwise(rich, liar, kTwo) == Verdict::a);
  CHECK(judge_score(liar, kTwo) == doctest::Approx(1.0 - 1.0 / 3.0));
}

TEST_CASE("win-rate bookkeeping") {
  const std::vector<Verdict> v = {Verdict::a, Verdict::a, Verdict::b, Verdict::tie};
  const auto r = win_rate(v);
  CHECK(r.wins + r.ties + r.losses == r.comparisons);
  CHECK(r.win_rate == doctest::Approx(0.5));
}

TEST_CASE("a run compared with itself is all ties") {
  const Corpus corpus = small_corpus(10, 4);
  std::vector<DecodeResult> run;
  std::map<std::string, const Scene*> scenes;
  for (const auto& e : corpus.entries) {
    DecodeResult r;
    r.scene_id = e.scene.id;
    r.caption = e.samples[0].caption;
    run.push_back(r);
    scenes[e.scene.id] = &e.scene;
  }
  const auto w = compare_runs(run, run, scenes);
  CHECK(w.wins == 0);
  CHECK(w.ties == 10);
  CHECK(w.win_rate == 0.0);
  auto shorter = run;
  shorter.pop_back();
  CHECK_THROWS_AS(compare_runs(run, shorter, scenes), DataError);
}

TEST_CASE("SFT export has one record per scene and needs every result") {
  const Corpus corpus = small_corpus(10, 4);
  std::vector<DecodeResult> run;
  for (const auto& e : corpus.entries) {
    DecodeResult r;
    r.scene_id = e.scene.id;
    r.caption = e.ground_truth;
    run.push_back(r);
  }
  const auto sft = export_sft(corpus, run);
  CHECK(sft.size() == 10);
  CHECK(sft[0].prompt == corpus.entries[0].scene.prompt);
  run.pop_back();
  CHECK_THROWS_AS(export_sft(corpus, run), DataError);
}

TEST_CASE("mean_std uses the sample deviation") {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  const auto m = mean_std(v);
  CHECK(m.mean == doctest::Approx(2.0));
  CHECK(m.stddev == doctest::Approx(1.0));
}
