#include "vimar/pipeline.hpp"

#include <algorithm>

#include "vimar/error.hpp"
#include "vimar/io.hpp"
#include "vimar/parallel.hpp"

namespace vimar {

Corpus run_gen(const RunConfig& cfg) {
  const auto policy = make_policy(cfg.policy, cfg.world.vocab);
  return gen_corpus(cfg.corpus, cfg.world, *policy, cfg.seed, cfg.workers);
}

TrainOutcome run_train(const RunConfig& cfg, const Corpus& corpus) {
  TrainOutcome out;
  TrainConfig tc = cfg.train_config();
  out.calibration = calibration_report(corpus, cfg.prm.percentile, cfg.prm.weights);
  if (!cfg.prm.pin_tau) {
    tc.margin.tau = out.calibration.tau;
    out.tau_calibrated = true;
    if (!(tc.margin.tau > 0.0 && tc.margin.tau < 1.0)) {
      throw DataError("calibrated tau " + format_number(tc.margin.tau) + " at percentile " +
                      format_number(cfg.prm.percentile) +
                      " lies outside (0,1); the corpus has too many zero-similarity sentences. Pin prm.tau or "
                      "lower prm.percentile");
    }
  }
  out.margin = tc.margin;
  out.params = train(corpus, tc);
  return out;
}

DecodeOutcome run_decode(const RunConfig& cfg, const Corpus& corpus, const ValueParams* params, Strategy strategy) {
  if (corpus.entries.empty()) throw DataError("decode: the corpus has no scenes");
  const auto policy = make_policy(cfg.policy, cfg.world.vocab);
  SearchConfig search = cfg.search.search;
  search.strategy = strategy;

  std::unique_ptr<LinearValue> value;
  if (needs_value_model(strategy)) {
    if (params == nullptr) throw DomainError("strategy " + to_string(strategy) + " needs a value params file");
    value = std::make_unique<LinearValue>(*params);
  }

  DecodeOutcome out;
  out.strategy = strategy;
  if (strategy == Strategy::vimar_two_stage) {
    if (!cfg.search.pin_refine_threshold) {
      const std::size_t n = std::min(cfg.search.calibration_scenes, corpus.entries.size());
      std::vector<Scene> scenes;
      scenes.reserve(n);
      for (std::size_t i = 0; i < n; ++i) scenes.push_back(corpus.entries[i].scene);
      search.refine_threshold =
          calibrate_refine_threshold(scenes, *policy, *value, search, cfg.seed, cfg.search.refine_percentile);
    }
    out.has_refine_threshold = true;
    out.refine_threshold = search.refine_threshold;
  }

  const PrmScorer prm(cfg.prm.weights);
  const OracleJudge judge(cfg.eval.judge);
  out.results.resize(corpus.entries.size());
  parallel_for(corpus.entries.size(), cfg.workers, [&](std::size_t i) {
    const Scene& scene = corpus.entries[i].scene;
    switch (strategy) {
      case Strategy::greedy: out.results[i] = decode_greedy(scene, *policy); break;
      case Strategy::bon: out.results[i] = decode_bon(scene, *policy, judge, search, cfg.seed); break;
      case Strategy::prm_step: out.results[i] = decode_prm_step(scene, *policy, prm, search, cfg.seed); break;
      case Strategy::value_step: out.results[i] = decode_value_step(scene, *policy, *value, search, cfg.seed); break;
      case Strategy::vimar_two_stage: out.results[i] = decode_vimar(scene, *policy, *value, search, cfg.seed); break;
    }
  });
  for (const auto& r : out.results) out.total += r.budget;
  return out;
}

std::vector<BenchRow> bench(std::span<const DecodeResult> results, const SearchConfig& search) {
  std::vector<BenchRow> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    const BudgetReport& m = r.budget;
    rows.push_back({r.scene_id, m,
                    expected_budget(r.strategy, search.pool_size(), m.selection_steps, m.refinement_rounds,
                                    m.sentences_in_output, m.audit_value_calls)});
  }
  return rows;
}

std::map<std::string, const Scene*> scene_index(const Corpus& corpus) {
  std::map<std::string, const Scene*> out;
  for (const auto& e : corpus.entries) {
    if (!out.emplace(e.scene.id, &e.scene).second) throw DataError("duplicate scene id " + e.scene.id);
  }
  return out;
}

}  // namespace vimar
