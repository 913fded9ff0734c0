#include "vimar/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vimar/config.hpp"
#include "vimar/error.hpp"
#include "vimar/io.hpp"
#include "vimar/pipeline.hpp"

namespace vimar {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::size_t workers = 0;  // 0: keep the config value
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config_path, "JSON run config (defaults apply when omitted)");
  app->add_option("-s,--set", o.overrides, "Override a config key, e.g. --set search.k_per_temp=4")
      ->allow_extra_args(false);
  app->add_option("-o,--out", o.out_dir, "Output directory (overrides output_dir)");
  app->add_option("-w,--workers", o.workers, "Worker threads (overrides workers)");
}

RunConfig resolve_config(const CommonOptions& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file '" + o.config_path + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + o.config_path + "' is not valid JSON: " + e.what());
    }
  }
  for (const auto& s : o.overrides) apply_override(j, s);
  if (!o.out_dir.empty()) j["output_dir"] = o.out_dir;
  if (o.workers > 0) j["workers"] = o.workers;
  return parse_run_config(j);
}

// The effective experiment config, without the per-invocation settings.
json experiment_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("workers");
  j.erase("output_dir");
  j["search"].erase("strategy");
  return j;
}

std::string in_dir(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

std::string or_default(const std::string& given, const RunConfig& cfg, const std::string& name) {
  return given.empty() ? (fs::path(cfg.output_dir) / name).string() : given;
}

json manifest(const std::string& command, const RunConfig& cfg, const std::string& hash) {
  return {{"record", "manifest"},
          {"command", command},
          {"config_hash", hash},
          {"seed", cfg.seed},
          {"config", experiment_config(cfg)}};
}

void require_hash(const std::string& what, const std::string& got, const std::string& expected, bool allow) {
  if (got == expected || allow) return;
  throw DataError(what + " has config hash " + (got.empty() ? std::string("<none>") : got) + ", expected " +
                  expected + " (pass --allow-mixed-hash to override)");
}

json budget_totals(const BenchRow& r) { return {{"measured", to_json(r.measured)}, {"predicted", to_json(r.predicted)}}; }

int cmd_gen(const CommonOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  const Corpus corpus = run_gen(cfg);
  const std::string path = in_dir(cfg, "corpus.jsonl");
  write_corpus(path, corpus, hash);
  json m = manifest("gen", cfg, hash);
  m["scenes"] = corpus.entries.size();
  m["samples_per_scene"] = cfg.corpus.samples_per_scene;
  m["captions"] = corpus.caption_count();
  m["files"] = {{"corpus", "corpus.jsonl"}};
  write_jsonl(in_dir(cfg, "gen_manifest.jsonl"), {m});
  out << "gen: " << corpus.entries.size() << " scenes, " << corpus.caption_count() << " captions -> " << path
      << " [" << hash << "]\n";
  return kExitOk;
}

int cmd_calibrate(const CommonOptions& o, const std::string& corpus_arg, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  const Corpus corpus = read_corpus(or_default(corpus_arg, cfg, "corpus.jsonl"), cfg.world.vocab);
  const CalibrationReport report = calibration_report(corpus, cfg.prm.percentile, cfg.prm.weights);
  write_jsonl(in_dir(cfg, "tau_calibration.jsonl"), {to_json(report, hash)});
  out << "calibrate: tau = " << format_number(report.tau) << " (p" << format_number(report.percentile) << " of "
      << report.count << " similarities; min " << format_number(report.min) << ", mean "
      << format_number(report.mean) << ")\n";
  return kExitOk;
}

int cmd_train(const CommonOptions& o, const std::string& corpus_arg, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  const Corpus corpus = read_corpus(or_default(corpus_arg, cfg, "corpus.jsonl"), cfg.world.vocab);
  const TrainOutcome t = run_train(cfg, corpus);
  write_value_params(in_dir(cfg, "value_params.jsonl"), t.params, hash);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < t.params.meta.loss_curve.size(); ++e) {
    rows.push_back({std::to_string(e + 1), format_number(t.params.meta.loss_curve[e])});
  }
  write_csv(in_dir(cfg, "loss_curve.csv"), {"epoch", "mean_loss"}, rows);
  json m = manifest("train", cfg, hash);
  m["tau"] = t.margin.tau;
  m["tau_calibrated"] = t.tau_calibrated;
  m["penalty_mode"] = to_string(t.margin.mode);
  m["triplets"] = t.params.meta.triplets;
  m["final_loss"] = t.params.meta.final_loss;
  m["files"] = {{"params", "value_params.jsonl"}, {"loss_curve", "loss_curve.csv"}};
  write_jsonl(in_dir(cfg, "train_manifest.jsonl"), {m});
  out << "train: " << t.params.meta.triplets << " triplets, tau " << format_number(t.margin.tau)
      << (t.tau_calibrated ? " (calibrated)" : " (pinned)") << ", final loss "
      << format_number(t.params.meta.final_loss) << "\n";
  return kExitOk;
}

int cmd_decode(const CommonOptions& o, const std::string& corpus_arg, const std::string& params_arg,
               const std::string& strategy_arg, bool with_candidates, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  const Strategy strategy = strategy_arg.empty() ? cfg.search.search.strategy : strategy_from_string(strategy_arg);
  const Corpus corpus = read_corpus(or_default(corpus_arg, cfg, "corpus.jsonl"), cfg.world.vocab);
  std::optional<ValueParams> params;
  if (needs_value_model(strategy)) params = read_value_params(or_default(params_arg, cfg, "value_params.jsonl"));
  const DecodeOutcome d = run_decode(cfg, corpus, params ? &*params : nullptr, strategy);

  const std::string name = to_string(strategy);
  write_results(in_dir(cfg, "results_" + name + ".jsonl"), d.results, hash, with_candidates);
  json m = manifest("decode", cfg, hash);
  m["strategy"] = name;
  m["scenes"] = d.results.size();
  m["budget"] = to_json(d.total);
  if (d.has_refine_threshold) m["refine_threshold"] = d.refine_threshold;
  m["files"] = {{"results", "results_" + name + ".jsonl"}};
  write_jsonl(in_dir(cfg, "decode_" + name + "_manifest.jsonl"), {m});
  out << "decode[" << name << "]: " << d.results.size() << " scenes, value calls " << d.total.value_calls
      << ", reward calls " << d.total.reward_calls << "\n";
  return kExitOk;
}

struct LoadedRun {
  std::string path;
  std::string hash;
  std::vector<DecodeResult> results;
};

std::vector<LoadedRun> load_runs(const std::vector<std::string>& files, const Vocabulary& vocab) {
  std::vector<LoadedRun> runs;
  for (const auto& f : files) {
    LoadedRun r{f, {}, {}};
    r.results = read_results(f, vocab, &r.hash);
    runs.push_back(std::move(r));
  }
  return runs;
}

std::string strategy_of(const LoadedRun& run) {
  const Strategy s = run.results.front().strategy;
  for (const auto& r : run.results) {
    if (r.strategy != s) throw DataError("'" + run.path + "' mixes decoding strategies");
  }
  return to_string(s);
}

int cmd_eval(const CommonOptions& o, const std::string& corpus_arg, const std::vector<std::string>& files,
             bool allow_mixed, const std::string& sft_path, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  std::string corpus_hash;
  const Corpus corpus = read_corpus(or_default(corpus_arg, cfg, "corpus.jsonl"), cfg.world.vocab, &corpus_hash);
  require_hash("corpus", corpus_hash, hash, allow_mixed);
  const auto runs = load_runs(files, cfg.world.vocab);
  for (const auto& r : runs) require_hash("'" + r.path + "'", r.hash, hash, allow_mixed);
  const auto scenes = scene_index(corpus);

  const LoadedRun* baseline = nullptr;
  for (const auto& r : runs) {
    if (strategy_of(r) == cfg.eval.baseline) {
      baseline = &r;
      break;
    }
  }

  const std::vector<std::string> header = {
      "strategy",        "scenes",          "chair_s",           "chair_i",         "hallucinated_captions",
      "mean_coverage",   "mean_judge_score", "mean_sentences",   "mean_policy_calls", "mean_reward_calls",
      "mean_value_calls", "baseline",       "win_rate_vs_baseline"};
  std::vector<std::vector<std::string>> rows;
  std::vector<json> records;
  for (const auto& r : runs) {
    StrategySummary s = summarize(r.results, scenes, cfg.eval.judge);
    if (baseline != nullptr) {
      s.has_win_rate = true;
      s.baseline = cfg.eval.baseline;
      s.vs_baseline = compare_runs(r.results, baseline->results, scenes, cfg.eval.judge);
    }
    rows.push_back({s.strategy, std::to_string(s.scenes), format_number(s.chair.chair_s),
                    format_number(s.chair.chair_i), std::to_string(s.chair.counts.hallucinated_captions),
                    format_number(s.mean_coverage), format_number(s.mean_judge_score),
                    format_number(s.mean_sentences), format_number(s.mean_policy_calls),
                    format_number(s.mean_reward_calls), format_number(s.mean_value_calls),
                    s.has_win_rate ? s.baseline : std::string{},
                    s.has_win_rate ? format_number(s.vs_baseline.win_rate) : std::string{}});
    json rec = {{"record", "strategy_summary"},
                {"source", fs::path(r.path).filename().string()},
                {"strategy", s.strategy},
                {"scenes", s.scenes},
                {"chair_s", s.chair.chair_s},
                {"chair_i", s.chair.chair_i},
                {"hallucinated_objects", s.chair.counts.hallucinated_objects},
                {"mentioned_objects", s.chair.counts.mentioned_objects},
                {"hallucinated_captions", s.chair.counts.hallucinated_captions},
                {"mean_coverage", s.mean_coverage},
                {"mean_judge_score", s.mean_judge_score},
                {"mean_sentences", s.mean_sentences},
                {"mean_policy_calls", s.mean_policy_calls},
                {"mean_reward_calls", s.mean_reward_calls},
                {"mean_value_calls", s.mean_value_calls}};
    if (s.has_win_rate) {
      rec["baseline"] = s.baseline;
      rec["win_rate_vs_baseline"] = s.vs_baseline.win_rate;
    }
    rec["config_hash"] = hash;
    records.push_back(std::move(rec));
    out << "eval[" << s.strategy << "]: CHAIR_S " << format_number(s.chair.chair_s) << ", CHAIR_I "
        << format_number(s.chair.chair_i) << ", coverage " << format_number(s.mean_coverage) << "\n";
  }
  write_csv(in_dir(cfg, "report.csv"), header, rows);
  write_jsonl(in_dir(cfg, "report.jsonl"), records);

  if (runs.size() == 2) {
    const WinRateReport w = compare_runs(runs[0].results, runs[1].results, scenes, cfg.eval.judge);
    write_jsonl(in_dir(cfg, "winrate.jsonl"), {{{"record", "win_rate"},
                                               {"a", strategy_of(runs[0])},
                                               {"b", strategy_of(runs[1])},
                                               {"wins", w.wins},
                                               {"ties", w.ties},
                                               {"losses", w.losses},
                                               {"comparisons", w.comparisons},
                                               {"win_rate", w.win_rate},
                                               {"config_hash", hash}}});
    out << "eval: " << strategy_of(runs[0]) << " vs " << strategy_of(runs[1]) << " win rate "
        << format_number(w.win_rate) << " (" << w.wins << "/" << w.ties << "/" << w.losses << ")\n";
  }
  if (!sft_path.empty()) {
    write_sft(sft_path, export_sft(corpus, runs.front().results));
    out << "eval: wrote SFT records to " << sft_path << "\n";
  }
  return kExitOk;
}

int cmd_bench(const CommonOptions& o, const std::vector<std::string>& files, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::string hash = config_hash(cfg);
  const auto runs = load_runs(files, cfg.world.vocab);
  const std::vector<std::string> header = {"strategy", "scene_id", "counter", "measured", "predicted"};
  std::vector<std::vector<std::string>> rows;
  std::vector<json> records;
  std::size_t mismatches = 0;
  for (const auto& run : runs) {
    const auto bench_rows = bench(run.results, cfg.search.search);
    BenchRow total{"*", {}, {}};
    std::size_t bad = 0;
    for (const auto& b : bench_rows) {
      total.measured += b.measured;
      total.predicted += b.predicted;
      if (!(b.measured == b.predicted)) ++bad;
      const json m = to_json(b.measured);
      const json p = to_json(b.predicted);
      for (auto it = m.begin(); it != m.end(); ++it) {
        rows.push_back({strategy_of(run), b.scene_id, it.key(), it.value().dump(), p.at(it.key()).dump()});
      }
    }
    mismatches += bad;
    json rec = {{"record", "bench"},
                {"source", fs::path(run.path).filename().string()},
                {"strategy", strategy_of(run)},
                {"scenes", bench_rows.size()},
                {"mismatched_scenes", bad},
                {"totals", budget_totals(total)},
                {"config_hash", hash}};
    records.push_back(std::move(rec));
    out << "bench[" << strategy_of(run) << "]: " << bench_rows.size() << " scenes, " << bad
        << " mismatched, value calls " << total.measured.value_calls << " (closed form "
        << total.predicted.value_calls << ")\n";
  }
  write_csv(in_dir(cfg, "bench.csv"), header, rows);
  write_jsonl(in_dir(cfg, "bench.jsonl"), records);
  if (mismatches > 0) throw IntegrityError(std::to_string(mismatches) + " scenes disagree with the closed form");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Value-guided caption decoding on a synthetic scene world", "vimar"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string corpus_path, params_path, strategy, sft_path;
  std::vector<std::string> result_files;
  bool with_candidates = false;
  bool allow_mixed = false;

  auto* gen = app.add_subcommand("gen", "Generate scenes, ground truth and sampled captions");
  add_common(gen, common);

  auto* calibrate = app.add_subcommand("calibrate", "Report the similarity distribution and calibrated tau");
  add_common(calibrate, common);
  calibrate->add_option("--corpus", corpus_path, "Corpus JSONL (default <out>/corpus.jsonl)");

  auto* train = app.add_subcommand("train", "Train the value model with TD(0)");
  add_common(train, common);
  train->add_option("--corpus", corpus_path, "Corpus JSONL (default <out>/corpus.jsonl)");

  auto* decode = app.add_subcommand("decode", "Decode every corpus scene with one strategy");
  add_common(decode, common);
  decode->add_option("--corpus", corpus_path, "Corpus JSONL (default <out>/corpus.jsonl)");
  decode->add_option("--params", params_path, "Value params JSONL (default <out>/value_params.jsonl)");
  decode->add_option("--strategy", strategy, "greedy | bon | prm_step | value_step | vimar_two_stage");
  decode->add_flag("--with-candidates", with_candidates, "Log every candidate and its score");

  auto* eval = app.add_subcommand("eval", "CHAIR, coverage and win-rate report over results files");
  add_common(eval, common);
  eval->add_option("--corpus", corpus_path, "Corpus JSONL (default <out>/corpus.jsonl)");
  eval->add_option("results", result_files, "Results JSONL files")->required();
  eval->add_flag("--allow-mixed-hash", allow_mixed, "Accept inputs produced under different configs");
  eval->add_option("--sft", sft_path, "Also export SFT records built from the first results file");

  auto* bench_cmd = app.add_subcommand("bench", "Compare measured budgets with their closed forms");
  add_common(bench_cmd, common);
  bench_cmd->add_option("results", result_files, "Results JSONL files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(common, out);
    if (calibrate->parsed()) return cmd_calibrate(common, corpus_path, out);
    if (train->parsed()) return cmd_train(common, corpus_path, out);
    if (decode->parsed()) return cmd_decode(common, corpus_path, params_path, strategy, with_candidates, out);
    if (eval->parsed()) return cmd_eval(common, corpus_path, result_files, allow_mixed, sft_path, out);
    if (bench_cmd->parsed()) return cmd_bench(common, result_files, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace vimar
