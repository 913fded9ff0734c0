#include "vimar/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "vimar/error.hpp"
#include "vimar/rng.hpp"

namespace vimar {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object, rejecting anything not consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(child(key) + ": wrong type");
    }
  }

  // Nested object, or nullptr when absent.
  const json* object(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + child(it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check_unit(double x, const std::string& key) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(key + " must lie in [0,1]");
}

}  // namespace

void RunConfig::validate() const {
  if (workers == 0) throw ConfigError("workers must be >= 1");
  world.validate();
  corpus.validate();
  policy.toy.validate();
  prm.weights.validate();
  prm.margin.validate();
  if (!(prm.percentile > 0.0 && prm.percentile < 100.0)) throw ConfigError("prm.percentile must lie in (0,100)");
  train_config().validate();
  search.search.validate();
  if (!(search.refine_percentile > 0.0 && search.refine_percentile < 100.0)) {
    throw ConfigError("search.refine_percentile must lie in (0,100)");
  }
  if (search.calibration_scenes == 0) throw ConfigError("search.calibration_scenes must be >= 1");
  check_unit(search.search.salient_cutoff, "search.salient_cutoff");
  eval.judge.validate();
  strategy_from_string(eval.baseline);
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = value.epochs;
  t.learning_rate = value.learning_rate;
  t.gamma = value.gamma;
  t.shuffle_seed = value.shuffle_seed;
  t.margin = prm.margin;
  t.oracle = prm.weights;
  return t;
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  Section top(j, "");
  top.get("seed", cfg.seed);
  top.get("output_dir", cfg.output_dir);
  top.get("workers", cfg.workers);

  if (const json* w = top.object("world")) {
    Section s(*w, "world");
    s.get("min_objects", cfg.world.min_objects);
    s.get("max_objects", cfg.world.max_objects);
    s.get("salience_min", cfg.world.salience_min);
    s.get("salience_max", cfg.world.salience_max);
    s.get("salient_cutoff", cfg.world.salient_cutoff);
    s.get("min_attributes", cfg.world.min_attributes);
    s.get("max_attributes", cfg.world.max_attributes);
    s.get("prompts", cfg.world.prompts);
    if (const json* v = s.object("vocabulary")) {
      Section vs(*v, "world.vocabulary");
      std::vector<std::string> objects = cfg.world.vocab.objects();
      std::vector<std::string> attributes = cfg.world.vocab.attributes();
      std::vector<std::string> fillers = cfg.world.vocab.fillers();
      vs.get("objects", objects);
      vs.get("attributes", attributes);
      vs.get("fillers", fillers);
      vs.finish();
      cfg.world.vocab = Vocabulary(objects, attributes, fillers);
    }
    s.finish();
  }

  if (const json* c = top.object("corpus")) {
    Section s(*c, "corpus");
    s.get("scenes", cfg.corpus.scenes);
    s.get("temperatures", cfg.corpus.temperatures);
    s.get("samples_per_scene", cfg.corpus.samples_per_scene);
    s.finish();
  }

  if (const json* p = top.object("policy")) {
    Section s(*p, "policy");
    std::string kind = to_string(cfg.policy.kind);
    s.get("kind", kind);
    cfg.policy.kind = policy_kind_from_string(kind);
    auto& t = cfg.policy.toy;
    s.get("hallucination_rate", t.hallucination_rate);
    s.get("omission_bias", t.omission_bias);
    s.get("max_sentences", t.max_sentences);
    s.get("stop_prob", t.stop_prob);
    s.get("mixed_hallucination", t.mixed_hallucination);
    s.get("saturation_hallucination", t.saturation_hallucination);
    s.get("attribute_noise", t.attribute_noise);
    s.get("greedy_seed", t.greedy_seed);
    s.finish();
  }

  if (const json* p = top.object("prm")) {
    Section s(*p, "prm");
    s.get("tau", cfg.prm.margin.tau);
    cfg.prm.pin_tau = p->contains("tau");
    s.get("pin_tau", cfg.prm.pin_tau);
    std::string mode = to_string(cfg.prm.margin.mode);
    s.get("penalty_mode", mode);
    cfg.prm.margin.mode = penalty_mode_from_string(mode);
    s.get("percentile", cfg.prm.percentile);
    if (const json* w = s.object("weights")) {
      Section ws(*w, "prm.weights");
      ws.get("grounded", cfg.prm.weights.grounded);
      ws.get("coverage", cfg.prm.weights.coverage);
      ws.get("hallucinated", cfg.prm.weights.hallucinated);
      ws.finish();
    }
    s.finish();
  }

  if (const json* v = top.object("value")) {
    Section s(*v, "value");
    s.get("epochs", cfg.value.epochs);
    s.get("learning_rate", cfg.value.learning_rate);
    s.get("gamma", cfg.value.gamma);
    s.get("shuffle_seed", cfg.value.shuffle_seed);
    s.finish();
  }

  if (const json* v = top.object("search")) {
    Section s(*v, "search");
    auto& sc = cfg.search.search;
    s.get("temperatures", sc.temperatures);
    s.get("k_per_temp", sc.k_per_temp);
    s.get("max_refinements", sc.max_refinements);
    s.get("salient_cutoff", sc.salient_cutoff);
    std::string strategy = to_string(sc.strategy);
    s.get("strategy", strategy);
    sc.strategy = strategy_from_string(strategy);
    s.get("refine_threshold", sc.refine_threshold);
    cfg.search.pin_refine_threshold = v->contains("refine_threshold");
    s.get("pin_refine_threshold", cfg.search.pin_refine_threshold);
    s.get("refine_percentile", cfg.search.refine_percentile);
    s.get("calibration_scenes", cfg.search.calibration_scenes);
    s.finish();
  }

  if (const json* e = top.object("eval")) {
    Section s(*e, "eval");
    s.get("lambda", cfg.eval.judge.lambda);
    s.get("tie_epsilon", cfg.eval.judge.tie_epsilon);
    s.get("baseline", cfg.eval.baseline);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  j["world"] = {
      {"min_objects", cfg.world.min_objects},
      {"max_objects", cfg.world.max_objects},
      {"salience_min", cfg.world.salience_min},
      {"salience_max", cfg.world.salience_max},
      {"salient_cutoff", cfg.world.salient_cutoff},
      {"min_attributes", cfg.world.min_attributes},
      {"max_attributes", cfg.world.max_attributes},
      {"prompts", cfg.world.prompts},
      {"vocabulary",
       {{"objects", cfg.world.vocab.objects()},
        {"attributes", cfg.world.vocab.attributes()},
        {"fillers", cfg.world.vocab.fillers()}}},
  };
  j["corpus"] = {
      {"scenes", cfg.corpus.scenes},
      {"temperatures", cfg.corpus.temperatures},
      {"samples_per_scene", cfg.corpus.samples_per_scene},
  };
  const auto& t = cfg.policy.toy;
  j["policy"] = {
      {"kind", to_string(cfg.policy.kind)},
      {"hallucination_rate", t.hallucination_rate},
      {"omission_bias", t.omission_bias},
      {"max_sentences", t.max_sentences},
      {"stop_prob", t.stop_prob},
      {"mixed_hallucination", t.mixed_hallucination},
      {"saturation_hallucination", t.saturation_hallucination},
      {"attribute_noise", t.attribute_noise},
      {"greedy_seed", t.greedy_seed},
  };
  j["prm"] = {
      {"tau", cfg.prm.margin.tau},
      {"pin_tau", cfg.prm.pin_tau},
      {"penalty_mode", to_string(cfg.prm.margin.mode)},
      {"percentile", cfg.prm.percentile},
      {"weights",
       {{"grounded", cfg.prm.weights.grounded},
        {"coverage", cfg.prm.weights.coverage},
        {"hallucinated", cfg.prm.weights.hallucinated}}},
  };
  j["value"] = {
      {"epochs", cfg.value.epochs},
      {"learning_rate", cfg.value.learning_rate},
      {"gamma", cfg.value.gamma},
      {"shuffle_seed", cfg.value.shuffle_seed},
  };
  const auto& sc = cfg.search.search;
  j["search"] = {
      {"temperatures", sc.temperatures},
      {"k_per_temp", sc.k_per_temp},
      {"max_refinements", sc.max_refinements},
      {"salient_cutoff", sc.salient_cutoff},
      {"strategy", to_string(sc.strategy)},
      {"pin_refine_threshold", cfg.search.pin_refine_threshold},
      {"refine_percentile", cfg.search.refine_percentile},
      {"calibration_scenes", cfg.search.calibration_scenes},
  };
  if (std::isfinite(sc.refine_threshold)) j["search"]["refine_threshold"] = sc.refine_threshold;
  j["eval"] = {
      {"lambda", cfg.eval.judge.lambda},
      {"tie_epsilon", cfg.eval.judge.tie_epsilon},
      {"baseline", cfg.eval.baseline},
  };
  return j;
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override key '" + path + "' is malformed");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j["search"].erase("strategy");
  j.erase("workers");
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(j.dump())));
  return buf;
}

}  // namespace vimar
