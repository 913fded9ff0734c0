#include "vimar/io.hpp"

#include <fstream>
#include <sstream>

#include "vimar/error.hpp"

namespace vimar {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("record is missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("record field '") + key + "' has the wrong type");
  }
}

const json& node(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("record is missing field '") + key + "'");
  return *it;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string hash_of(const json& j) {
  auto it = j.find("config_hash");
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

// All records of one file must agree on the config hash.
void collect_hash(const std::vector<json>& records, const std::string& path, std::string* out) {
  if (out == nullptr) return;
  out->clear();
  for (const auto& r : records) {
    const std::string h = hash_of(r);
    if (out->empty()) *out = h;
    else if (h != *out) throw DataError("'" + path + "' mixes records from different configs");
  }
}

std::string round_kind(RoundKind k) {
  switch (k) {
    case RoundKind::caption: return "caption";
    case RoundKind::step: return "step";
    case RoundKind::refine: return "refine";
  }
  return "step";
}

RoundKind round_kind_from(const std::string& s) {
  if (s == "caption") return RoundKind::caption;
  if (s == "step") return RoundKind::step;
  if (s == "refine") return RoundKind::refine;
  throw DataError("unknown selection round kind '" + s + "'");
}

}  // namespace

json to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"name", o.name}, {"attributes", o.attributes}, {"salience", o.salience}});
  }
  return {{"id", scene.id}, {"prompt", scene.prompt}, {"objects", objects}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.id = field<std::string>(j, "id");
  s.prompt = field<std::string>(j, "prompt");
  for (const auto& o : node(j, "objects")) {
    s.objects.push_back({field<std::string>(o, "name"), field<std::vector<std::string>>(o, "attributes"),
                         field<double>(o, "salience")});
  }
  return s;
}

json to_json(const Caption& caption) {
  json sentences = json::array();
  for (const auto& s : caption.sentences) sentences.push_back(s.text());
  return {{"sentences", sentences}, {"terminated", caption.terminated}};
}

Caption caption_from_json(const json& j, const Vocabulary& vocab) {
  Caption c;
  for (const auto& text : node(j, "sentences")) {
    if (!text.is_string()) throw DataError("caption sentences must be strings");
    Sentence s = parse_sentence(text.get<std::string>(), vocab);
    if (s.is_eos()) throw DataError("EOS marker inside a caption");
    c.sentences.push_back(std::move(s));
  }
  c.terminated = field<bool>(j, "terminated");
  return c;
}

json to_json(const CorpusEntry& entry, const std::string& config_hash) {
  json samples = json::array();
  for (const auto& s : entry.samples) samples.push_back({{"temperature", s.temperature}, {"caption", to_json(s.caption)}});
  return {{"scene", to_json(entry.scene)},
          {"prompt", entry.scene.prompt},
          {"ground_truth", to_json(entry.ground_truth)},
          {"samples", samples},
          {"config_hash", config_hash}};
}

CorpusEntry corpus_entry_from_json(const json& j, const Vocabulary& vocab) {
  CorpusEntry e;
  e.scene = scene_from_json(node(j, "scene"));
  if (field<std::string>(j, "prompt") != e.scene.prompt) throw DataError(e.scene.id + ": prompt mismatch");
  e.ground_truth = caption_from_json(node(j, "ground_truth"), vocab);
  for (const auto& s : node(j, "samples")) {
    e.samples.push_back({field<double>(s, "temperature"), caption_from_json(node(s, "caption"), vocab)});
  }
  return e;
}

json to_json(const ValueParams& p, const std::string& config_hash) {
  json names = json::array();
  if (p.feature_spec_version == kFeatureSpecVersion) {
    for (auto n : kFeatureNames) names.push_back(std::string(n));
  }
  return {{"record", "value_params"},
          {"feature_spec_version", p.feature_spec_version},
          {"feature_names", names},
          {"gamma", p.gamma},
          {"weights", p.weights},
          {"training",
           {{"epochs", p.meta.epochs},
            {"learning_rate", p.meta.learning_rate},
            {"final_loss", p.meta.final_loss},
            {"loss_curve", p.meta.loss_curve},
            {"triplets", p.meta.triplets},
            {"tau", p.meta.tau},
            {"penalty_mode", p.meta.penalty_mode}}},
          {"config_hash", config_hash}};
}

ValueParams value_params_from_json(const json& j) {
  ValueParams p;
  p.feature_spec_version = field<std::string>(j, "feature_spec_version");
  if (p.feature_spec_version != kFeatureSpecVersion) {
    throw IntegrityError("params file has feature spec '" + p.feature_spec_version + "', engine expects '" +
                         std::string(kFeatureSpecVersion) + "'");
  }
  p.gamma = field<double>(j, "gamma");
  p.weights = field<std::vector<double>>(j, "weights");
  const json& t = node(j, "training");
  p.meta.epochs = field<std::size_t>(t, "epochs");
  p.meta.learning_rate = field<double>(t, "learning_rate");
  p.meta.final_loss = field<double>(t, "final_loss");
  p.meta.loss_curve = field<std::vector<double>>(t, "loss_curve");
  p.meta.triplets = field<std::size_t>(t, "triplets");
  p.meta.tau = field<double>(t, "tau");
  p.meta.penalty_mode = field<std::string>(t, "penalty_mode");
  if (p.weights.size() != kFeatureCount) throw IntegrityError("params file has the wrong weight dimension");
  p.validate();
  return p;
}

json to_json(const BudgetReport& b) {
  return {{"policy_sentence_calls", b.policy_sentence_calls},
          {"policy_caption_calls", b.policy_caption_calls},
          {"reward_calls", b.reward_calls},
          {"value_calls", b.value_calls},
          {"audit_value_calls", b.audit_value_calls},
          {"sentences_in_output", b.sentences_in_output},
          {"selection_steps", b.selection_steps},
          {"refinement_rounds", b.refinement_rounds}};
}

BudgetReport budget_from_json(const json& j) {
  BudgetReport b;
  b.policy_sentence_calls = field<std::size_t>(j, "policy_sentence_calls");
  b.policy_caption_calls = field<std::size_t>(j, "policy_caption_calls");
  b.reward_calls = field<std::size_t>(j, "reward_calls");
  b.value_calls = field<std::size_t>(j, "value_calls");
  b.audit_value_calls = field<std::size_t>(j, "audit_value_calls");
  b.sentences_in_output = field<std::size_t>(j, "sentences_in_output");
  b.selection_steps = field<std::size_t>(j, "selection_steps");
  b.refinement_rounds = field<std::size_t>(j, "refinement_rounds");
  return b;
}

json to_json(const DecodeResult& r, const std::string& config_hash, bool with_candidates) {
  json audit = json::array();
  for (const auto& site : r.audit) {
    if (site.kind == RefinementSite::Kind::low_value) {
      audit.push_back({{"kind", "low_value"}, {"sentence_index", site.sentence_index}});
    } else {
      audit.push_back({{"kind", "missing_content"}, {"objects", site.missing}});
    }
  }
  json j = {{"scene_id", r.scene_id},
            {"strategy", to_string(r.strategy)},
            {"seed", r.seed},
            {"caption", to_json(r.caption)},
            {"budget", to_json(r.budget)},
            {"per_sentence_values", r.per_sentence_values},
            {"audit", audit}};
  if (with_candidates) {
    json rounds = json::array();
    for (const auto& round : r.log) {
      json cands = json::array();
      for (const auto& c : round.candidates) {
        json cj = {{"temperature", c.temperature},
                   {"temperature_index", c.temperature_index},
                   {"k", c.k},
                   {"score", c.score}};
        if (round.kind == RoundKind::caption) cj["caption"] = to_json(c.caption);
        else cj["sentence"] = c.sentence.text();
        cands.push_back(std::move(cj));
      }
      rounds.push_back({{"kind", round_kind(round.kind)},
                        {"index", round.index},
                        {"selected", round.selected},
                        {"candidates", cands}});
    }
    j["candidates"] = rounds;
  }
  j["config_hash"] = config_hash;
  return j;
}

DecodeResult decode_result_from_json(const json& j, const Vocabulary& vocab) {
  DecodeResult r;
  r.scene_id = field<std::string>(j, "scene_id");
  r.strategy = strategy_from_string(field<std::string>(j, "strategy"));
  r.seed = field<std::uint64_t>(j, "seed");
  r.caption = caption_from_json(node(j, "caption"), vocab);
  r.budget = budget_from_json(node(j, "budget"));
  r.per_sentence_values = field<std::vector<double>>(j, "per_sentence_values");
  for (const auto& a : node(j, "audit")) {
    RefinementSite site;
    const auto kind = field<std::string>(a, "kind");
    if (kind == "low_value") {
      site.kind = RefinementSite::Kind::low_value;
      site.sentence_index = field<std::size_t>(a, "sentence_index");
    } else if (kind == "missing_content") {
      site.kind = RefinementSite::Kind::missing_content;
      site.missing = field<std::vector<std::string>>(a, "objects");
    } else {
      throw DataError("unknown audit site kind '" + kind + "'");
    }
    r.audit.push_back(std::move(site));
  }
  if (auto it = j.find("candidates"); it != j.end()) {
    for (const auto& rj : *it) {
      SelectionRound round;
      round.kind = round_kind_from(field<std::string>(rj, "kind"));
      round.index = field<std::size_t>(rj, "index");
      round.selected = field<std::size_t>(rj, "selected");
      for (const auto& cj : node(rj, "candidates")) {
        Candidate c;
        c.temperature = field<double>(cj, "temperature");
        c.temperature_index = field<std::size_t>(cj, "temperature_index");
        c.k = field<std::size_t>(cj, "k");
        c.score = field<double>(cj, "score");
        if (round.kind == RoundKind::caption) c.caption = caption_from_json(node(cj, "caption"), vocab);
        else c.sentence = parse_sentence(field<std::string>(cj, "sentence"), vocab);
        round.candidates.push_back(std::move(c));
      }
      r.log.push_back(std::move(round));
    }
  }
  return r;
}

json to_json(const CalibrationReport& r, const std::string& config_hash) {
  return {{"record", "tau_calibration"},
          {"count", r.count},
          {"min", r.min},
          {"max", r.max},
          {"mean", r.mean},
          {"p10", r.p10},
          {"p20", r.p20},
          {"p50", r.p50},
          {"p80", r.p80},
          {"p90", r.p90},
          {"percentile", r.percentile},
          {"tau", r.tau},
          {"config_hash", config_hash}};
}

json to_json(const SftRecord& r) {
  return {{"scene_id", r.scene_id}, {"prompt", r.prompt}, {"response", r.response}};
}

SftRecord sft_record_from_json(const json& j) {
  return {field<std::string>(j, "scene_id"), field<std::string>(j, "prompt"), field<std::string>(j, "response")};
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
  }
  return out;
}

namespace {

template <typename T, typename Decode>
std::vector<T> decode_records(const std::vector<json>& records, const std::string& path, Decode decode) {
  std::vector<T> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(decode(records[i]));
    } catch (const DataError& e) {
      throw DataError(path + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_corpus(const std::string& path, const Corpus& corpus, const std::string& config_hash) {
  std::vector<json> records;
  for (const auto& e : corpus.entries) records.push_back(to_json(e, config_hash));
  write_jsonl(path, records);
}

Corpus read_corpus(const std::string& path, const Vocabulary& vocab, std::string* config_hash) {
  const auto records = read_jsonl(path);
  collect_hash(records, path, config_hash);
  Corpus c;
  c.entries = decode_records<CorpusEntry>(records, path, [&](const json& r) { return corpus_entry_from_json(r, vocab); });
  if (c.entries.empty()) throw DataError("corpus '" + path + "' is empty");
  return c;
}

void write_value_params(const std::string& path, const ValueParams& params, const std::string& config_hash) {
  write_jsonl(path, {to_json(params, config_hash)});
}

ValueParams read_value_params(const std::string& path, std::string* config_hash) {
  const auto records = read_jsonl(path);
  if (records.size() != 1) throw DataError("params file '" + path + "' must hold exactly one record");
  collect_hash(records, path, config_hash);
  return decode_records<ValueParams>(records, path, value_params_from_json).front();
}

void write_results(const std::string& path, const std::vector<DecodeResult>& results, const std::string& config_hash,
                   bool with_candidates) {
  std::vector<json> records;
  for (const auto& r : results) records.push_back(to_json(r, config_hash, with_candidates));
  write_jsonl(path, records);
}

std::vector<DecodeResult> read_results(const std::string& path, const Vocabulary& vocab, std::string* config_hash) {
  const auto records = read_jsonl(path);
  collect_hash(records, path, config_hash);
  auto out = decode_records<DecodeResult>(records, path,
                                         [&](const json& r) { return decode_result_from_json(r, vocab); });
  if (out.empty()) throw DataError("results file '" + path + "' is empty");
  return out;
}

void write_sft(const std::string& path, const std::vector<SftRecord>& records) {
  std::vector<json> out;
  for (const auto& r : records) out.push_back(to_json(r));
  write_jsonl(path, out);
}

std::vector<SftRecord> read_sft(const std::string& path) {
  return decode_records<SftRecord>(read_jsonl(path), path, sft_record_from_json);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      const auto& cell = row[i];
      if (cell.find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char c : cell) out << (c == '"' ? "\"\"" : std::string(1, c));
        out << '"';
      } else {
        out << cell;
      }
    }
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string format_number(double x) { return json(x).dump(); }

}  // namespace vimar
