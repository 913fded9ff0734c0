#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vimar/corpus.hpp"
#include "vimar/eval.hpp"
#include "vimar/prm.hpp"
#include "vimar/search.hpp"
#include "vimar/value.hpp"

namespace vimar {

// Record formats are documented in docs/formats.md. Every writer takes the
// producing config's hash and stamps it on each record.

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Caption& caption);
Caption caption_from_json(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json to_json(const CorpusEntry& entry, const std::string& config_hash);
CorpusEntry corpus_entry_from_json(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json to_json(const ValueParams& params, const std::string& config_hash);
// IntegrityError when the record's feature spec differs from the engine's.
ValueParams value_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BudgetReport& b);
BudgetReport budget_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DecodeResult& r, const std::string& config_hash, bool with_candidates);
DecodeResult decode_result_from_json(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json to_json(const CalibrationReport& r, const std::string& config_hash);
nlohmann::json to_json(const SftRecord& r);
SftRecord sft_record_from_json(const nlohmann::json& j);

// JSONL helpers. Reading collects each record's "config_hash" (when present).
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

void write_corpus(const std::string& path, const Corpus& corpus, const std::string& config_hash);
Corpus read_corpus(const std::string& path, const Vocabulary& vocab, std::string* config_hash = nullptr);

void write_value_params(const std::string& path, const ValueParams& params, const std::string& config_hash);
ValueParams read_value_params(const std::string& path, std::string* config_hash = nullptr);

void write_results(const std::string& path, const std::vector<DecodeResult>& results, const std::string& config_hash,
                   bool with_candidates);
std::vector<DecodeResult> read_results(const std::string& path, const Vocabulary& vocab,
                                       std::string* config_hash = nullptr);

void write_sft(const std::string& path, const std::vector<SftRecord>& records);
std::vector<SftRecord> read_sft(const std::string& path);

// RFC 4180-style CSV with a header row.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip decimal form of a double.
std::string format_number(double x);

}  // namespace vimar
