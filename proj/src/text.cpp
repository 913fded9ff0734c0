#include "vimar/text.hpp"

#include <algorithm>
#include <sstream>

#include "vimar/error.hpp"

namespace vimar {

namespace {

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> objects, std::vector<std::string> attributes,
                       std::vector<std::string> fillers)
    : objects_(std::move(objects)), attributes_(std::move(attributes)), fillers_(std::move(fillers)) {
  auto add = [this](const std::vector<std::string>& list, TokenKind kind) {
    for (const auto& t : list) {
      if (t.empty() || t.find_first_of(" \t\n") != std::string::npos || t == kEosText) {
        throw ConfigError("vocabulary token '" + t + "' is empty or contains whitespace");
      }
      if (!kinds_.emplace(t, kind).second) {
        throw ConfigError("vocabulary token '" + t + "' appears more than once");
      }
    }
  };
  add(objects_, TokenKind::object);
  add(attributes_, TokenKind::attribute);
  add(fillers_, TokenKind::filler);
  for (std::size_t i = 0; i < objects_.size(); ++i) object_ids_.emplace(objects_[i], i);
}

const Vocabulary& Vocabulary::builtin() {
  static const Vocabulary vocab(
      {"person",     "bicycle",      "car",          "motorcycle", "airplane",      "bus",
       "train",      "truck",        "boat",         "traffic_light", "fire_hydrant", "stop_sign",
       "bench",      "bird",         "cat",          "dog",        "horse",         "sheep",
       "cow",        "elephant",     "bear",         "zebra",      "giraffe",       "backpack",
       "umbrella",   "handbag",      "tie",          "suitcase",   "frisbee",       "skis",
       "snowboard",  "kite",         "baseball_bat", "skateboard", "surfboard",     "tennis_racket",
       "bottle",     "wine_glass",   "cup",          "fork",       "knife",         "spoon",
       "bowl",       "banana",       "apple",        "sandwich",   "orange",        "broccoli",
       "carrot",     "pizza",        "donut",        "cake",       "chair",         "couch",
       "potted_plant", "bed",        "dining_table", "toilet",     "tv",            "laptop",
       "keyboard",   "cell_phone",   "microwave",    "sink"},
      {"red",    "blue",  "green",   "yellow", "white",   "black",   "brown", "gray",
       "golden", "pink",  "purple",  "large",  "small",   "tall",    "short", "wooden",
       "metal",  "plastic", "striped", "spotted", "shiny", "old",    "new",   "wet",
       "dry",    "bright", "dark",   "round",  "square",  "open",    "closed", "empty"},
      {"a", "the", "there", "is", "image", "shows", "visible", "in", "scene", "near", "with", "of",
       "an", "and", "on", "next"});
  return vocab;
}

std::optional<TokenKind> Vocabulary::kind_of(std::string_view token) const {
  auto it = kinds_.find(std::string(token));
  if (it == kinds_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Vocabulary::object_index(std::string_view name) const {
  auto it = object_ids_.find(std::string(name));
  if (it == object_ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Vocabulary::companions(std::string_view object) const {
  std::vector<std::string> out;
  auto idx = object_index(object);
  if (!idx || objects_.size() < 2) return out;
  const std::size_t n = objects_.size();
  // Fixed co-occurrence offsets; distinct for any vocabulary larger than 17.
  for (std::size_t offset : {1u, 5u, 17u}) {
    const std::string& c = objects_[(*idx + offset) % n];
    if (c != object && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

Sentence::Sentence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  std::vector<std::string> pending;
  for (const auto& tok : tokens_) {
    switch (tok.kind) {
      case TokenKind::attribute:
        pending.push_back(tok.text);
        break;
      case TokenKind::object: {
        mentions_.push_back(tok.text);
        auto it = std::find_if(bindings_.begin(), bindings_.end(),
                               [&](const Binding& b) { return b.object == tok.text; });
        if (it == bindings_.end()) {
          bindings_.push_back({tok.text, {}});
          it = std::prev(bindings_.end());
        }
        it->attributes.insert(it->attributes.end(), pending.begin(), pending.end());
        sort_unique(it->attributes);
        pending.clear();
        break;
      }
      case TokenKind::filler:
        break;
    }
  }
  sort_unique(mentions_);
  std::sort(bindings_.begin(), bindings_.end(),
            [](const Binding& a, const Binding& b) { return a.object < b.object; });
}

Sentence Sentence::eos() {
  Sentence s;
  s.eos_ = true;
  return s;
}

const Sentence::Binding* Sentence::binding(std::string_view object) const {
  auto it = std::lower_bound(bindings_.begin(), bindings_.end(), object,
                             [](const Binding& b, std::string_view o) { return b.object < o; });
  if (it == bindings_.end() || it->object != object) return nullptr;
  return &*it;
}

std::string Sentence::text() const {
  if (eos_) return std::string(kEosText);
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

Sentence parse_sentence(std::string_view text, const Vocabulary& vocab) {
  std::istringstream in{std::string(text)};
  std::vector<Token> tokens;
  std::string word;
  while (in >> word) {
    if (word == kEosText) {
      if (!tokens.empty() || (in >> word)) throw DataError("EOS marker must stand alone: '" + std::string(text) + "'");
      return Sentence::eos();
    }
    auto kind = vocab.kind_of(word);
    if (!kind) throw DataError("unknown token '" + word + "' in sentence '" + std::string(text) + "'");
    tokens.push_back({word, *kind});
  }
  if (tokens.empty()) throw DataError("empty sentence");
  return Sentence(std::move(tokens));
}

std::vector<std::string> Caption::mentions() const {
  std::vector<std::string> out;
  for (const auto& s : sentences) out.insert(out.end(), s.mentions().begin(), s.mentions().end());
  sort_unique(out);
  return out;
}

std::vector<std::string> Caption::attributes_of(std::string_view object) const {
  std::vector<std::string> out;
  for (const auto& s : sentences) {
    if (const auto* b = s.binding(object)) out.insert(out.end(), b->attributes.begin(), b->attributes.end());
  }
  sort_unique(out);
  return out;
}

std::size_t Caption::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens().size();
  return n;
}

void Caption::append(Sentence sentence) {
  if (terminated) throw StateError("cannot append to a terminated caption");
  if (sentence.is_eos()) throw StateError("EOS sentinel is not a caption sentence; terminate instead");
  sentences.push_back(std::move(sentence));
}

}  // namespace vimar
