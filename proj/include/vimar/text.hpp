#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vimar {

enum class TokenKind { object, attribute, filler };

struct Token {
  std::string text;
  TokenKind kind = TokenKind::filler;

  friend bool operator==(const Token&, const Token&) = default;
};

// Closed vocabulary of the synthetic world. Object names and attributes are
// single tokens (multi-word names use underscores), so mention extraction is
// exact.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> objects, std::vector<std::string> attributes,
             std::vector<std::string> fillers);

  // 64 objects, 32 attributes, 16 filler words.
  static const Vocabulary& builtin();

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<std::string>& attributes() const { return attributes_; }
  const std::vector<std::string>& fillers() const { return fillers_; }

  std::optional<TokenKind> kind_of(std::string_view token) const;
  std::optional<std::size_t> object_index(std::string_view name) const;

  // Objects that typically co-occur with `object`; the toy policies draw
  // their hallucinations from this list. Never contains `object` itself.
  std::vector<std::string> companions(std::string_view object) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.objects_ == b.objects_ && a.attributes_ == b.attributes_ && a.fillers_ == b.fillers_;
  }

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> attributes_;
  std::vector<std::string> fillers_;
  std::unordered_map<std::string, TokenKind> kinds_;
  std::unordered_map<std::string, std::size_t> object_ids_;
};

// One sentence of a caption, or the EOS sentinel.
//
// Attribute tokens bind to the next object token in the sentence; the
// bindings are what the grounding oracle checks attribute fidelity against.
class Sentence {
 public:
  struct Binding {
    std::string object;
    std::vector<std::string> attributes;  // sorted, unique

    friend bool operator==(const Binding&, const Binding&) = default;
  };

  Sentence() = default;
  explicit Sentence(std::vector<Token> tokens);

  static Sentence eos();

  bool is_eos() const { return eos_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  // Sorted set of object names occurring in the tokens.
  const std::vector<std::string>& mentions() const { return mentions_; }
  const std::vector<Binding>& bindings() const { return bindings_; }
  const Binding* binding(std::string_view object) const;

  std::string text() const;

  friend bool operator==(const Sentence& a, const Sentence& b) {
    return a.eos_ == b.eos_ && a.tokens_ == b.tokens_;
  }

 private:
  std::vector<Token> tokens_;
  std::vector<std::string> mentions_;
  std::vector<Binding> bindings_;
  bool eos_ = false;
};

inline constexpr std::string_view kEosText = "</s>";

// Parses whitespace-separated tokens against `vocab`. "</s>" yields the EOS
// sentinel. Unknown tokens raise DataError.
Sentence parse_sentence(std::string_view text, const Vocabulary& vocab);

struct Caption {
  std::vector<Sentence> sentences;
  bool terminated = false;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }

  // Union of the sentences' mentions, sorted.
  std::vector<std::string> mentions() const;
  // Union of attributes bound to `object` across all sentences, sorted.
  std::vector<std::string> attributes_of(std::string_view object) const;
  std::size_t token_count() const;

  // Appends a non-EOS sentence; throws StateError on a terminated caption.
  void append(Sentence sentence);

  friend bool operator==(const Caption&, const Caption&) = default;
};

}  // namespace vimar
