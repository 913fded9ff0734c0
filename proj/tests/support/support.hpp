#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// The oracles do not call the library code they check.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimar/corpus.hpp"
#include "vimar/policy.hpp"
#include "vimar/text.hpp"
#include "vimar/value.hpp"
#include "vimar/world.hpp"

namespace vimar::testing {

inline Scene make_scene(const std::string& id, std::vector<ObjectSpec> objects) {
  Scene s;
  s.id = id;
  s.prompt = "Describe the following image in detail.";
  s.objects = std::move(objects);
  return s;
}

inline Sentence sentence(const std::string& text) { return parse_sentence(text, Vocabulary::builtin()); }

inline Caption caption(std::vector<std::string> texts, bool terminated = true) {
  Caption c;
  for (const auto& t : texts) c.sentences.push_back(sentence(t));
  c.terminated = terminated;
  return c;
}

// Brute-force CHAIR recount: distinct object-vocabulary tokens per caption,
// checked against the scene's object names by linear search.
struct BruteChair {
  std::size_t hallucinated_objects = 0;
  std::size_t mentioned_objects = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t total_captions = 0;
};

inline BruteChair brute_chair(const std::vector<std::pair<const Caption*, const Scene*>>& items) {
  const auto& vocab = Vocabulary::builtin();
  BruteChair out;
  for (const auto& [cap, scene] : items) {
    std::set<std::string> seen;
    for (const auto& s : cap->sentences) {
      for (const auto& tok : s.tokens()) {
        if (std::find(vocab.objects().begin(), vocab.objects().end(), tok.text) != vocab.objects().end()) {
          seen.insert(tok.text);
        }
      }
    }
    std::size_t bad = 0;
    for (const auto& name : seen) {
      bool present = false;
      for (const auto& o : scene->objects) present = present || o.name == name;
      if (!present) ++bad;
    }
    out.hallucinated_objects += bad;
    out.mentioned_objects += seen.size();
    out.hallucinated_captions += bad > 0 ? 1 : 0;
    ++out.total_captions;
  }
  return out;
}

// Triplet count by an independent pass: one triplet per non-EOS sentence.
inline std::size_t recount_triplets(const Corpus& corpus) {
  std::size_t n = 0;
  auto add = [&](const Caption& c) {
    for (const auto& s : c.sentences) n += s.is_eos() ? 0 : 1;
  };
  for (const auto& e : corpus.entries) {
    add(e.ground_truth);
    for (const auto& s : e.samples) add(s.caption);
  }
  return n;
}

// Discounted returns of a deterministic chain that ends after its last state.
inline std::vector<double> chain_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> v(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    v[i] = acc;
  }
  return v;
}

// Transitions of a chain with one-hot state features.
inline std::vector<Transition> chain_transitions(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  auto onehot = [n](std::size_t i) {
    FeatureVector f(n, 0.0);
    f[i] = 1.0;
    return f;
  };
  std::vector<Transition> out;
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.current = onehot(i);
    if (i + 1 < n) t.next = onehot(i + 1);
    t.reward = rewards[i];
    out.push_back(std::move(t));
  }
  return out;
}

inline Corpus small_corpus(std::size_t scenes, std::uint64_t seed, double rate = 0.3) {
  CorpusConfig cc;
  cc.scenes = scenes;
  ToyDescriberConfig tc;
  tc.hallucination_rate = rate;
  ToyDescriber policy(tc, Vocabulary::builtin());
  return gen_corpus(cc, WorldConfig{}, policy, seed);
}

}  // namespace vimar::testing
