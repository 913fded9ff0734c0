#pragma once

#include <cstdint>
#include <vector>

#include "vimar/policy.hpp"
#include "vimar/world.hpp"

namespace vimar {

struct SampledCaption {
  double temperature = 0.0;
  Caption caption;

  friend bool operator==(const SampledCaption&, const SampledCaption&) = default;
};

struct CorpusEntry {
  Scene scene;
  Caption ground_truth;
  std::vector<SampledCaption> samples;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct Corpus {
  std::vector<CorpusEntry> entries;

  std::size_t caption_count() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct CorpusConfig {
  std::size_t scenes = 200;
  std::vector<double> temperatures = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t samples_per_scene = 5;

  void validate() const;
};

// Scene i is drawn from stream (seed, i); sampled caption j of scene i uses
// temperatures[j % N] and stream (seed, i, j). Output is identical for any
// worker count.
Corpus gen_corpus(const CorpusConfig& cfg, const WorldConfig& world, const Policy& policy,
                  std::uint64_t seed, std::size_t workers = 1);

}  // namespace vimar
