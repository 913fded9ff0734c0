#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vimar/text.hpp"

namespace vimar {

struct ObjectSpec {
  std::string name;
  std::vector<std::string> attributes;
  double salience = 0.0;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

// Synthetic stand-in for an (image, prompt) pair: the grounded objects and
// the instruction the caption answers.
struct Scene {
  std::string id;
  std::vector<ObjectSpec> objects;
  std::string prompt;

  const ObjectSpec* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  double total_salience() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct WorldConfig {
  Vocabulary vocab = Vocabulary::builtin();
  std::size_t min_objects = 3;
  std::size_t max_objects = 7;
  double salience_min = 0.3;
  double salience_max = 1.0;
  // Objects at or above this salience count as salient.
  double salient_cutoff = 0.5;
  std::size_t min_attributes = 1;
  std::size_t max_attributes = 3;
  std::vector<std::string> prompts = {
      "Describe the following image in detail.",
      "Provide a detailed description of the given image.",
      "Give an elaborate explanation of the image you see.",
      "Explain the visual content of the image in great detail.",
      "Write an exhaustive depiction of the given image.",
  };

  void validate() const;
};

// Checks the Scene invariants (unique names, salience range, at least one
// attribute per object, at least one salient object). Throws DataError.
void validate_scene(const Scene& scene, double salient_cutoff);

// Deterministic in (seed, cfg). An empty id becomes "scene-<seed hex>".
Scene gen_scene(std::uint64_t seed, const WorldConfig& cfg, std::string id = {});

// One sentence per object, in descending salience, listing every true
// attribute. Terminated.
Caption render_gt_caption(const Scene& scene, const Vocabulary& vocab);

// Salience-weighted fraction of scene objects present in `mentions`.
double salience_coverage(std::span<const std::string> mentions, const Scene& scene);

}  // namespace vimar
