#include "vimar/world.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "vimar/error.hpp"
#include "vimar/rng.hpp"

namespace vimar {

const ObjectSpec* Scene::find(std::string_view name) const {
  for (const auto& o : objects) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

double Scene::total_salience() const {
  double total = 0.0;
  for (const auto& o : objects) total += o.salience;
  return total;
}

void WorldConfig::validate() const {
  if (vocab.objects().empty()) throw ConfigError("world.vocabulary: object list is empty");
  if (vocab.attributes().empty()) throw ConfigError("world.vocabulary: attribute list is empty");
  if (vocab.fillers().empty()) throw ConfigError("world.vocabulary: filler list is empty");
  if (min_objects == 0 || min_objects > max_objects) {
    throw ConfigError("world: object-count range [min_objects, max_objects] is empty");
  }
  if (max_objects > vocab.objects().size()) {
    throw ConfigError("world: max_objects exceeds the object vocabulary size");
  }
  if (min_attributes == 0 || min_attributes > max_attributes) {
    throw ConfigError("world: attribute-count range [min_attributes, max_attributes] is empty");
  }
  if (!(salience_min >= 0.0 && salience_min <= salience_max && salience_max <= 1.0)) {
    throw ConfigError("world: salience range must satisfy 0 <= salience_min <= salience_max <= 1");
  }
  if (!(salient_cutoff >= 0.0 && salient_cutoff <= salience_max)) {
    throw ConfigError("world: salient_cutoff must lie in [0, salience_max]");
  }
  if (prompts.empty()) throw ConfigError("world: prompts list is empty");
}

void validate_scene(const Scene& scene, double salient_cutoff) {
  std::unordered_set<std::string> seen;
  bool any_salient = false;
  for (const auto& o : scene.objects) {
    if (!seen.insert(o.name).second) throw DataError(scene.id + ": duplicate object '" + o.name + "'");
    if (!(o.salience >= 0.0 && o.salience <= 1.0)) {
      throw DataError(scene.id + ": salience of '" + o.name + "' outside [0,1]");
    }
    if (o.attributes.empty()) throw DataError(scene.id + ": object '" + o.name + "' has no attributes");
    any_salient = any_salient || o.salience >= salient_cutoff;
  }
  if (!any_salient) throw DataError(scene.id + ": no salient object");
}

Scene gen_scene(std::uint64_t seed, const WorldConfig& cfg, std::string id) {
  cfg.validate();
  Rng rng(seed);
  Scene scene;
  if (id.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene-%016llx", static_cast<unsigned long long>(seed));
    id = buf;
  }
  scene.id = std::move(id);

  const std::size_t n = cfg.min_objects + rng.below(cfg.max_objects - cfg.min_objects + 1);
  std::vector<std::size_t> pool(cfg.vocab.objects().size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> attr_pool(cfg.vocab.attributes().size());
  std::iota(attr_pool.begin(), attr_pool.end(), std::size_t{0});

  for (std::size_t i = 0; i < n; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    ObjectSpec obj;
    obj.name = cfg.vocab.objects()[pool[i]];
    const std::size_t max_a = std::min(cfg.max_attributes, attr_pool.size());
    const std::size_t min_a = std::min(cfg.min_attributes, max_a);
    const std::size_t na = min_a + rng.below(max_a - min_a + 1);
    for (std::size_t a = 0; a < na; ++a) {
      std::swap(attr_pool[a], attr_pool[a + rng.below(attr_pool.size() - a)]);
      obj.attributes.push_back(cfg.vocab.attributes()[attr_pool[a]]);
    }
    obj.salience = rng.uniform(cfg.salience_min, cfg.salience_max);
    scene.objects.push_back(std::move(obj));
  }

  auto top = std::max_element(scene.objects.begin(), scene.objects.end(),
                              [](const ObjectSpec& a, const ObjectSpec& b) { return a.salience < b.salience; });
  if (top->salience < cfg.salient_cutoff) {
    top->salience = rng.uniform(cfg.salient_cutoff, cfg.salience_max);
  }
  scene.prompt = cfg.prompts[rng.below(cfg.prompts.size())];
  return scene;
}

Caption render_gt_caption(const Scene& scene, const Vocabulary& vocab) {
  std::vector<const ObjectSpec*> order;
  for (const auto& o : scene.objects) order.push_back(&o);
  std::stable_sort(order.begin(), order.end(),
                   [](const ObjectSpec* a, const ObjectSpec* b) { return a->salience > b->salience; });

  const auto& f = vocab.fillers();
  auto filler = [&](std::size_t i) { return Token{f[i % f.size()], TokenKind::filler}; };
  Caption caption;
  for (const ObjectSpec* o : order) {
    // "there is a <attrs...> <object>"
    std::vector<Token> tokens = {filler(2), filler(3), filler(0)};
    for (const auto& a : o->attributes) tokens.push_back({a, TokenKind::attribute});
    tokens.push_back({o->name, TokenKind::object});
    caption.sentences.emplace_back(std::move(tokens));
  }
  caption.terminated = true;
  return caption;
}

double salience_coverage(std::span<const std::string> mentions, const Scene& scene) {
  const double total = scene.total_salience();
  if (!(total > 0.0)) return 0.0;
  double covered = 0.0;
  for (const auto& o : scene.objects) {
    if (std::find(mentions.begin(), mentions.end(), o.name) != mentions.end()) covered += o.salience;
  }
  return covered / total;
}

}  // namespace vimar
