#include "vimar/corpus.hpp"

#include <cmath>
#include <cstdio>

#include "vimar/error.hpp"
#include "vimar/parallel.hpp"
#include "vimar/rng.hpp"

namespace vimar {

namespace {

constexpr std::uint64_t kSceneStream = 0x5343454e45ULL;
constexpr std::uint64_t kSampleStream = 0x53414d504cULL;

template <typename E>
[[noreturn]] void rethrow_as(const E& e, const std::string& context) {
  throw E(context + ": " + e.what());
}

}  // namespace

std::size_t Corpus::caption_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += 1 + e.samples.size();
  return n;
}

void CorpusConfig::validate() const {
  if (scenes == 0) throw ConfigError("corpus.scenes must be >= 1");
  if (temperatures.empty()) throw ConfigError("corpus.temperatures must be non-empty");
  for (double t : temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("corpus.temperatures must all be > 0");
  }
}

Corpus gen_corpus(const CorpusConfig& cfg, const WorldConfig& world, const Policy& policy,
                  std::uint64_t seed, std::size_t workers) {
  cfg.validate();
  world.validate();
  Corpus corpus;
  corpus.entries.resize(cfg.scenes);
  parallel_for(cfg.scenes, workers, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene-%05zu", i);
    CorpusEntry& entry = corpus.entries[i];
    entry.scene = gen_scene(derive_seed(seed, {kSceneStream, i}), world, id);
    entry.ground_truth = render_gt_caption(entry.scene, world.vocab);
    try {
      for (std::size_t j = 0; j < cfg.samples_per_scene; ++j) {
        const double t = cfg.temperatures[j % cfg.temperatures.size()];
        Rng rng = Rng::stream(seed, {kSampleStream, i, j});
        entry.samples.push_back({t, policy.sample_caption(entry.scene, t, rng)});
      }
    } catch (const DomainError& e) {
      rethrow_as(e, entry.scene.id);
    } catch (const StateError& e) {
      rethrow_as(e, entry.scene.id);
    } catch (const DataError& e) {
      rethrow_as(e, entry.scene.id);
    } catch (const ConfigError& e) {
      rethrow_as(e, entry.scene.id);
    } catch (const Error& e) {
      rethrow_as(e, entry.scene.id);
    }
  });
  return corpus;
}

}  // namespace vimar
