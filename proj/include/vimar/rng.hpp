#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace vimar {

// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

// Derives a child seed from a parent seed and a path of indices. Streams are
// addressed by (master seed, scene, caption, temperature, candidate, ...) so
// results never depend on the order in which work is scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// FNV-1a, stable across platforms.
std::uint64_t hash_string(std::string_view text);

// Deterministic random stream. mt19937_64's output sequence is fixed by the
// standard; distributions are implemented here rather than taken from
// <random> because the library's distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(seed, path));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);

  // Index drawn from softmax(logits / temperature).
  std::size_t softmax_choice(std::span<const double> logits, double temperature);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

// Uniform [0,1) value that is a pure function of its inputs.
double hashed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

}  // namespace vimar
