#include "vimar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vimar/error.hpp"

namespace vimar {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : path) {
    h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  }
  return h;
}

std::uint64_t hash_string(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw DomainError("Rng::below: empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) throw DomainError("Rng::categorical: no weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("Rng::categorical: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("Rng::categorical: zero total weight");
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u just above the last bucket.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::size_t Rng::softmax_choice(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw DomainError("Rng::softmax_choice: no logits");
  if (!(temperature > 0.0)) throw DomainError("Rng::softmax_choice: temperature must be > 0");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp((logits[i] - top) / temperature);
  }
  return categorical(w);
}

double hashed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return static_cast<double>(derive_seed(seed, path) >> 11) * 0x1.0p-53;
}

}  // namespace vimar
