#include "dcl/rng.hpp"

#include <cmath>

namespace dcl {

namespace {

// FNV-1a over the stream name.
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::seed_seq make_seed_seq(std::uint64_t seed, std::string_view stream) {
  const std::uint64_t tag = hash_name(stream);
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view stream) {
  auto seq = make_seed_seq(seed, stream);
  engine_.seed(seq);
}

double Rng::uniform() { return std::generate_canonical<double, 53>(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return normal_(engine_); }

double Rng::exponential_mean(double mean) {
  if (mean == 0.0) return 0.0;
  // Inverse CDF keeps the draw count at one per sample.
  return -mean * std::log1p(-uniform());
}

}  // namespace dcl
