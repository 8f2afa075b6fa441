#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dehom {

// Error taxonomy maps onto CLI exit codes: config 2, numeric 3, io 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

// FNV-1a, used for config/field provenance hashes in artifact sidecars.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Purpose-scoped RNG streams. Every stochastic stage draws from its own
// stream derived from (master seed, purpose, generation), so concurrency
// and resume cannot perturb the sequence another stage sees.
enum class RngPurpose : std::uint64_t {
  VaeInit = 1,
  VaeNoise = 2,
  Crossover = 3,
  Mutation = 4,
  Scratch = 5,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, RngPurpose purpose, std::uint64_t generation = 0) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ seed;
  h ^= static_cast<std::uint64_t>(purpose) * 0xbf58476d1ce4e5b9ull;
  h ^= generation * 0x94d049bb133111ebull;
  h ^= h >> 31;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return std::mt19937_64(h);
}

}  // namespace dehom
