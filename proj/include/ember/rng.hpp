#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <variant>

#include "ember/tensor.hpp"

namespace ember {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Stable 64-bit mix of two values; used to derive per-epoch and per-module streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;
std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) noexcept;

/// xoshiro256** seeded through splitmix64. Bit-identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;
  // Raw generator state, bypassing the splitmix64 seeding.
  static Rng from_state(const std::array<std::uint64_t, 4>& state) noexcept;

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Standard normal by the polar Box-Muller method.
  double normal() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

struct UniformInit {
  double lo = 0.0;
  double hi = 1.0;
};
struct NormalInit {
  double mean = 0.0;
  double stddev = 1.0;
};
struct HeNormalInit {
  std::int64_t fan_in = 1;
};
struct GlorotUniformInit {
  std::int64_t fan_in = 1;
  std::int64_t fan_out = 1;
};

using InitKind = std::variant<UniformInit, NormalInit, HeNormalInit, GlorotUniformInit>;

// Deterministic tensor initialization from `seed`. Throws BadParam on invalid ranges.
Tensor rng_init(std::uint64_t seed, const InitKind& kind, Shape shape);

}  // namespace ember
