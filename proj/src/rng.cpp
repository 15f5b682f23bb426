#include "ember/rng.hpp"

#include <cmath>

#include "ember/error.hpp"

namespace ember {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t state = seed ^ (salt * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  return splitmix64(state);
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) noexcept {
  // FNV-1a
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : salt) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix_seed(seed, h);
}

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
  for (auto& word : s_) word = splitmix64(seed);
}

Rng Rng::from_state(const std::array<std::uint64_t, 4>& state) noexcept {
  Rng rng(0);
  rng.s_ = state;
  return rng;
}

std::uint64_t Rng::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  // Rejection sampling on the largest multiple of `bound`.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % bound;
}

double Rng::normal() noexcept {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

Tensor rng_init(std::uint64_t seed, const InitKind& kind, Shape shape) {
  Tensor out(std::move(shape));
  Rng rng(seed);
  auto fill_uniform = [&](double lo, double hi) {
    for (auto& v : out.data()) {
      // Cast can round up to `hi` for wide ranges; keep the half-open interval.
      float f = static_cast<float>(lo + (hi - lo) * rng.uniform());
      v = f < static_cast<float>(hi) ? f : std::nextafter(static_cast<float>(hi), static_cast<float>(lo));
    }
  };
  auto fill_normal = [&](double mu, double sigma) {
    for (auto& v : out.data()) v = static_cast<float>(mu + sigma * rng.normal());
  };
  if (const auto* u = std::get_if<UniformInit>(&kind)) {
    if (!(u->lo < u->hi)) throw Error(Errc::BadParam, "uniform", "requires lo < hi");
    fill_uniform(u->lo, u->hi);
  } else if (const auto* n = std::get_if<NormalInit>(&kind)) {
    if (!(n->stddev >= 0.0)) throw Error(Errc::BadParam, "normal", "requires sigma >= 0");
    fill_normal(n->mean, n->stddev);
  } else if (const auto* he = std::get_if<HeNormalInit>(&kind)) {
    if (he->fan_in <= 0) throw Error(Errc::BadParam, "he_normal", "fan_in must be positive");
    fill_normal(0.0, std::sqrt(2.0 / static_cast<double>(he->fan_in)));
  } else if (const auto* g = std::get_if<GlorotUniformInit>(&kind)) {
    if (g->fan_in <= 0 || g->fan_out <= 0) throw Error(Errc::BadParam, "glorot_uniform", "fans must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(g->fan_in + g->fan_out));
    fill_uniform(-bound, bound);
  }
  return out;
}

}  // namespace ember
