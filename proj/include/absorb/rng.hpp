#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace absorb {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), so every particle owns an independent
// stream and results do not depend on execution order.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }
};

// Uniform on (0, 1) from 52 random bits, offset by half a step so neither
// end is reachable (with 53 bits the top value rounds to 1).
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

enum class StreamPurpose : std::uint32_t { Initial = 0, Dynamics = 1 };

// Per-particle stream keyed by the master seed. Block b of particle p uses
// counter (b, purpose, p_lo, p_hi).
class ParticleStream {
 public:
  ParticleStream(std::uint64_t seed, std::uint64_t particle, StreamPurpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        particle_(particle), purpose_(static_cast<std::uint32_t>(purpose)) {}

  // Two uniforms on (0,1) from block b.
  std::pair<double, double> uniforms(std::uint64_t block) const {
    const auto r = Philox4x32::generate(
        {static_cast<std::uint32_t>(block), purpose_ | static_cast<std::uint32_t>(block >> 32) << 8,
         static_cast<std::uint32_t>(particle_), static_cast<std::uint32_t>(particle_ >> 32)},
        key_);
    return {to_unit_open(r[0], r[1]), to_unit_open(r[2], r[3])};
  }

  // Two independent standard normals from block b (Box-Muller).
  std::pair<double, double> normals(std::uint64_t block) const {
    const auto [u1, u2] = uniforms(block);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t particle_;
  std::uint32_t purpose_;
};

}  // namespace absorb
