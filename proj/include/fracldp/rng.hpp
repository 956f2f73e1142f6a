#pragma once

// Seeded random streams. A stream is identified by (seed, stream, tag); each
// identity maps through std::seed_seq to an independent Mersenne Twister
// state, so Monte Carlo results do not depend on how trials are scheduled.

#include <cstdint>
#include <random>

namespace fracldp {

/// Substream tags used across the library.
enum class StreamTag : std::uint32_t { fbm = 1, brownian = 2, pilot = 3, user = 100 };

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

/// Standard normal draws from one stream.
class NormalSource {
 public:
  NormalSource(std::uint64_t seed, std::uint64_t stream, StreamTag tag)
      : eng_(make_rng(seed, stream, tag)) {}

  double operator()() { return dist_(eng_); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> dist_;
};

}  // namespace fracldp
