#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace focus {

// Deterministic random stream: xoshiro256** seeded through SplitMix64.
//
// A stream is identified by a 64-bit key. Child streams are derived from the
// key alone (never from the current position), so `substream(step, slot)`
// yields the same sequence no matter how many draws the parent has made or
// which thread asks first. Distributions are implemented here rather than
// taken from <random> so draws are bit-identical across standard libraries.
//
// A single stream is single-consumer; derived streams are independent values
// and may be used on different threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  // Independent stream for (step, slot). Key order matters:
  // substream(3, 1) and substream(1, 3) differ.
  RandomStream substream(std::uint64_t step, std::uint64_t slot) const;

  // Domain-separated child stream.
  RandomStream derive(std::uint64_t tag) const;
  RandomStream derive(std::string_view label) const;

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Gaussian via Box-Muller (one value per two uniforms, no caching).
  double normal(double mean, double stddev);
  // Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_;
};

// Entry point named after the contract: identical seeds give identical
// streams on every platform.
inline RandomStream seeded_rng(std::uint64_t seed) { return RandomStream(seed); }

// SplitMix64 finaliser; exposed for hashing labels and ids into stream keys.
std::uint64_t mix64(std::uint64_t x) noexcept;
// FNV-1a over bytes, then mixed.
std::uint64_t hash_label(std::string_view label) noexcept;

}  // namespace focus
