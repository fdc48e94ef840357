#ifndef CRITGW_RNG_HPP
#define CRITGW_RNG_HPP

#include <cstdint>

namespace critgw {

/// Counter-based pseudo-random stream.
///
/// Output i of stream (seed, id) is mix64(key(seed, id) + i * GAMMA), the
/// splitmix64 output function applied to a Weyl sequence.  The same
/// (seed, stream_id) always reproduces the same draw sequence on every
/// platform; distinct stream ids get distinct keys, so replicates can be
/// fanned out across workers without coordination.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {
    std::uint64_t h = mix(seed + kGamma);
    key_ = mix(h ^ (stream_id + 0x6A09E667F3BCC909ULL) * 0x2545F4914F6CDD1DULL);
    counter_ = 0;
    weyl_ = key_;
  }

  std::uint64_t next_u64() {
    ++counter_;
    weyl_ += kGamma;
    return mix(weyl_);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1); safe for inverse transforms.
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// O(1) jump over n draws.
  void skip(std::uint64_t n) {
    counter_ += n;
    weyl_ = key_ + counter_ * kGamma;
  }

  /// O(1) jump back; lets block-speculative consumers reprocess draws so
  /// batched and scalar execution stay bit-identical.
  void rewind(std::uint64_t n) {
    counter_ -= n;
    weyl_ = key_ + counter_ * kGamma;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
  std::uint64_t weyl_;  // key_ + counter_ * kGamma, kept incrementally
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace critgw

#endif  // CRITGW_RNG_HPP
