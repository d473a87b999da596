#pragma once

#include <cstdint>
#include <limits>

namespace mfnet {

/// Role tags separating the independent streams of one experiment.
enum class StreamRole : std::uint64_t {
  Tensor = 1,
  Init = 2,
  TrainBatch = 3,
  Noise = 4,
  EvalBatch = 5,
  Jordan = 6,
  CltInit = 7,
  CltPrior = 8,
  Probe = 9,
  Synthetic = 10,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Counter-based random stream.
///
/// Draw k of a stream is mix64(key + (k + 1) * golden), so the sequence is a
/// pure function of (seed, stream id). Children are keyed off the parent key,
/// which is how per-particle and per-point substreams are made without any
/// shared state. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Stream for (master seed, role, index).
  static RngStream derive(std::uint64_t master_seed, StreamRole role, std::uint64_t index);

  /// Independent substream; does not advance this stream.
  RngStream child(std::uint64_t index) const;

  result_type operator()();

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, one output per two uniforms, no cached state).
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mfnet
