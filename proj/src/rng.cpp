#include "mfnet/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfnet {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t id) {
  return mix64(seed ^ mix64(id + kGolden));
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(stream_key(seed, stream_id)) {}

RngStream RngStream::derive(std::uint64_t master_seed, StreamRole role, std::uint64_t index) {
  return RngStream(master_seed, 0).child(static_cast<std::uint64_t>(role)).child(index);
}

RngStream RngStream::child(std::uint64_t index) const { return RngStream(key_, index); }

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mfnet
