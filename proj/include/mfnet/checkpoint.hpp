#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mfnet/ensemble.hpp"

namespace mfnet {

/// Everything needed to resume a run bit-exactly. Random streams are
/// counter-based and keyed by step index, so (master_seed, step) is the
/// full RNG cursor.
struct Checkpoint {
  ParticleEnsemble ensemble;
  std::int64_t step = 0;
  std::uint64_t master_seed = 0;
  std::string config_hash;

  bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint_json(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint read_checkpoint_json(const std::filesystem::path& path);

/// Little-endian layout: magic "MFNETCK1", u32 kind, i32 d, f64 alpha, i32 n,
/// i64 step, u64 master_seed, u32 hash length + bytes, f64 c[n], f64 z[n*k].
void write_checkpoint_binary(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint read_checkpoint_binary(const std::filesystem::path& path);

/// Dispatches on extension: ".json" or anything else as binary.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mfnet
