#include "mfnet/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mfnet/errors.hpp"

namespace mfnet {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'F', 'N', 'E', 'T', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ValidationError("checkpoint: truncated binary file");
  return v;
}

}  // namespace

void write_checkpoint_json(const Checkpoint& cp, const std::filesystem::path& path) {
  nlohmann::json j{{"format", "mfnet-checkpoint"},
                   {"version", 1},
                   {"unit", cp.ensemble.unit.to_json()},
                   {"n", cp.ensemble.size()},
                   {"step", cp.step},
                   {"master_seed", cp.master_seed},
                   {"config_hash", cp.config_hash},
                   {"c", cp.ensemble.c},
                   {"z", cp.ensemble.z}};
  std::ofstream os(path);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  os << j.dump(1) << '\n';
}

Checkpoint read_checkpoint_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("checkpoint " + path.string() + ": " + ex.what());
  }
  if (j.value("format", "") != "mfnet-checkpoint") throw ValidationError("not an mfnet checkpoint: " + path.string());
  ParticleEnsemble e(Unit::from_json(j.at("unit")), j.at("c").get<std::vector<double>>(),
                     j.at("z").get<std::vector<double>>());
  if (e.size() != j.at("n").get<int>()) throw ValidationError("checkpoint: n does not match array sizes");
  return Checkpoint{std::move(e), j.at("step").get<std::int64_t>(), j.at("master_seed").get<std::uint64_t>(),
                    j.at("config_hash").get<std::string>()};
}

void write_checkpoint_binary(const Checkpoint& cp, const std::filesystem::path& path) {
  static_assert(sizeof(double) == 8);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  const auto& e = cp.ensemble;
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, e.unit.is_rbf() ? 0u : 1u);
  put<std::int32_t>(os, e.unit.input_dim());
  put<double>(os, e.unit.alpha());
  put<std::int32_t>(os, e.size());
  put<std::int64_t>(os, cp.step);
  put<std::uint64_t>(os, cp.master_seed);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(cp.config_hash.size()));
  os.write(cp.config_hash.data(), static_cast<std::streamsize>(cp.config_hash.size()));
  os.write(reinterpret_cast<const char*>(e.c.data()), static_cast<std::streamsize>(e.c.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(e.z.data()), static_cast<std::streamsize>(e.z.size() * sizeof(double)));
}

Checkpoint read_checkpoint_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ValidationError("not an mfnet binary checkpoint: " + path.string());
  const auto kind = get<std::uint32_t>(is);
  const auto d = get<std::int32_t>(is);
  const auto alpha = get<double>(is);
  const auto n = get<std::int32_t>(is);
  const auto step = get<std::int64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  const auto hash_len = get<std::uint32_t>(is);
  if (kind > 1 || n < 0 || hash_len > 4096) throw ValidationError("checkpoint: corrupt header");
  std::string hash(hash_len, '\0');
  is.read(hash.data(), hash_len);
  const Unit unit = kind == 0 ? Unit::rbf(alpha, d) : Unit::sigmoid(d);
  ParticleEnsemble e(unit, n);
  is.read(reinterpret_cast<char*>(e.c.data()), static_cast<std::streamsize>(e.c.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(e.z.data()), static_cast<std::streamsize>(e.z.size() * sizeof(double)));
  if (!is) throw ValidationError("checkpoint: truncated binary file");
  return Checkpoint{std::move(e), step, seed, std::move(hash)};
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return path.extension() == ".json" ? read_checkpoint_json(path) : read_checkpoint_binary(path);
}

}  // namespace mfnet
