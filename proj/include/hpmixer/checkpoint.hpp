#pragma once

// Model checkpoints.
//
// Binary layout (all integers little-endian):
//   magic "HPMX" | version u32 | model seed u64 | dtype width u32 (4|8)
//   | config text (u64 length + canonical JSON bytes)
//   | parameter count u64
//   | per parameter: name (u64 length + bytes), rank u32, dims (u64 each),
//     raw values (numel * dtype width bytes)
// Parameters are written in registry order; loading rebuilds the model from
// the embedded config and fills every parameter by name, so a save/load/save
// round trip is byte-identical.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hpmixer/config_io.hpp"
#include "hpmixer/model.hpp"

namespace hpmixer {

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

inline void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename V>
void write_pod(std::ofstream& out, V v) {
  write_bytes(out, &v, sizeof(V));
}

inline void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  write_bytes(out, s.data(), s.size());
}

inline void read_bytes(std::ifstream& in, void* p, std::size_t n,
                       const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw DataError("checkpoint: '" + path + "' is truncated or unreadable");
}

template <typename V>
V read_pod(std::ifstream& in, const std::string& path) {
  V v;
  read_bytes(in, &v, sizeof(V), path);
  return v;
}

inline std::string read_string(std::ifstream& in, const std::string& path) {
  const auto n = read_pod<std::uint64_t>(in, path);
  if (n > (1ull << 32)) throw DataError("checkpoint: '" + path + "' is corrupt");
  std::string s(static_cast<std::size_t>(n), '\0');
  read_bytes(in, s.data(), s.size(), path);
  return s;
}

}  // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const HpMixerModel<T>& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write '" + path + "'");
    detail::write_bytes(out, "HPMX", 4);
    detail::write_pod<std::uint32_t>(out, kCheckpointVersion);
    detail::write_pod<std::uint64_t>(out, model.seed());
    detail::write_pod<std::uint32_t>(out, sizeof(T));
    detail::write_string(out, canonical_config_text(model.config()));
    const auto& entries = model.params().entries();
    detail::write_pod<std::uint64_t>(out, entries.size());
    for (const auto& e : entries) {
      detail::write_string(out, e.name);
      detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
      for (std::size_t d = 0; d < e.tensor.rank(); ++d) {
        detail::write_pod<std::uint64_t>(out, e.tensor.dim(d));
      }
      const auto vals = e.tensor.values();
      detail::write_bytes(out, vals.data(), vals.size() * sizeof(T));
    }
    if (!out) throw DataError("checkpoint: write to '" + path + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
HpMixerModel<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  detail::read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, "HPMX", 4) != 0) {
    throw DataError("checkpoint: '" + path + "' is not a model checkpoint");
  }
  const auto version = detail::read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: '" + path + "' has unsupported version " +
                    std::to_string(version));
  }
  const auto seed = detail::read_pod<std::uint64_t>(in, path);
  const auto width = detail::read_pod<std::uint32_t>(in, path);
  if (width != sizeof(T)) {
    throw DataError("checkpoint: '" + path + "' stores " + std::to_string(width) +
                    "-byte values but " + std::to_string(sizeof(T)) +
                    "-byte values were requested");
  }
  const std::string config_text = detail::read_string(in, path);
  ordered_json j;
  try {
    j = ordered_json::parse(config_text);
  } catch (const nlohmann::json::exception&) {
    throw DataError("checkpoint: '" + path + "' has a corrupt embedded config");
  }
  HpMixerModel<T> model(model_config_from_json(j), seed);

  const auto count = detail::read_pod<std::uint64_t>(in, path);
  if (count != model.params().entries().size()) {
    throw DataError("checkpoint: '" + path + "' stores " + std::to_string(count) +
                    " parameters but the config implies " +
                    std::to_string(model.params().entries().size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = detail::read_string(in, path);
    const auto rank = detail::read_pod<std::uint32_t>(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = detail::read_pod<std::uint64_t>(in, path);
    auto* entry = model.params().find(name);
    if (!entry) {
      throw DataError("checkpoint: '" + path + "' has unknown parameter '" + name + "'");
    }
    if (entry->tensor.shape() != shape) {
      throw DataError("checkpoint: parameter '" + name + "' has shape " +
                      shape_str(shape) + " but the model expects " +
                      shape_str(entry->tensor.shape()));
    }
    auto vals = entry->tensor.values();
    detail::read_bytes(in, vals.data(), vals.size() * sizeof(T), path);
  }
  return model;
}

}  // namespace hpmixer
