#include "sddlab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "sddlab/error.hpp"
#include "sddlab/io.hpp"

namespace sddlab {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "SDDCKPT1";
constexpr std::size_t kMagicLen = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

std::uint32_t region_crc(const std::string& payload, std::size_t offset, std::size_t bytes) {
  return io::crc32(std::string_view(payload).substr(offset, bytes));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string payload;
  json tensors = json::array();
  for (const auto& p : ckpt.params) {
    const std::size_t offset = payload.size();
    for (float v : p.value.values()) put_u32(payload, std::bit_cast<std::uint32_t>(v));
    const std::size_t bytes = payload.size() - offset;
    tensors.push_back({{"name", p.name},
                       {"shape", p.value.shape()},
                       {"dtype", "f32"},
                       {"prunable", p.prunable},
                       {"offset", offset},
                       {"bytes", bytes},
                       {"crc32", region_crc(payload, offset, bytes)}});
  }
  json masks = json::array();
  for (const auto& e : ckpt.mask.entries()) {
    const std::size_t offset = payload.size();
    std::size_t popcount = 0;
    for (std::size_t i = 0; i < e.keep.size(); i += 8) {
      unsigned char byte = 0;
      for (std::size_t b = 0; b < 8 && i + b < e.keep.size(); ++b) {
        if (e.keep[i + b]) {
          byte = static_cast<unsigned char>(byte | (1u << b));
          ++popcount;
        }
      }
      payload.push_back(static_cast<char>(byte));
    }
    const std::size_t bytes = payload.size() - offset;
    masks.push_back({{"name", e.name},
                     {"shape", e.shape},
                     {"bits", e.keep.size()},
                     {"popcount", popcount},
                     {"offset", offset},
                     {"bytes", bytes},
                     {"crc32", region_crc(payload, offset, bytes)}});
  }
  json manifest = {{"format", 1},
                   {"prune_iter", ckpt.prune_iter},
                   {"tensors", tensors},
                   {"masks", masks},
                   {"keep_fraction", ckpt.mask.keep_fraction()},
                   {"prune_rounds", ckpt.mask.rounds()},
                   {"payload_bytes", payload.size()},
                   {"meta", ckpt.meta}};
  const std::string text = manifest.dump();

  std::string out(kMagic, kMagicLen);
  put_u64(out, text.size());
  out += text;
  put_u32(out, io::crc32(text));
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("checkpoint '" + origin + "': " + why);
  };
  if (bytes.size() < kMagicLen + 8 || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw fail("not a checkpoint (bad magic)");
  }
  const std::uint64_t text_len = get_le(bytes, kMagicLen, 8);
  const std::size_t text_pos = kMagicLen + 8;
  if (text_len > bytes.size() || bytes.size() - text_pos < text_len + 4) {
    throw fail("truncated manifest");
  }
  const std::string text = bytes.substr(text_pos, text_len);
  const auto stored_crc = static_cast<std::uint32_t>(get_le(bytes, text_pos + text_len, 4));
  if (io::crc32(text) != stored_crc) throw fail("manifest checksum mismatch");
  const std::string payload = bytes.substr(text_pos + text_len + 4);

  Checkpoint ckpt;
  try {
    const json manifest = json::parse(text);
    if (manifest.at("format").get<int>() != 1) throw fail("unsupported format version");
    if (manifest.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw fail("payload is " + std::to_string(payload.size()) + " bytes, manifest says " +
                 manifest.at("payload_bytes").dump());
    }
    ckpt.prune_iter = manifest.at("prune_iter").get<int>();
    ckpt.meta = manifest.at("meta");

    auto region = [&](const json& entry) {
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto size = entry.at("bytes").get<std::size_t>();
      const auto name = entry.at("name").get<std::string>();
      if (offset > payload.size() || payload.size() - offset < size) {
        throw fail("region for '" + name + "' lies outside the payload");
      }
      if (region_crc(payload, offset, size) != entry.at("crc32").get<std::uint32_t>()) {
        throw fail("checksum mismatch in region '" + name + "'");
      }
      return std::pair{offset, size};
    };

    for (const auto& t : manifest.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "f32") throw fail("unsupported dtype");
      const auto [offset, size] = region(t);
      Tensor<float> value(t.at("shape").get<Shape>());
      if (size != value.size() * 4) throw fail("tensor size does not match its shape");
      for (std::size_t i = 0; i < value.size(); ++i) {
        value[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(payload, offset + 4 * i, 4)));
      }
      ckpt.params.add(t.at("name").get<std::string>(), std::move(value),
                      t.at("prunable").get<bool>());
    }

    pruning::PruneMask mask;
    for (const auto& m : manifest.at("masks")) {
      const auto [offset, size] = region(m);
      pruning::PruneMask::Entry e;
      e.name = m.at("name").get<std::string>();
      e.shape = m.at("shape").get<Shape>();
      const auto bits = m.at("bits").get<std::size_t>();
      if (bits != shape_size(e.shape) || size != (bits + 7) / 8) {
        throw fail("mask '" + e.name + "' size does not match its shape");
      }
      e.keep.resize(bits);
      std::size_t popcount = 0;
      for (std::size_t i = 0; i < bits; ++i) {
        const auto byte = static_cast<unsigned char>(payload[offset + i / 8]);
        e.keep[i] = static_cast<std::uint8_t>((byte >> (i % 8)) & 1u);
        popcount += e.keep[i];
      }
      if (popcount != m.at("popcount").get<std::size_t>()) {
        throw fail("mask '" + e.name + "' popcount mismatch");
      }
      mask.entries().push_back(std::move(e));
    }
    mask.set_keep_fraction(manifest.at("keep_fraction").get<double>());
    mask.set_rounds(manifest.at("prune_rounds").get<std::size_t>());
    ckpt.mask = std::move(mask);
  } catch (const json::exception& e) {
    throw fail(std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const FormatError*>(&e)) throw;
    throw fail(e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::atomic_write(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("checkpoint '" + path.string() + "' does not exist");
  }
  return deserialize_checkpoint(io::read_file(path), path.string());
}

}  // namespace sddlab
