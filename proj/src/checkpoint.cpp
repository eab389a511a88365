#include "liam/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace liam {

namespace {

constexpr char kMagic[8] = {'L', 'I', 'A', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f32(std::string& buf, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

float get_f32(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(u);
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json manifest = {{"stage", ckpt.stage},
                             {"config_hash", ckpt.config_hash},
                             {"step", ckpt.step},
                             {"optimizer", ckpt.optimizer},
                             {"optimizer_steps", ckpt.optimizer_steps}};
  auto entries = nlohmann::json::array();
  std::string payload;
  for (const auto& t : ckpt.tensors) {
    if (numel(t.shape) != t.data.size()) {
      throw CheckpointError("tensor '" + t.name + "' has shape " + shape_str(t.shape) + " but " +
                            std::to_string(t.data.size()) + " values");
    }
    entries.push_back(
        {{"name", t.name}, {"dtype", "f32"}, {"shape", t.shape}, {"offset", payload.size()}});
    for (float f : t.data) put_f32(payload, f);
  }
  manifest["tensors"] = entries;
  const std::string header = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + tmp + "' for writing");
    out.write(kMagic, sizeof kMagic);
    put_u64(out, kVersion);
    put_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    put_u64(out, payload.size());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw CheckpointError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  }
  if (const auto v = get_u64(in); v != kVersion) {
    throw CheckpointError("'" + path + "': unsupported checkpoint version " + std::to_string(v));
  }
  const auto header_len = get_u64(in);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw CheckpointError("'" + path + "': truncated manifest");
  }
  const auto payload_len = get_u64(in);
  std::vector<unsigned char> payload(payload_len);
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload_len))) {
    throw CheckpointError("'" + path + "': truncated payload");
  }

  Checkpoint ckpt;
  try {
    const auto manifest = nlohmann::json::parse(header);
    ckpt.stage = manifest.at("stage").get<std::string>();
    ckpt.config_hash = manifest.at("config_hash").get<std::uint64_t>();
    ckpt.step = manifest.at("step").get<std::uint64_t>();
    ckpt.optimizer = manifest.at("optimizer").get<std::string>();
    ckpt.optimizer_steps = manifest.at("optimizer_steps").get<std::uint64_t>();
    for (const auto& e : manifest.at("tensors")) {
      NamedTensor t;
      t.name = e.at("name").get<std::string>();
      if (e.at("dtype").get<std::string>() != "f32") {
        throw CheckpointError("tensor '" + t.name + "' has unsupported dtype");
      }
      t.shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = numel(t.shape);
      if (offset + 4 * count > payload.size()) {
        throw CheckpointError("tensor '" + t.name + "' extends past the payload");
      }
      t.data.resize(count);
      for (std::size_t i = 0; i < count; ++i) t.data[i] = get_f32(payload.data() + offset + 4 * i);
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + path + "': malformed manifest: " + e.what());
  }
  return ckpt;
}

}  // namespace liam
