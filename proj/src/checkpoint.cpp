#include "hetermpc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace hetermpc {

namespace {

constexpr std::array<char, 8> kMagic{'H', 'M', 'P', 'C', 'C', 'K', 'P', 'T'};

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const nlohmann::json& meta) {
  nlohmann::json tensors = nlohmann::json::object();
  std::string blob;
  blob.reserve(params.total_elements() * 4);
  for (const auto& e : params.entries()) {
    tensors[e.name] = {{"offset", blob.size()}, {"shape", e.tensor.shape()}};
    for (float v : e.tensor.data()) put_f32(blob, v);
  }
  const nlohmann::json header = {{"format", "hetermpc-checkpoint"},
                                 {"version", 1},
                                 {"dtype", "float32"},
                                 {"meta", meta},
                                 {"tensors", tensors}};
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write checkpoint " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!os) throw CheckpointError("failed while writing checkpoint " + path.string());
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet<float>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  const std::uint64_t header_len = get_u64(raw + 8);
  if (16 + header_len > bytes.size()) throw CheckpointError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }
  if (header.value("dtype", "") != "float32") throw CheckpointError(path.string() + ": unsupported dtype");
  const std::size_t blob_start = 16 + header_len;
  const std::size_t blob_len = bytes.size() - blob_start;
  const auto& tensors = header.at("tensors");

  std::set<std::string> expected;
  for (const auto& e : params.entries()) expected.insert(e.name);
  for (const auto& [name, _] : tensors.items()) {
    if (!expected.count(name)) throw CheckpointError("checkpoint tensor '" + name + "' is not part of the model");
  }

  for (const auto& e : params.entries()) {
    if (!tensors.contains(e.name)) throw CheckpointError("checkpoint is missing tensor '" + e.name + "'");
    const auto& info = tensors.at(e.name);
    const auto shape = info.at("shape").get<Shape>();
    if (shape != e.tensor.shape()) {
      throw CheckpointError("tensor '" + e.name + "' has shape " + shape_str(shape) +
                            " in checkpoint but the model expects " + shape_str(e.tensor.shape()));
    }
    const auto offset = info.at("offset").get<std::size_t>();
    const std::size_t n = e.tensor.numel();
    if (offset + 4 * n > blob_len) throw CheckpointError("tensor '" + e.name + "' runs past end of file");
    auto tensor = e.tensor;
    auto dst = tensor.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] = get_f32(raw + blob_start + offset + 4 * i);
  }
  return header.value("meta", nlohmann::json::object());
}

}  // namespace hetermpc
