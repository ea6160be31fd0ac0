#pragma once

// Checkpoint container, little-endian throughout:
//
//   offset 0   8 bytes   magic "HMPCCKPT"
//   offset 8   8 bytes   uint64 header length H
//   offset 16  H bytes   UTF-8 JSON header
//   offset 16+H          blob of IEEE-754 float32 values
//
// Header: {"format":"hetermpc-checkpoint","version":1,"dtype":"float32",
//          "meta":{...},"tensors":{"<name>":{"offset":<byte offset into blob>,
//          "shape":[...]}}}
// Tensors are stored contiguously in registration order.

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "hetermpc/parameters.hpp"

namespace hetermpc {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const nlohmann::json& meta = nlohmann::json::object());

/// Loads values into an already-shaped parameter set. Every tensor must be
/// present with an identical shape and no extra tensors may appear; the
/// error names the offending tensor. Returns the header's "meta" object.
nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet<float>& params);

}  // namespace hetermpc
