#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "hetermpc/model.hpp"
#include "hetermpc/trainer.hpp"

namespace hetermpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one CLI run needs. Stored as a flat `key = value` file; `#`
/// starts a comment. Relative paths in a file resolve against its directory.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path corpus;
  std::filesystem::path valid_corpus;
  std::filesystem::path vocab;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  std::filesystem::path metrics_log;

  /// Applies one `key`/`value` pair; throws ConfigError for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::string serialize() const;

  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace hetermpc
