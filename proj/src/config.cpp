#include "hetermpc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hetermpc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_size(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(RunConfig)> get;
};

template <typename Member>
Field size_field(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_size(k, v); },
          [member](RunConfig c) { return std::to_string(member(c)); }};
}

template <typename Member>
Field double_field(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); },
          [member](RunConfig c) { return format_double(member(c)); }};
}

template <typename Member>
Field bool_field(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_bool(k, v); },
          [member](RunConfig c) { return std::string(member(c) ? "true" : "false"); }};
}

template <typename Member>
Field path_field(Member member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; },
          [member](RunConfig c) { return member(c).string(); }};
}

Field seed_field() {
  return {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = parse_size(k, v); },
          [](RunConfig c) { return std::to_string(c.train.seed); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table{
      {"d", size_field([](RunConfig& c) -> std::size_t& { return c.model.encoder.d; })},
      {"heads", size_field([](RunConfig& c) -> std::size_t& { return c.model.encoder.heads; })},
      {"init_layers", size_field([](RunConfig& c) -> std::size_t& { return c.model.encoder.init_layers; })},
      {"graph_iterations", size_field([](RunConfig& c) -> std::size_t& { return c.model.encoder.graph_iterations; })},
      {"decoder_layers", size_field([](RunConfig& c) -> std::size_t& { return c.model.decoder.layers; })},
      {"max_gen_len", size_field([](RunConfig& c) -> std::size_t& { return c.model.decoder.max_gen_len; })},
      {"max_utterance_length",
       size_field([](RunConfig& c) -> std::size_t& { return c.model.encoder.max_utterance_length; })},
      {"share_iteration_params",
       bool_field([](RunConfig& c) -> bool& { return c.model.encoder.share_iteration_params; })},
      {"node_types", bool_field([](RunConfig& c) -> bool& { return c.model.encoder.node_types; })},
      {"edge_types", bool_field([](RunConfig& c) -> bool& { return c.model.encoder.edge_types; })},
      {"interlocutor_nodes", bool_field([](RunConfig& c) -> bool& { return c.model.encoder.interlocutor_nodes; })},
      {"cls_only_memory", bool_field([](RunConfig& c) -> bool& { return c.model.decoder.cls_only_memory; })},
      {"general_addressee", bool_field([](RunConfig& c) -> bool& { return c.model.general_addressee; })},
      {"lr", double_field([](RunConfig& c) -> double& { return c.train.lr; })},
      {"clip_norm", double_field([](RunConfig& c) -> double& { return c.train.clip_norm; })},
      {"batch_size", size_field([](RunConfig& c) -> std::size_t& { return c.train.batch_size; })},
      {"grad_accum_steps", size_field([](RunConfig& c) -> std::size_t& { return c.train.grad_accum_steps; })},
      {"max_epochs", size_field([](RunConfig& c) -> std::size_t& { return c.train.max_epochs; })},
      {"validate_every", size_field([](RunConfig& c) -> std::size_t& { return c.train.validate_every; })},
      {"shuffle", bool_field([](RunConfig& c) -> bool& { return c.train.shuffle; })},
      {"seed", seed_field()},
      {"corpus", path_field([](RunConfig& c) -> std::filesystem::path& { return c.corpus; })},
      {"valid_corpus", path_field([](RunConfig& c) -> std::filesystem::path& { return c.valid_corpus; })},
      {"vocab", path_field([](RunConfig& c) -> std::filesystem::path& { return c.vocab; })},
      {"checkpoint", path_field([](RunConfig& c) -> std::filesystem::path& { return c.checkpoint; })},
      {"out", path_field([](RunConfig& c) -> std::filesystem::path& { return c.out; })},
      {"metrics_log", path_field([](RunConfig& c) -> std::filesystem::path& { return c.metrics_log; })},
  };
  return table;
}

bool is_path_key(const std::string& key) {
  return key == "corpus" || key == "valid_corpus" || key == "vocab" || key == "checkpoint" || key == "out" ||
         key == "metrics_log";
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
  if (key == "d") model.decoder.d = model.encoder.d;
  if (key == "heads") model.decoder.heads = model.encoder.heads;
}

void RunConfig::validate() const {
  try {
    model.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (is_path_key(key) && !value.empty() && !base_dir.empty() && std::filesystem::path(value).is_relative()) {
      value = (base_dir / value).lexically_normal().string();
    }
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

}  // namespace hetermpc
