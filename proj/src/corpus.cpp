#include "hetermpc/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

namespace hetermpc {

namespace {
const std::array<std::string, special::kCount> kReserved{"[PAD]", "[CLS]", "[SEP]", "[MASK]",
                                                         "[BOS]", "[EOS]", "[UNK]"};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& t : kReserved) add(t);
}

void Vocabulary::add(const std::string& token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<ConversationRecord>& records, std::size_t min_count) {
  if (records.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  auto count_text = [&counts](const std::string& text) {
    for (auto& t : tokenize(text)) ++counts[t];
  };
  for (const auto& r : records) {
    for (const auto& u : r.utterances) count_text(u.text);
    count_text(r.response.text);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (n >= min_count && std::find(kReserved.begin(), kReserved.end(), token) == kReserved.end()) {
      ranked.emplace_back(token, n);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [token, _] : ranked) vocab.add(token);
  return vocab;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  std::vector<std::string> by_id(j.size());
  for (const auto& [token, id] : j.items()) {
    const auto i = id.get<std::size_t>();
    if (i >= by_id.size() || !by_id[i].empty()) {
      throw std::invalid_argument("vocabulary ids must be a permutation of 0..n-1");
    }
    by_id[i] = token;
  }
  for (std::size_t i = 0; i < special::kCount; ++i) {
    if (i >= by_id.size() || by_id[i] != kReserved[i]) {
      throw std::invalid_argument("vocabulary must reserve id " + std::to_string(i) + " for " + kReserved[i]);
    }
  }
  Vocabulary vocab;
  for (std::size_t i = special::kCount; i < by_id.size(); ++i) vocab.add(by_id[i]);
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read vocabulary " + path.string());
  return from_json(nlohmann::json::parse(is));
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = i;
  return j;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write vocabulary " + path.string());
  os << to_json().dump(1) << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? special::kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.find(token) != ids_.end(); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode_words(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::string out;
  for (auto id : ids) {
    if (id == special::kBos || id == special::kEos || id == special::kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

ConversationRecord record_from_json(const nlohmann::json& j) {
  auto turn_from = [](const nlohmann::json& t) {
    Turn turn;
    turn.speaker = t.at("speaker").get<std::string>();
    if (auto it = t.find("addressee"); it != t.end() && !it->is_null()) turn.addressee = it->get<std::string>();
    if (auto it = t.find("reply_to"); it != t.end() && !it->is_null()) {
      const auto v = it->get<long long>();
      if (v < 0) throw std::invalid_argument("reply_to must be non-negative");
      turn.reply_to = static_cast<std::size_t>(v);
    }
    if (auto it = t.find("text"); it != t.end() && !it->is_null()) turn.text = it->get<std::string>();
    return turn;
  };
  ConversationRecord record;
  for (const auto& u : j.at("utterances")) record.utterances.push_back(turn_from(u));
  record.response = turn_from(j.at("response"));
  return record;
}

nlohmann::json record_to_json(const ConversationRecord& record) {
  auto turn_to = [](const Turn& t) {
    nlohmann::json j;
    j["speaker"] = t.speaker;
    j["addressee"] = t.addressee ? nlohmann::json(*t.addressee) : nlohmann::json(nullptr);
    j["reply_to"] = t.reply_to ? nlohmann::json(*t.reply_to) : nlohmann::json(nullptr);
    j["text"] = t.text;
    return j;
  };
  nlohmann::json utterances = nlohmann::json::array();
  for (const auto& u : record.utterances) utterances.push_back(turn_to(u));
  return {{"utterances", utterances}, {"response", turn_to(record.response)}};
}

std::vector<ConversationRecord> parse_corpus(std::string_view text) {
  std::vector<ConversationRecord> records;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    ConversationRecord record;
    try {
      record = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    try {
      validate_record(record);
    } catch (const StructureError& e) {
      throw StructureError("line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<ConversationRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read corpus " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_corpus(buffer.str());
}

std::string serialize_corpus(const std::vector<ConversationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<TokenId> encode_utterance(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("encode_utterance: max_len must leave room for [CLS] and [SEP]");
  auto words = vocab.encode_words(text);
  if (words.size() > max_len - 2) words.resize(max_len - 2);
  std::vector<TokenId> ids;
  ids.reserve(words.size() + 2);
  ids.push_back(special::kCls);
  ids.insert(ids.end(), words.begin(), words.end());
  ids.push_back(special::kSep);
  return ids;
}

std::vector<TokenId> encode_response_node(std::size_t max_len) {
  if (max_len < 3) throw std::invalid_argument("encode_response_node: max_len must be at least 3");
  return {special::kCls, special::kMask, special::kSep};
}

}  // namespace hetermpc
