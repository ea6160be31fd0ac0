#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hetermpc/graph.hpp"
#include "hetermpc/ops.hpp"

namespace hetermpc {

inline constexpr std::size_t kMaxUtteranceLength = 50;

namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kCls = 1;
inline constexpr TokenId kSep = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kBos = 4;
inline constexpr TokenId kEos = 5;
inline constexpr TokenId kUnk = 6;
inline constexpr std::size_t kCount = 7;
}  // namespace special

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : std::runtime_error(message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  /// Only the seven reserved tokens.
  Vocabulary();

  /// Tokens of every utterance and response with frequency >= min_count,
  /// ids after the reserved block ordered by (frequency desc, token asc).
  static Vocabulary build(const std::vector<ConversationRecord>& records, std::size_t min_count = 1);
  static Vocabulary from_json(const nlohmann::json& j);
  static Vocabulary load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  /// Unknown tokens map to UNK.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode_words(std::string_view text) const;
  /// Space-joined tokens; BOS/EOS/PAD are skipped.
  std::string decode(const std::vector<TokenId>& ids) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

/// One conversation per line; blank lines are skipped.
std::vector<ConversationRecord> load_corpus(const std::filesystem::path& path);
std::vector<ConversationRecord> parse_corpus(std::string_view text);
ConversationRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const ConversationRecord& record);
std::string serialize_corpus(const std::vector<ConversationRecord>& records);

/// [CLS] w1 .. wn [SEP], truncating words so the total is at most max_len.
std::vector<TokenId> encode_utterance(std::string_view text, const Vocabulary& vocab,
                                      std::size_t max_len = kMaxUtteranceLength);

/// Placeholder contents for the response node: [CLS] [MASK] [SEP].
std::vector<TokenId> encode_response_node(std::size_t max_len = kMaxUtteranceLength);

}  // namespace hetermpc
