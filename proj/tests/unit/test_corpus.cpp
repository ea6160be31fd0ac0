#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hetermpc/corpus.hpp"

using namespace hetermpc;
using namespace hetermpc::testing;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const auto dir = fs::temp_directory_path() / "hetermpc_corpus_tests";
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::trunc) << text;
  return path;
}

const char* kTwoLines =
    R"({"utterances":[{"speaker":"a","addressee":null,"reply_to":null,"text":"Hello there"}],"response":{"speaker":"b","addressee":"a","reply_to":0,"text":"hi"}})"
    "\n"
    R"({"utterances":[{"speaker":"c","addressee":"d","reply_to":null,"text":"ping"},{"speaker":"d","addressee":"c","reply_to":0,"text":"pong"}],"response":{"speaker":"c","addressee":"d","reply_to":1,"text":"ok"}})"
    "\n";

}  // namespace

TEST(LoadCorpus, ReadsOneRecordPerLine) {
  const auto records = load_corpus(write_temp("two.jsonl", kTwoLines));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1].utterances.size(), 2u);
  EXPECT_EQ(records[1].response.reply_to, 1u);
}

TEST(LoadCorpus, NullAddresseeIsAbsent) {
  const auto records = parse_corpus(kTwoLines);
  EXPECT_FALSE(records[0].utterances[0].addressee.has_value());
  EXPECT_FALSE(records[0].utterances[0].reply_to.has_value());
}

TEST(LoadCorpus, TruncatedLineNamesLineOne) {
  try {
    parse_corpus(R"({"utterances":[{"speaker":"a")");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(LoadCorpus, ForwardReplyIsStructureError) {
  const char* text =
      R"({"utterances":[{"speaker":"a","addressee":null,"reply_to":0,"text":"x"}],"response":{"speaker":"a","addressee":null,"reply_to":0,"text":"y"}})";
  EXPECT_THROW(parse_corpus(text), StructureError);
}

TEST(LoadCorpus, MissingFileThrows) { EXPECT_THROW(load_corpus("/definitely/not/here.jsonl"), std::runtime_error); }

TEST(LoadCorpus, SerializeRoundTrip) {
  Rng rng(21);
  std::vector<ConversationRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(random_record(rng));
  records.push_back(five_turn_record());
  EXPECT_EQ(parse_corpus(serialize_corpus(records)), records);
}

TEST(Vocabulary, MinCountFiltersRareTokens) {
  ConversationRecord r;
  r.utterances = {turn("x", std::nullopt, std::nullopt, "a a b")};
  r.response = turn("y", std::nullopt, std::nullopt, "");
  const auto v = Vocabulary::build({r}, 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("b"), special::kUnk);
}

TEST(Vocabulary, ReservedIdsComeFirst) {
  const auto v = Vocabulary::build({five_turn_record()});
  const std::vector<std::string> names{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[BOS]", "[EOS]", "[UNK]"};
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(v.token(static_cast<TokenId>(i)), names[i]);
  EXPECT_EQ(special::kPad, 0);
  EXPECT_EQ(special::kUnk, 6);
}

TEST(Vocabulary, OrderedByFrequencyThenToken) {
  ConversationRecord r;
  r.utterances = {turn("x", std::nullopt, std::nullopt, "b c c a B")};
  r.response = turn("y", std::nullopt, std::nullopt, "c");
  const auto v = Vocabulary::build({r});
  EXPECT_EQ(v.id("c"), 7);  // 3 occurrences
  EXPECT_EQ(v.id("b"), 8);  // 2, lowercased
  EXPECT_EQ(v.id("a"), 9);
}

TEST(Vocabulary, DoubleBuildIsByteIdentical) {
  const std::vector<ConversationRecord> corpus{five_turn_record(), six_turn_record()};
  const auto a = write_temp("vocab_a.json", "");
  const auto b = write_temp("vocab_b.json", "");
  Vocabulary::build(corpus).save(a);
  Vocabulary::build(corpus).save(b);
  std::ifstream ia(a), ib(b);
  std::stringstream sa, sb;
  sa << ia.rdbuf();
  sb << ib.rdbuf();
  EXPECT_FALSE(sa.str().empty());
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(Vocabulary::load(a), Vocabulary::build(corpus));
}

TEST(Vocabulary, EmptyCorpusThrows) { EXPECT_THROW(Vocabulary::build({}), std::invalid_argument); }

TEST(Vocabulary, RejectsFileWithoutReservedBlock) {
  EXPECT_THROW(Vocabulary::from_json(nlohmann::json{{"hello", 0}}), std::invalid_argument);
}

TEST(EncodeUtterance, EmptyTextIsClsSep) {
  const Vocabulary v;
  EXPECT_EQ(encode_utterance("", v), (std::vector<TokenId>{special::kCls, special::kSep}));
}

TEST(EncodeUtterance, LongTextIsTruncatedToFifty) {
  std::string text;
  for (int i = 0; i < 60; ++i) text += "w" + std::to_string(i) + " ";
  const auto ids = encode_utterance(text, Vocabulary());
  EXPECT_EQ(ids.size(), 50u);
  EXPECT_EQ(ids.front(), special::kCls);
  EXPECT_EQ(ids.back(), special::kSep);
}

TEST(EncodeUtterance, KnownTokensMapToIds) {
  ConversationRecord r;
  r.response = turn("y", std::nullopt, std::nullopt, "hello");
  const auto v = Vocabulary::build({r});
  const auto h = v.id("hello");
  EXPECT_EQ(encode_utterance("hello hello", v), (std::vector<TokenId>{special::kCls, h, h, special::kSep}));
  EXPECT_EQ(encode_utterance("hello stranger", v)[2], special::kUnk);
}

TEST(EncodeUtterance, SequencesAreAlwaysWellFormed) {
  Rng rng(22);
  const auto v = Vocabulary::build({five_turn_record(), six_turn_record()});
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const auto n = rng.below(80);
    for (std::uint64_t i = 0; i < n; ++i) text += v.token(static_cast<TokenId>(rng.below(v.size()))) + " ";
    const auto ids = encode_utterance(text, v);
    ASSERT_LE(ids.size(), 50u);
    EXPECT_EQ(ids.front(), special::kCls);
    EXPECT_EQ(ids.back(), special::kSep);
    EXPECT_EQ(std::count(ids.begin(), ids.end(), special::kSep), 1);
  }
}

TEST(EncodeUtterance, DecodeThenReencodeIsStable) {
  const auto v = Vocabulary::build({six_turn_record()});
  for (const auto& u : six_turn_record().utterances) {
    const auto ids = encode_utterance(u.text, v);
    const std::vector<TokenId> words(ids.begin() + 1, ids.end() - 1);
    EXPECT_EQ(encode_utterance(v.decode(words), v), ids);
  }
}

TEST(EncodeResponseNode, FixedPlaceholder) {
  const std::vector<TokenId> expected{special::kCls, special::kMask, special::kSep};
  EXPECT_EQ(encode_response_node(), expected);
  EXPECT_EQ(encode_response_node(), encode_response_node());
  EXPECT_EQ(encode_response_node(50).size(), 3u);
}

TEST(Tokenize, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(tokenize("  Hello\tWORLD \n x "), (std::vector<std::string>{"hello", "world", "x"}));
}
