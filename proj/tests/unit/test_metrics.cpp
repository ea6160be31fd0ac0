#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hetermpc/metrics.hpp"
#include "hetermpc/random.hpp"

using namespace hetermpc;

namespace {

TokenSeq words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

// Exhaustive LCS over subsequences of the shorter input; fine for length ≤ 10.
std::size_t lcs_brute(const TokenSeq& a, const TokenSeq& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << s.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      while (j < t.size() && t[j] != s[i]) ++j;
      if (j == t.size()) ok = false;
      else { ++j; ++len; }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

TokenSeq random_seq(Rng& rng, std::size_t max_len) {
  static const char* pool[] = {"a", "b", "c", "d", "e"};
  TokenSeq s(1 + rng.below(max_len));
  for (auto& w : s) w = pool[rng.below(5)];
  return s;
}

}  // namespace

TEST(Bleu, UnigramWithBrevityPenalty) {
  const std::vector<TokenSeq> c{words({"the", "cat", "sat"})};
  const std::vector<TokenSeq> r{words({"the", "cat", "sat", "down"})};
  EXPECT_NEAR(bleu(c, r, 1), std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Bleu, IdenticalIsOne) {
  const std::vector<TokenSeq> c{words({"open", "the", "door", "now"}), words({"x", "y", "z", "w", "v"})};
  for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(bleu(c, c, n), 1.0);
}

TEST(Bleu, DisjointIsZero) {
  const std::vector<TokenSeq> c{words({"a", "b", "c"})};
  const std::vector<TokenSeq> r{words({"d", "e", "f"})};
  for (int n = 1; n <= 4; ++n) EXPECT_EQ(bleu(c, r, n), 0.0);
}

TEST(Bleu, ClipsRepeatedWordsAndPoolsCounts) {
  // Candidate "a a a a" vs "a b": clipped unigram matches 1 of 4, no brevity penalty.
  EXPECT_NEAR(bleu({words({"a", "a", "a", "a"})}, {words({"a", "b"})}, 1), 0.25, 1e-12);
  // Pooled: matches 2+1 over 2+2 candidate unigrams; lengths 4 vs 4.
  const std::vector<TokenSeq> c{words({"p", "q"}), words({"r", "s"})};
  const std::vector<TokenSeq> r{words({"p", "q"}), words({"r", "t"})};
  EXPECT_NEAR(bleu(c, r, 1), 0.75, 1e-12);
  // Bigrams: 1 of 1 and 0 of 1 → 0.5; BLEU-2 = sqrt(0.75 · 0.5).
  EXPECT_NEAR(bleu(c, r, 2), std::sqrt(0.75 * 0.5), 1e-12);
}

TEST(Bleu, InvariantToPairOrder) {
  Rng rng(5);
  std::vector<TokenSeq> c, r;
  for (int i = 0; i < 12; ++i) {
    c.push_back(random_seq(rng, 8));
    r.push_back(random_seq(rng, 8));
  }
  const double before = bleu(c, r, 2);
  std::vector<std::size_t> perm(c.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<TokenSeq> pc, pr;
  for (auto i : perm) {
    pc.push_back(c[i]);
    pr.push_back(r[i]);
  }
  EXPECT_NEAR(bleu(pc, pr, 2), before, 1e-12);
}

TEST(Bleu, RejectsBadInput) {
  EXPECT_THROW(bleu({}, {}, 1), std::invalid_argument);
  EXPECT_THROW(bleu({words({"a"})}, {}, 1), std::invalid_argument);
  EXPECT_THROW(bleu({words({"a"})}, {words({"a"})}, 5), std::invalid_argument);
  EXPECT_THROW(bleu({words({"a"})}, {words({"a"})}, 0), std::invalid_argument);
}

TEST(RougeL, HandComputed) {
  // LCS 2 of 3: P = R = 2/3, so F = 2/3 for any β.
  EXPECT_NEAR(rouge_l({words({"a", "b", "c"})}, {words({"a", "c", "d"})}), 2.0 / 3.0, 1e-12);
  // P = 1, R = 1/2: F = (1 + β²)PR / (R + β²P).
  const double b2 = 1.44;
  EXPECT_NEAR(rouge_l({words({"a"})}, {words({"a", "b"})}), (1 + b2) * 0.5 / (0.5 + b2), 1e-12);
}

TEST(RougeL, IdentityAndDisjoint) {
  EXPECT_DOUBLE_EQ(rouge_l({words({"a", "b"})}, {words({"a", "b"})}), 1.0);
  EXPECT_EQ(rouge_l({words({"a", "b"})}, {words({"c"})}), 0.0);
}

TEST(RougeL, MeanOverPairs) {
  const std::vector<TokenSeq> c{words({"a", "b"}), words({"x"})};
  const std::vector<TokenSeq> r{words({"a", "b"}), words({"y"})};
  EXPECT_DOUBLE_EQ(rouge_l(c, r), 0.5);
}

TEST(Lcs, MatchesExhaustiveSearch) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_seq(rng, 9);
    const auto b = random_seq(rng, 9);
    ASSERT_EQ(lcs_length(a, b), lcs_brute(a, b));
    ASSERT_EQ(lcs_length(a, b), lcs_length(b, a));
  }
  EXPECT_EQ(lcs_length({}, words({"a"})), 0u);
}

TEST(Evaluate, ReportFields) {
  const std::vector<TokenSeq> c{words({"a", "b", "c", "d"})};
  const auto report = evaluate(c, c);
  EXPECT_DOUBLE_EQ(report.bleu4, 1.0);
  EXPECT_DOUBLE_EQ(report.rouge_l, 1.0);
  EXPECT_EQ(report.n_samples, 1u);
  const auto j = report.to_json();
  EXPECT_DOUBLE_EQ(j.at("bleu1").get<double>(), 1.0);
  EXPECT_EQ(j.at("n_samples").get<std::size_t>(), 1u);
  EXPECT_NE(report.table().find("100.00"), std::string::npos);
}
