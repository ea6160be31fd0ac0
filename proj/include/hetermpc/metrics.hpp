#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace hetermpc {

using TokenSeq = std::vector<std::string>;

/// Corpus-level BLEU-n: clipped n-gram counts pooled over all pairs, uniform
/// geometric mean over orders 1..max_n, brevity penalty, no smoothing.
double bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references, int max_n);

/// Mean over pairs of the LCS F-measure with recall weight beta.
double rouge_l(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references,
               double beta = 1.2);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

struct EvalReport {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double rouge_l = 0;
  std::size_t n_samples = 0;

  nlohmann::json to_json() const;
  /// Scores ×100 in a fixed-width table.
  std::string table() const;
};

EvalReport evaluate(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references);

}  // namespace hetermpc
