#include "hetermpc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace hetermpc {

namespace {

void check_inputs(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument(std::to_string(candidates.size()) + " candidates for " +
                                std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) throw std::invalid_argument("no candidates to score");
}

std::map<TokenSeq, std::size_t> ngram_counts(const TokenSeq& tokens, std::size_t n) {
  std::map<TokenSeq, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references, int max_n) {
  check_inputs(candidates, references);
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("bleu: max_n must be in 1..4");
  std::vector<double> matched(static_cast<std::size_t>(max_n), 0), total(static_cast<std::size_t>(max_n), 0);
  double cand_len = 0, ref_len = 0;
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    cand_len += static_cast<double>(candidates[p].size());
    ref_len += static_cast<double>(references[p].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = ngram_counts(candidates[p], static_cast<std::size_t>(n));
      const auto ref = ngram_counts(references[p], static_cast<std::size_t>(n));
      for (const auto& [gram, count] : cand) {
        const auto it = ref.find(gram);
        matched[static_cast<std::size_t>(n - 1)] += static_cast<double>(std::min(count, it == ref.end() ? 0 : it->second));
        total[static_cast<std::size_t>(n - 1)] += static_cast<double>(count);
      }
    }
  }
  double log_sum = 0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[static_cast<std::size_t>(n)] == 0) return 0.0;
    log_sum += std::log(matched[static_cast<std::size_t>(n)] / total[static_cast<std::size_t>(n)]);
  }
  const double brevity = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return brevity * std::exp(log_sum / max_n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references, double beta) {
  check_inputs(candidates, references);
  double sum = 0;
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    const auto lcs = static_cast<double>(lcs_length(candidates[p], references[p]));
    if (lcs == 0) continue;
    const double precision = lcs / static_cast<double>(candidates[p].size());
    const double recall = lcs / static_cast<double>(references[p].size());
    sum += (1 + beta * beta) * precision * recall / (recall + beta * beta * precision);
  }
  return sum / static_cast<double>(candidates.size());
}

nlohmann::json EvalReport::to_json() const {
  return {{"bleu1", bleu1}, {"bleu2", bleu2},     {"bleu3", bleu3},
          {"bleu4", bleu4}, {"rougeL", rouge_l}, {"n_samples", n_samples}};
}

std::string EvalReport::table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-8s %8s\n%-8s %8.2f\n%-8s %8.2f\n%-8s %8.2f\n%-8s %8.2f\n%-8s %8.2f\n%-8s %8zu\n", "metric",
                "score", "BLEU-1", 100 * bleu1, "BLEU-2", 100 * bleu2, "BLEU-3", 100 * bleu3, "BLEU-4",
                100 * bleu4, "ROUGE-L", 100 * rouge_l, "samples", n_samples);
  return buf;
}

EvalReport evaluate(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
  EvalReport r;
  r.bleu1 = bleu(candidates, references, 1);
  r.bleu2 = bleu(candidates, references, 2);
  r.bleu3 = bleu(candidates, references, 3);
  r.bleu4 = bleu(candidates, references, 4);
  r.rouge_l = rouge_l(candidates, references);
  r.n_samples = candidates.size();
  return r;
}

}  // namespace hetermpc
