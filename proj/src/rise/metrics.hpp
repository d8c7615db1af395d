#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "rise/corpus.hpp"

namespace rise {

/// Sequences passed to the metrics carry payload tokens only (no sentinel).
using Corpus = std::vector<TokenSeq>;

enum class BleuSmoothing {
  None,    // any zero n-gram precision gives 0
  AddOne,  // (matches + 1) / (total + 1) for orders above 1
};
BleuSmoothing smoothing_from_string(const std::string& s);
const char* to_string(BleuSmoothing s);

/// Corpus BLEU over orders 1..n with uniform weights and the brevity
/// penalty exp(1 - r/c) when c < r. Percent.
double bleu_n(const Corpus& candidates, const Corpus& references, int n,
              BleuSmoothing smoothing = BleuSmoothing::None);

/// Mean over pairs of the LCS F-measure with beta = 1.2. Percent.
double rouge_l(const Corpus& candidates, const Corpus& references, unsigned jobs = 1);

struct CiderResult {
  double score = 0.0;          // 0..10
  bool idf_fallback = false;   // fewer than two distinct references: idf fixed at 1
};

/// Plain CIDEr: tf-idf n-gram vectors (n = 1..4, idf from the references),
/// cosine per order, averaged over orders and pairs, times 10.
CiderResult cider(const Corpus& candidates, const Corpus& references, unsigned jobs = 1);

struct MetricsReport {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double rougeL = 0;
  double cider = 0;
  std::size_t n_samples = 0;
  bool cider_idf_fallback = false;
};

MetricsReport evaluate_corpus(const Corpus& candidates, const Corpus& references,
                              BleuSmoothing smoothing = BleuSmoothing::None, unsigned jobs = 1);

nlohmann::json report_to_json(const MetricsReport& r);
/// One line, percentages to one decimal place.
std::string report_to_display(const MetricsReport& r);

/// Length of the longest common subsequence.
std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

}  // namespace rise
