#include "rise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "rise/common.hpp"

namespace rise {

namespace {

using NgramCounts = std::map<TokenSeq, std::size_t>;

void check_aligned(const Corpus& candidates, const Corpus& references) {
  if (candidates.size() != references.size())
    throw Error(ErrorCode::InvalidArgument,
                "metrics need aligned lists: " + std::to_string(candidates.size()) +
                    " candidates vs " + std::to_string(references.size()) + " references");
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "metrics need a non-empty corpus");
}

NgramCounts ngrams(const TokenSeq& s, std::size_t n) {
  NgramCounts out;
  if (s.size() < n) return out;
  for (std::size_t k = 0; k + n <= s.size(); ++k)
    ++out[TokenSeq(s.begin() + static_cast<std::ptrdiff_t>(k),
                   s.begin() + static_cast<std::ptrdiff_t>(k + n))];
  return out;
}

/// Order-independent sum: identical multisets give bit-identical totals.
double stable_sum(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return std::accumulate(xs.begin(), xs.end(), 0.0);
}

}  // namespace

BleuSmoothing smoothing_from_string(const std::string& s) {
  if (s == "none") return BleuSmoothing::None;
  if (s == "add_one") return BleuSmoothing::AddOne;
  throw Error(ErrorCode::Config, "unknown BLEU smoothing '" + s + "' (none | add_one)");
}

const char* to_string(BleuSmoothing s) { return s == BleuSmoothing::None ? "none" : "add_one"; }

double bleu_n(const Corpus& candidates, const Corpus& references, int n,
              BleuSmoothing smoothing) {
  check_aligned(candidates, references);
  if (n < 1 || n > 4) throw Error(ErrorCode::InvalidArgument, "BLEU order must be 1..4");
  std::vector<std::size_t> matches(static_cast<std::size_t>(n), 0), totals(static_cast<std::size_t>(n), 0);
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    cand_len += candidates[k].size();
    ref_len += references[k].size();
    for (std::size_t order = 1; order <= static_cast<std::size_t>(n); ++order) {
      const auto hyp = ngrams(candidates[k], order);
      const auto ref = ngrams(references[k], order);
      for (const auto& [g, c] : hyp) {
        totals[order - 1] += c;
        auto it = ref.find(g);
        if (it != ref.end()) matches[order - 1] += std::min(c, it->second);
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t o = 0; o < static_cast<std::size_t>(n); ++o) {
    double m = static_cast<double>(matches[o]);
    double t = static_cast<double>(totals[o]);
    if (smoothing == BleuSmoothing::AddOne && o > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(cand_len), r = static_cast<double>(ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(n));
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Corpus& candidates, const Corpus& references, unsigned jobs) {
  check_aligned(candidates, references);
  constexpr double beta = 1.2;
  std::vector<double> scores(candidates.size(), 0.0);
  parallel_for(candidates.size(), jobs, [&](std::size_t k) {
    const auto& c = candidates[k];
    const auto& r = references[k];
    if (c.empty() || r.empty()) return;
    const double lcs = static_cast<double>(lcs_length(c, r));
    if (lcs == 0.0) return;
    const double p = lcs / static_cast<double>(c.size());
    const double rec = lcs / static_cast<double>(r.size());
    scores[k] = ((1.0 + beta * beta) * rec * p) / (rec + beta * beta * p);
  });
  return 100.0 * stable_sum(std::move(scores)) / static_cast<double>(candidates.size());
}

CiderResult cider(const Corpus& candidates, const Corpus& references, unsigned jobs) {
  check_aligned(candidates, references);
  constexpr std::size_t kOrders = 4;
  const std::size_t n_docs = references.size();

  std::map<TokenSeq, std::size_t> doc_freq;
  for (const auto& ref : references)
    for (std::size_t order = 1; order <= kOrders; ++order)
      for (const auto& [g, c] : ngrams(ref, order)) ++doc_freq[g];

  CiderResult result;
  // With fewer than two distinct references every idf is zero; fall back to
  // plain term frequencies and flag it.
  result.idf_fallback = std::set<TokenSeq>(references.begin(), references.end()).size() < 2;
  const double log_n = std::log(static_cast<double>(n_docs));

  struct Vec {
    std::array<std::map<TokenSeq, double>, kOrders> weights;
    std::array<double, kOrders> norm{};
  };
  auto vectorize = [&](const TokenSeq& s) {
    Vec v;
    for (std::size_t order = 1; order <= kOrders; ++order) {
      for (const auto& [g, tf] : ngrams(s, order)) {
        double idf = 1.0;
        if (!result.idf_fallback) {
          auto it = doc_freq.find(g);
          const double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
          idf = log_n - std::log(std::max(1.0, df));
        }
        const double w = static_cast<double>(tf) * idf;
        v.weights[order - 1][g] = w;
        v.norm[order - 1] += w * w;
      }
      v.norm[order - 1] = std::sqrt(v.norm[order - 1]);
    }
    return v;
  };

  std::vector<double> scores(candidates.size(), 0.0);
  parallel_for(candidates.size(), jobs, [&](std::size_t k) {
    const Vec hyp = vectorize(candidates[k]);
    const Vec ref = vectorize(references[k]);
    double total = 0.0;
    for (std::size_t o = 0; o < kOrders; ++o) {
      if (hyp.norm[o] == 0.0 || ref.norm[o] == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, w] : hyp.weights[o]) {
        auto it = ref.weights[o].find(g);
        if (it != ref.weights[o].end()) dot += w * it->second;
      }
      total += dot / (hyp.norm[o] * ref.norm[o]);
    }
    scores[k] = 10.0 * total / static_cast<double>(kOrders);
  });
  result.score = stable_sum(std::move(scores)) / static_cast<double>(candidates.size());
  return result;
}

MetricsReport evaluate_corpus(const Corpus& candidates, const Corpus& references,
                              BleuSmoothing smoothing, unsigned jobs) {
  check_aligned(candidates, references);
  MetricsReport r;
  r.bleu1 = bleu_n(candidates, references, 1, smoothing);
  r.bleu2 = bleu_n(candidates, references, 2, smoothing);
  r.bleu3 = bleu_n(candidates, references, 3, smoothing);
  r.bleu4 = bleu_n(candidates, references, 4, smoothing);
  r.rougeL = rouge_l(candidates, references, jobs);
  const auto c = cider(candidates, references, jobs);
  r.cider = c.score;
  r.cider_idf_fallback = c.idf_fallback;
  r.n_samples = candidates.size();
  return r;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  return {{"bleu1", r.bleu1}, {"bleu2", r.bleu2}, {"bleu3", r.bleu3},
          {"bleu4", r.bleu4}, {"rougeL", r.rougeL}, {"cider", r.cider},
          {"n_samples", r.n_samples}, {"cider_idf_fallback", r.cider_idf_fallback}};
}

std::string report_to_display(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "BLEU-1 %.1f  BLEU-2 %.1f  BLEU-3 %.1f  BLEU-4 %.1f  ROUGE-L %.1f  CIDEr %.3f  (n=%zu)",
                r.bleu1, r.bleu2, r.bleu3, r.bleu4, r.rougeL, r.cider, r.n_samples);
  return buf;
}

}  // namespace rise
