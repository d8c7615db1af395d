#include "rise/dps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rise {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

constexpr unsigned bit(EditOp op) { return 1u << static_cast<unsigned>(op); }

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double log_sum_exp(const double* xs, std::size_t n) {
  double hi = kNegInf;
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, xs[k]);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(xs[k] - hi);
  return hi + std::log(s);
}

/// Predecessor of (i, j) under `op`; assumes the move is legal.
std::pair<std::size_t, std::size_t> predecessor(std::size_t i, std::size_t j, EditOp op) {
  switch (op) {
    case EditOp::Keep:
    case EditOp::Substitute: return {i - 1, j - 1};
    case EditOp::Delete: return {i - 1, j};
    case EditOp::Insert: return {i, j - 1};
  }
  return {i, j};
}

/// Log weights log(pi(op)) + log M[pred] for every op (-inf when disallowed).
std::array<double, kNumEditOps> log_weights(const ExpectationMatrix& m, std::size_t i,
                                            std::size_t j, const EditProbs& pi) {
  std::array<double, kNumEditOps> lw;
  lw.fill(kNegInf);
  for (EditOp op : kAllEditOps) {
    if (!m.is_allowed(i, j, op)) continue;
    auto [pi_, pj] = predecessor(i, j, op);
    lw[static_cast<std::size_t>(op)] = safe_log(pi[static_cast<std::size_t>(op)]) + m.log_value(pi_, pj);
  }
  return lw;
}

void check_edit_probs(const TokenSeq& y_t, const EditDistribution& edit_probs) {
  if (edit_probs.size() != y_t.size())
    throw Error(ErrorCode::InvalidArgument,
                "edit distribution has " + std::to_string(edit_probs.size()) + " rows for " +
                    std::to_string(y_t.size()) + " tokens");
}

std::string cell_name(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

ExpectationMatrix::ExpectationMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), log_(rows * cols, kNegInf), allowed_(rows * cols, 0) {}

double ExpectationMatrix::value(std::size_t i, std::size_t j) const {
  return std::exp(log_value(i, j));
}

unsigned allowed_edits(const TokenSeq& y_t, const TokenSeq& y_star, std::size_t i,
                       std::size_t j) {
  if (i == 0 && j == 0) return 0;
  if (i == 0) return bit(EditOp::Insert);
  if (j == 0) return bit(EditOp::Delete);
  return y_t[i] == y_star[j] ? bit(EditOp::Keep) | bit(EditOp::Insert)
                             : bit(EditOp::Substitute) | bit(EditOp::Delete);
}

ExpectationMatrix compute_matrix(const TokenSeq& y_t, const TokenSeq& y_star,
                                 const EditDistribution& edit_probs) {
  if (y_t.empty() || y_star.empty())
    throw Error(ErrorCode::InvalidArgument, "compute_matrix: sequences must hold the sentinel");
  check_edit_probs(y_t, edit_probs);
  ExpectationMatrix m(y_t.size(), y_star.size());
  for (std::size_t i = 0; i < m.rows_; ++i) {
    for (std::size_t j = 0; j < m.cols_; ++j) {
      const std::size_t at = i * m.cols_ + j;
      m.allowed_[at] = allowed_edits(y_t, y_star, i, j);
      if (i == 0 && j == 0) {
        m.log_[at] = 0.0;
        continue;
      }
      const auto lw = log_weights(m, i, j, edit_probs[i]);
      const double log_z = log_sum_exp(lw.data(), lw.size());
      if (log_z == kNegInf) continue;  // unreachable; value stays 0
      // sum_e p(e) w(e) with p(e) = w(e) / Z  ==  sum_e w(e)^2 / Z
      std::array<double, kNumEditOps> twice;
      for (std::size_t k = 0; k < kNumEditOps; ++k) twice[k] = 2.0 * lw[k];
      m.log_[at] = log_sum_exp(twice.data(), twice.size()) - log_z;
    }
  }
  const std::size_t mi = m.rows_ - 1, nj = m.cols_ - 1;
  if (m.log_value(mi, nj) == kNegInf)
    throw Error(ErrorCode::Numeric,
                "zero normalizer at cell " + cell_name(mi, nj) +
                    ": the policy gives no edit path with positive probability");
  return m;
}

CellDistribution cell_distribution(const ExpectationMatrix& m, std::size_t i, std::size_t j,
                                   const EditDistribution& edit_probs) {
  if (i >= m.rows() || j >= m.cols())
    throw Error(ErrorCode::InvalidArgument, "cell " + cell_name(i, j) + " is outside the lattice");
  if (i == 0 && j == 0)
    throw Error(ErrorCode::InvalidArgument, "the origin cell has no edit distribution");
  if (edit_probs.size() != m.rows())
    throw Error(ErrorCode::InvalidArgument, "edit distribution does not match the lattice");
  const auto lw = log_weights(m, i, j, edit_probs[i]);
  const double log_z = log_sum_exp(lw.data(), lw.size());
  if (log_z == kNegInf)
    throw Error(ErrorCode::Numeric, "zero normalizer at cell " + cell_name(i, j));
  CellDistribution d;
  for (std::size_t k = 0; k < kNumEditOps; ++k)
    d.p[k] = lw[k] == kNegInf ? 0.0 : std::exp(lw[k] - log_z);
  return d;
}

std::vector<LatticeStep> backtrack_path(const ExpectationMatrix& m,
                                        const EditDistribution& edit_probs, Rng& rng) {
  std::vector<LatticeStep> path;
  std::size_t i = m.rows() - 1, j = m.cols() - 1;
  path.reserve(i + j);
  while (i > 0 || j > 0) {
    const auto dist = cell_distribution(m, i, j, edit_probs);
    const auto op = static_cast<EditOp>(rng.categorical(dist.p.data(), dist.p.size()));
    path.push_back({op, i, j});
    std::tie(i, j) = predecessor(i, j, op);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

EditScript canonicalize_path(const std::vector<LatticeStep>& path, const TokenSeq& y_t,
                             const TokenSeq& y_star) {
  EditScript script = all_keep(y_t.size());
  std::vector<const LatticeStep*> run;
  auto flush = [&] {
    if (run.empty()) return;
    std::vector<std::size_t> sources;
    TokenSeq phrase;
    for (const LatticeStep* s : run) {
      if (s->op != EditOp::Insert) sources.push_back(s->i);
      if (s->op != EditOp::Delete) phrase.push_back(y_star[s->j]);
    }
    if (sources.empty()) {
      // Target-only run: all inserts hang off the same row.
      script.edits[run.front()->i] = EditOp::Insert;
      script.phrases.push_back(std::move(phrase));
    } else if (phrase.empty()) {
      for (std::size_t src : sources) script.edits[src] = EditOp::Delete;
    } else {
      for (std::size_t src : sources) script.edits[src] = EditOp::Substitute;
      script.phrases.push_back(std::move(phrase));
    }
    run.clear();
  };
  for (const auto& step : path) {
    if (step.op == EditOp::Keep) {
      flush();
      script.edits[step.i] = EditOp::Keep;
    } else {
      run.push_back(&step);
    }
  }
  flush();
  return script;
}

EditScript backtrack_sample(const ExpectationMatrix& m, const TokenSeq& y_t,
                            const TokenSeq& y_star, const EditDistribution& edit_probs,
                            Rng& rng) {
  if (m.rows() != y_t.size() || m.cols() != y_star.size())
    throw Error(ErrorCode::InvalidArgument, "backtrack_sample: matrix does not match the pair");
  return canonicalize_path(backtrack_path(m, edit_probs, rng), y_t, y_star);
}

namespace {

std::size_t argmax(const double* xs, std::size_t begin, std::size_t end) {
  std::size_t best = begin;
  for (std::size_t k = begin + 1; k < end; ++k)
    if (xs[k] > xs[best]) best = k;
  return best;
}

}  // namespace

GreedySample epsilon_greedy_sample(
    const EditDistribution& edit_probs,
    const std::function<PhraseDistribution(const std::vector<EditOp>&)>& phrase_probs_for,
    const std::vector<TokenSeq>& phrase_table, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1]");
  const bool can_phrase = phrase_table.size() > 1;
  GreedySample out;
  auto& edits = out.script.edits;
  edits.resize(edit_probs.size(), EditOp::Keep);
  for (std::size_t k = 0; k < edit_probs.size(); ++k) {
    const auto& p = edit_probs[k];
    EditOp op;
    const bool explore = rng.uniform() < epsilon;
    if (k == 0) {
      // Sentinel: K or I only.
      if (explore) op = rng.below(2) == 0 ? EditOp::Keep : EditOp::Insert;
      else op = p[2] > p[0] ? EditOp::Insert : EditOp::Keep;
    } else {
      op = explore ? kAllEditOps[rng.below(kNumEditOps)]
                   : static_cast<EditOp>(argmax(p.data(), 0, kNumEditOps));
    }
    if (!can_phrase && (op == EditOp::Insert || op == EditOp::Substitute)) op = EditOp::Keep;
    edits[k] = op;
  }
  const std::size_t slots = count_phrase_slots(edits);
  if (slots == 0) return out;
  const PhraseDistribution dist = phrase_probs_for(edits);
  if (dist.size() != slots)
    throw Error(ErrorCode::InvalidArgument, "phrase distribution count does not match the slots");
  for (const auto& row : dist) {
    if (row.size() != phrase_table.size())
      throw Error(ErrorCode::InvalidArgument, "phrase distribution width does not match the vocabulary");
    const bool explore = rng.uniform() < epsilon;
    const std::size_t id = explore ? 1 + rng.below(phrase_table.size() - 1)
                                   : argmax(row.data(), 1, row.size());
    out.phrase_ids.push_back(static_cast<std::int32_t>(id));
    out.script.phrases.push_back(phrase_table[id]);
  }
  return out;
}

}  // namespace rise
