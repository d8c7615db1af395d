#pragma once

// Dynamic-programming based sampling of edit scripts.
//
// For a current question y (m+1 tokens, sentinel at 0) and a target y*
// (n+1 tokens) the lattice has one row per token of y and one column per
// token of y*. Cell (i, j) tracks the expected probability of the edits for
// y[0..i] that turn it into y*[0..j]. The origin holds 1; an edit on token i
// moves K/S to (i-1, j-1), D to (i-1, j) and I to (i, j-1). Within the
// interior, K and I are allowed when y[i] == y*[j] and S and D otherwise;
// row 0 allows only I and column 0 only D.
//
// Values are stored as logarithms; distributions are normalized in log space.

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "rise/common.hpp"
#include "rise/editcore.hpp"

namespace rise {

using EditProbs = std::array<double, kNumEditOps>;
/// One 4-way distribution per question token (K, D, I, S order).
using EditDistribution = std::vector<EditProbs>;
/// One distribution over the phrase vocabulary per phrase slot.
using PhraseDistribution = std::vector<std::vector<double>>;

class ExpectationMatrix {
public:
  ExpectationMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double log_value(std::size_t i, std::size_t j) const { return log_[i * cols_ + j]; }
  double value(std::size_t i, std::size_t j) const;
  /// Bitmask over EditOp values of the edits permitted at (i, j).
  unsigned allowed(std::size_t i, std::size_t j) const { return allowed_[i * cols_ + j]; }
  bool is_allowed(std::size_t i, std::size_t j, EditOp op) const {
    return (allowed(i, j) >> static_cast<unsigned>(op)) & 1u;
  }

private:
  friend ExpectationMatrix compute_matrix(const TokenSeq&, const TokenSeq&,
                                          const EditDistribution&);
  std::size_t rows_, cols_;
  std::vector<double> log_;
  std::vector<unsigned> allowed_;
};

struct CellDistribution {
  EditProbs p{};
};

unsigned allowed_edits(const TokenSeq& y_t, const TokenSeq& y_star, std::size_t i,
                       std::size_t j);

/// Throws Numeric when no positive-probability path reaches the terminal cell.
ExpectationMatrix compute_matrix(const TokenSeq& y_t, const TokenSeq& y_star,
                                 const EditDistribution& edit_probs);

/// Throws Numeric when every allowed weight at (i, j) is zero.
CellDistribution cell_distribution(const ExpectationMatrix& m, std::size_t i, std::size_t j,
                                   const EditDistribution& edit_probs);

/// One raw lattice move, in left-to-right (forward) order.
struct LatticeStep {
  EditOp op;
  std::size_t i;  // source row (token position) the edit belongs to
  std::size_t j;  // target column reached by the move
};

/// Sample a raw path by backtracking from (m, n) to (0, 0).
std::vector<LatticeStep> backtrack_path(const ExpectationMatrix& m,
                                        const EditDistribution& edit_probs, Rng& rng);

/// Relabel a raw path into an EditScript: every maximal run of non-K moves
/// that consumes source and target tokens becomes one SUBSTITUTE run whose
/// phrase is the consumed target tokens; target-only runs become one INSERT;
/// source-only runs stay DELETE.
EditScript canonicalize_path(const std::vector<LatticeStep>& path, const TokenSeq& y_t,
                             const TokenSeq& y_star);

EditScript backtrack_sample(const ExpectationMatrix& m, const TokenSeq& y_t,
                            const TokenSeq& y_star, const EditDistribution& edit_probs,
                            Rng& rng);

/// Phrase choice for an epsilon-greedy script. Ids index the phrase
/// vocabulary; the OOV sentinel (id 0) is never chosen.
struct GreedySample {
  EditScript script;
  std::vector<std::int32_t> phrase_ids;
};

/// Independent per-token exploration: with probability 1 - epsilon take the
/// argmax edit, otherwise a uniform edit. The sentinel only chooses between
/// K and I. Phrases for the resulting slots are drawn the same way from
/// `phrase_probs_for(edits)`. When the vocabulary has no real phrase, I and
/// S edits are demoted to K.
GreedySample epsilon_greedy_sample(
    const EditDistribution& edit_probs,
    const std::function<PhraseDistribution(const std::vector<EditOp>&)>& phrase_probs_for,
    const std::vector<TokenSeq>& phrase_table, double epsilon, Rng& rng);

}  // namespace rise
