#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rise/corpus.hpp"

namespace rise {

/// Per-token edit. The numeric order is the column order of every
/// probability vector in the library.
enum class EditOp : std::uint8_t { Keep = 0, Delete = 1, Insert = 2, Substitute = 3 };

inline constexpr std::size_t kNumEditOps = 4;
inline constexpr std::array<EditOp, kNumEditOps> kAllEditOps = {
    EditOp::Keep, EditOp::Delete, EditOp::Insert, EditOp::Substitute};

char edit_code(EditOp op);
EditOp edit_from_code(char code);

/// One combinatorial action: an edit per source token (sentinel included)
/// plus one phrase per INSERT and per maximal SUBSTITUTE run, left to right.
struct EditScript {
  std::vector<EditOp> edits;
  std::vector<TokenSeq> phrases;

  friend bool operator==(const EditScript&, const EditScript&) = default;
};

struct EditState {
  TokenSeq question;
  std::vector<TokenSeq> context;
  std::size_t iteration = 0;
};

/// Source positions covered by one phrase slot. For INSERT at j the span is
/// [j, j+2) clipped to the sequence; for a SUBSTITUTE run j..k it is [j, k+1).
struct Span {
  enum class Kind { Insert, Substitute };
  Kind kind;
  std::size_t begin;
  std::size_t end;
  /// The edit position that owns the phrase (j in both cases).
  std::size_t anchor;

  friend bool operator==(const Span&, const Span&) = default;
};

std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b);

/// One step of a minimal-cost alignment, in left-to-right order.
struct AlignStep {
  enum class Kind { Match, Substitute, Delete, Insert };
  Kind kind;
  std::size_t source_index;  // valid for Match/Substitute/Delete
  std::size_t target_index;  // valid for Match/Substitute/Insert
};

/// Minimal-cost alignment with deterministic tie-breaking
/// (match/substitute, then delete, then insert while backtracking).
std::vector<AlignStep> align(const TokenSeq& source, const TokenSeq& target);

std::size_t count_non_keep(const std::vector<EditOp>& edits);
std::size_t count_phrase_slots(const std::vector<EditOp>& edits);
std::vector<Span> extract_spans(const TokenSeq& question, const std::vector<EditOp>& edits);
TokenSeq span_tokens(const TokenSeq& question, const Span& span);

/// Throws when the script cannot be applied to `source`: length mismatch,
/// sentinel not KEEP/INSERT, phrase count mismatch or an empty phrase.
void validate_script(const TokenSeq& source, const EditScript& script);

TokenSeq apply_script(const TokenSeq& source, const EditScript& script);
inline TokenSeq apply_script(const EditState& state, const EditScript& script) {
  return apply_script(state.question, script);
}

EditScript all_keep(std::size_t length);

nlohmann::json script_to_json(const EditScript& script);
EditScript script_from_json(const nlohmann::json& j);

}  // namespace rise
