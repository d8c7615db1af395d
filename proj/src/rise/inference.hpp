#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "rise/corpus.hpp"
#include "rise/editcore.hpp"
#include "rise/policy.hpp"

namespace rise {

enum class StopReason { AllKeep, MaxIterations };
const char* to_string(StopReason r);

struct IterationRecord {
  TokenSeq input;
  EditScript script;
  TokenSeq output;
};

struct InferenceTrace {
  std::vector<IterationRecord> iterations;
  StopReason stop = StopReason::AllKeep;
};

struct InferenceResult {
  TokenSeq output;
  InferenceTrace trace;
};

/// Greedy decision for one iteration: argmax edit per token (the sentinel
/// chooses between K and I), argmax real phrase per slot. With no real
/// phrases in the vocabulary, I and S decisions fall back to K.
EditScript greedy_script(const EditingPolicy& policy, const PhraseVocab& phrases,
                         const TokenSeq& question, const std::vector<TokenSeq>& context);

/// Edit `x` until an iteration predicts K everywhere or `max_iterations`
/// iterations have run. An all-K iteration is recorded and counts.
InferenceResult simplify(const TokenSeq& x, const std::vector<TokenSeq>& context,
                         const EditingPolicy& policy, const PhraseVocab& phrases,
                         std::size_t max_iterations = 3);

nlohmann::json trace_to_json(const InferenceTrace& trace);
InferenceTrace trace_from_json(const nlohmann::json& j);

/// True when re-applying every recorded script reproduces every recorded
/// output and consecutive records chain.
bool replay_trace(const InferenceTrace& trace);

}  // namespace rise
