#include "rise/inference.hpp"

#include <algorithm>

namespace rise {

using nlohmann::json;

const char* to_string(StopReason r) {
  return r == StopReason::AllKeep ? "all_keep" : "max_iterations";
}

EditScript greedy_script(const EditingPolicy& policy, const PhraseVocab& phrases,
                         const TokenSeq& question, const std::vector<TokenSeq>& context) {
  const auto probs = policy.edit_probs(question, context);
  const bool can_phrase = phrases.size() > 1;
  EditScript script = all_keep(question.size());
  for (std::size_t i = 0; i < question.size(); ++i) {
    const auto& p = probs[i];
    EditOp op;
    if (i == 0 && question[0] == kBos) {
      op = p[static_cast<std::size_t>(EditOp::Insert)] > p[static_cast<std::size_t>(EditOp::Keep)]
               ? EditOp::Insert
               : EditOp::Keep;
    } else {
      op = static_cast<EditOp>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    if (!can_phrase && (op == EditOp::Insert || op == EditOp::Substitute)) op = EditOp::Keep;
    script.edits[i] = op;
  }
  if (count_phrase_slots(script.edits) == 0) return script;
  for (const auto& row : policy.phrase_probs(question, script.edits, context)) {
    // Id 0 is the OOV sentinel and never selectable.
    const auto best = std::max_element(row.begin() + 1, row.end()) - row.begin();
    script.phrases.push_back(phrases.phrase(static_cast<std::int32_t>(best)));
  }
  return script;
}

InferenceResult simplify(const TokenSeq& x, const std::vector<TokenSeq>& context,
                         const EditingPolicy& policy, const PhraseVocab& phrases,
                         std::size_t max_iterations) {
  if (max_iterations == 0)
    throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
  if (policy.phrase_vocab_size() != phrases.size())
    throw Error(ErrorCode::Shape, "policy and phrase vocabulary sizes differ");
  InferenceResult r;
  TokenSeq current = x;
  r.trace.stop = StopReason::MaxIterations;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    EditScript script = greedy_script(policy, phrases, current, context);
    TokenSeq next = apply_script(current, script);
    const bool done = count_non_keep(script.edits) == 0;
    r.trace.iterations.push_back({current, std::move(script), next});
    current = std::move(next);
    if (done) {
      r.trace.stop = StopReason::AllKeep;
      break;
    }
  }
  r.output = std::move(current);
  return r;
}

json trace_to_json(const InferenceTrace& trace) {
  json its = json::array();
  for (const auto& rec : trace.iterations) {
    json s = script_to_json(rec.script);
    its.push_back({{"input", rec.input},
                   {"edits", s["edits"]},
                   {"phrases", s["phrases"]},
                   {"output", rec.output}});
  }
  return {{"iterations", its}, {"stop_reason", to_string(trace.stop)}};
}

InferenceTrace trace_from_json(const json& j) {
  InferenceTrace t;
  try {
    for (const auto& rec : j.at("iterations")) {
      IterationRecord r;
      r.input = rec.at("input").get<TokenSeq>();
      r.script = script_from_json(rec);
      r.output = rec.at("output").get<TokenSeq>();
      t.iterations.push_back(std::move(r));
    }
    const auto stop = j.at("stop_reason").get<std::string>();
    if (stop == "all_keep") t.stop = StopReason::AllKeep;
    else if (stop == "max_iterations") t.stop = StopReason::MaxIterations;
    else throw Error(ErrorCode::Parse, "unknown stop reason '" + stop + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed trace: ") + e.what());
  }
  return t;
}

bool replay_trace(const InferenceTrace& trace) {
  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const auto& rec = trace.iterations[k];
    if (k > 0 && trace.iterations[k - 1].output != rec.input) return false;
    try {
      if (apply_script(rec.input, rec.script) != rec.output) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace rise
