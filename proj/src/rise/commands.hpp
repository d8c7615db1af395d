#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rise/config.hpp"
#include "rise/corpus.hpp"
#include "rise/dps.hpp"
#include "rise/inference.hpp"
#include "rise/metrics.hpp"
#include "rise/policy.hpp"

namespace rise {

// Batch commands behind the CLI. Each takes a resolved config, writes its
// artifacts plus a manifest, and returns a JSON summary.

nlohmann::json run_gen_synthetic(const RunConfig& config);
nlohmann::json run_build_vocab(const RunConfig& config);
nlohmann::json run_train(const RunConfig& config);
nlohmann::json run_simplify(const RunConfig& config);
nlohmann::json run_evaluate(const RunConfig& config);
nlohmann::json run_inspect_dps(const RunConfig& config);

/// Matrix, per-cell distributions and one sampled script for a single pair.
nlohmann::json inspect_dps(const Model& model, const std::string& question,
                           const std::string& target, const std::vector<std::string>& context,
                           std::uint64_t seed);

/// Sentences for the metrics: plain text one per line, or JSON Lines where
/// each record's "output" (or else "target") field is used.
std::vector<TokenSeq> read_sentences(const std::string& path);

nlohmann::json manifest(const RunConfig& config, const std::string& command);

}  // namespace rise
