#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rise/corpus.hpp"
#include "rise/metrics.hpp"
#include "rise/trainer.hpp"

namespace rise {

/// Every setting the command-line tool understands. A config file is a flat
/// JSON object over these keys; unknown keys are rejected and omitted keys
/// take the defaults below. Empty strings mean "not set" for paths.
struct RunConfig {
  // paths
  std::string corpus_path;
  std::string token_vocab_path;
  std::string phrase_vocab_path;
  std::string checkpoint_path;
  std::string init_checkpoint_path;
  std::string output_dir;
  std::string output_path;
  std::string input_path;
  std::string trace_path;
  std::string candidates_path;
  std::string references_path;
  std::string report_path;
  std::string heldout_path;
  std::string gen_config_path;

  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  // corpus and synthetic generator
  std::size_t min_freq = 1;
  std::size_t phrase_vocab_size = 500;
  std::size_t max_phrase_len = 4;
  std::size_t phrase_min_count = 1;
  std::size_t gen_size = 2000;
  std::size_t gen_vocab_size = 200;
  std::size_t gen_n_entities = 30;
  double gen_p_anaphora = 0.7;
  double gen_p_ellipsis = 0.5;
  std::size_t heldout_size = 0;

  // policy
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;

  // trainer
  double learning_rate = 0.05;
  std::size_t epochs = 5;
  std::size_t max_steps = 0;
  double grad_clip_norm = 1.0;
  std::size_t max_train_iterations_per_chain = 3;
  std::string sampler = "dps";
  double epsilon = 0.2;
  std::string baseline = "none";
  std::string optimizer = "sgd";
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t accumulate = 1;
  std::size_t samples_per_pair = 1;

  // inference
  std::size_t max_iterations = 3;

  // metrics
  std::string bleu_smoothing = "none";

  // inspect-dps
  std::string question;
  std::string target;
  std::vector<std::string> context;

  TrainConfig train_config() const;
  GeneratorConfig generator_config() const;
  BleuSmoothing smoothing() const { return smoothing_from_string(bleu_smoothing); }

  nlohmann::json to_json() const;
};

/// Known subcommands; an empty name skips the required-path check.
const std::vector<std::string>& command_names();

/// Merge `overrides` over `file_values` over the defaults, then range-check
/// everything and check the paths `command` needs.
RunConfig resolve_config(const nlohmann::json& file_values, const nlohmann::json& overrides,
                         const std::string& command = "");

/// Parse and validate a config file (empty path: defaults only).
RunConfig validate_config(const std::string& path, const std::string& command = "");

/// Range checks only.
void check_ranges(const RunConfig& c);
void check_required(const RunConfig& c, const std::string& command);

}  // namespace rise
