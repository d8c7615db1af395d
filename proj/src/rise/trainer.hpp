#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rise/corpus.hpp"
#include "rise/policy.hpp"
#include "rise/reward.hpp"

namespace rise {

enum class SamplerKind { Dps, EpsilonGreedy };
enum class BaselineKind { None, MeanReward };
enum class OptimizerKind { Sgd, Adam };

const char* to_string(SamplerKind k);
const char* to_string(BaselineKind k);
const char* to_string(OptimizerKind k);
SamplerKind sampler_from_string(const std::string& s);
BaselineKind baseline_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 5;
  /// Stop after this many updates (0: run every epoch to completion).
  std::size_t max_steps = 0;
  double grad_clip_norm = 1.0;
  std::size_t max_train_iterations_per_chain = 3;
  SamplerKind sampler = SamplerKind::Dps;
  double epsilon = 0.2;
  std::uint64_t seed = 0;
  BaselineKind baseline = BaselineKind::None;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Number of per-sample gradients averaged into one update.
  std::size_t accumulate = 1;
  /// Scripts drawn per visited pair.
  std::size_t samples_per_pair = 1;

  void validate() const;
};

/// Clipping, baseline subtraction and the optimizer step. Holds the running
/// reward mean and the optimizer moments, so one instance spans a run.
class ReinforceUpdater {
public:
  ReinforceUpdater(const TrainConfig& config, const PolicyConfig& shape);

  /// Reward minus the current baseline (the baseline is not updated).
  double advantage(double reward) const;
  /// Clip `grad` to the configured global norm, scale it by the advantage and
  /// add it to the pending update. Updates the running reward mean.
  void accumulate(const PolicyGradient& grad, double reward);
  /// Apply the averaged pending update (no-op when nothing is pending).
  void flush(PolicyParams& params);
  /// accumulate + flush.
  void apply(PolicyParams& params, const PolicyGradient& grad, double reward);

  std::size_t pending() const noexcept { return pending_; }
  double reward_mean() const noexcept { return mean_; }

private:
  TrainConfig config_;
  PolicyGradient buffer_;
  PolicyGradient m_, v_;
  std::size_t pending_ = 0;
  std::size_t adam_steps_ = 0;
  std::size_t seen_ = 0;
  double mean_ = 0.0;
};

/// Stateless single update (no baseline history, SGD or a fresh Adam state).
PolicyParams reinforce_update(const PolicyParams& params, const PolicyGradient& grad, double reward,
                              const TrainConfig& config);

/// Phrase-vocabulary ids for a script's phrases; OOV phrases map to the
/// sentinel id and are masked out of the phrasing gradient.
struct PhraseTargets {
  std::vector<std::int32_t> ids;
  std::vector<bool> masked;
};
PhraseTargets resolve_phrase_targets(const EditScript& script, const PhraseVocab& phrases);

struct TrainStepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t sample = 0;
  std::size_t chain_depth = 0;
  SamplerKind sampler = SamplerKind::Dps;
  std::size_t tokens = 0;
  RewardRecord reward;
  double advantage = 0.0;
  std::size_t oov_phrases = 0;
};

nlohmann::json step_to_json(const TrainStepLog& s);

struct TrainResult {
  PolicyParams params;
  std::vector<TrainStepLog> log;
};

/// Iterative reinforce training over (question, target) pairs. Each epoch
/// queues every sample once (shuffled), then processes the queue FIFO; an
/// edited pair is re-queued until its chain reaches the configured depth.
TrainResult irt_train(const std::vector<Sample>& corpus, const Vocab& vocab,
                      const PhraseVocab& phrases, PolicyParams params, const TrainConfig& config,
                      const std::function<void(const TrainStepLog&)>& on_step = {});

}  // namespace rise
