#include "rise/trainer.hpp"

#include <cmath>
#include <deque>

#include "rise/dps.hpp"

namespace rise {

const char* to_string(SamplerKind k) {
  return k == SamplerKind::Dps ? "dps" : "epsilon_greedy";
}
const char* to_string(BaselineKind k) {
  return k == BaselineKind::None ? "none" : "mean_reward";
}
const char* to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "dps") return SamplerKind::Dps;
  if (s == "epsilon_greedy") return SamplerKind::EpsilonGreedy;
  throw Error(ErrorCode::Config, "unknown sampler '" + s + "' (dps | epsilon_greedy)");
}
BaselineKind baseline_from_string(const std::string& s) {
  if (s == "none") return BaselineKind::None;
  if (s == "mean_reward") return BaselineKind::MeanReward;
  throw Error(ErrorCode::Config, "unknown baseline '" + s + "' (none | mean_reward)");
}
OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw Error(ErrorCode::Config, "unknown optimizer '" + s + "' (sgd | adam)");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& key, const std::string& why) {
    return Error(ErrorCode::Config, "'" + key + "' " + why);
  };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw bad("learning_rate", "must be a finite non-negative number");
  if (!(grad_clip_norm > 0.0)) throw bad("grad_clip_norm", "must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw bad("epsilon", "must lie in [0, 1]");
  if (max_train_iterations_per_chain == 0)
    throw bad("max_train_iterations_per_chain", "must be at least 1");
  if (accumulate == 0) throw bad("accumulate", "must be at least 1");
  if (samples_per_pair == 0) throw bad("samples_per_pair", "must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw bad("adam_beta1", "must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw bad("adam_beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw bad("adam_eps", "must be positive");
}

// --- updates ----------------------------------------------------------------

ReinforceUpdater::ReinforceUpdater(const TrainConfig& config, const PolicyConfig& shape)
    : config_(config), buffer_(PolicyParams::zeros(shape)) {
  config_.validate();
  if (config_.optimizer == OptimizerKind::Adam) {
    m_ = PolicyParams::zeros(shape);
    v_ = PolicyParams::zeros(shape);
  }
}

double ReinforceUpdater::advantage(double reward) const {
  return config_.baseline == BaselineKind::MeanReward ? reward - mean_ : reward;
}

void ReinforceUpdater::accumulate(const PolicyGradient& grad, double reward) {
  if (!std::isfinite(reward)) throw Error(ErrorCode::Numeric, "non-finite reward");
  if (!grad.all_finite()) throw Error(ErrorCode::Numeric, "non-finite gradient");
  const double adv = advantage(reward);
  ++seen_;
  mean_ += (reward - mean_) / static_cast<double>(seen_);
  const double norm = grad.norm();
  const double clip = norm > config_.grad_clip_norm ? config_.grad_clip_norm / norm : 1.0;
  buffer_.add_scaled(grad, adv * clip);
  ++pending_;
}

void ReinforceUpdater::flush(PolicyParams& params) {
  if (pending_ == 0) return;
  auto dst = params.blocks();
  auto upd = buffer_.blocks();
  const double avg = 1.0 / static_cast<double>(pending_);
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::Sgd) {
    for (std::size_t k = 0; k < dst.size(); ++k)
      for (std::size_t i = 0; i < dst[k]->size(); ++i) (*dst[k])[i] += lr * avg * (*upd[k])[i];
  } else {
    ++adam_steps_;
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_steps_));
    auto m = m_.blocks();
    auto v = v_.blocks();
    for (std::size_t k = 0; k < dst.size(); ++k)
      for (std::size_t i = 0; i < dst[k]->size(); ++i) {
        const double g = avg * (*upd[k])[i];
        double& mi = (*m[k])[i];
        double& vi = (*v[k])[i];
        mi = b1 * mi + (1.0 - b1) * g;
        vi = b2 * vi + (1.0 - b2) * g * g;
        (*dst[k])[i] += lr * (mi / c1) / (std::sqrt(vi / c2) + config_.adam_eps);
      }
  }
  buffer_.scale(0.0);
  pending_ = 0;
  if (!params.all_finite()) throw Error(ErrorCode::Numeric, "parameters became non-finite");
}

void ReinforceUpdater::apply(PolicyParams& params, const PolicyGradient& grad, double reward) {
  accumulate(grad, reward);
  flush(params);
}

PolicyParams reinforce_update(const PolicyParams& params, const PolicyGradient& grad, double reward,
                              const TrainConfig& config) {
  if (!(grad.config == params.config))
    throw Error(ErrorCode::Shape, "gradient shape does not match the parameters");
  TrainConfig single = config;
  single.accumulate = 1;
  ReinforceUpdater updater(single, params.config);
  PolicyParams out = params;
  updater.apply(out, grad, reward);
  return out;
}

PhraseTargets resolve_phrase_targets(const EditScript& script, const PhraseVocab& phrases) {
  PhraseTargets t;
  for (const auto& p : script.phrases) {
    const auto id = phrases.id(p);
    t.ids.push_back(id);
    t.masked.push_back(id == PhraseVocab::kOovId);
  }
  return t;
}

nlohmann::json step_to_json(const TrainStepLog& s) {
  return {{"step", s.step},
          {"epoch", s.epoch},
          {"sample", s.sample},
          {"chain_depth", s.chain_depth},
          {"sampler", to_string(s.sampler)},
          {"tokens", s.tokens},
          {"ld_before", s.reward.ld_before},
          {"ld_after", s.reward.ld_after},
          {"non_keep", s.reward.non_keep},
          {"reward", s.reward.value},
          {"advantage", s.advantage},
          {"oov_phrases", s.oov_phrases}};
}

// --- training loop ----------------------------------------------------------

namespace {

struct Pair {
  TokenSeq question;
  TokenSeq target;
  std::vector<TokenSeq> context;
};

struct PoolEntry {
  std::size_t sample;
  TokenSeq current;
  std::size_t depth;
};

}  // namespace

TrainResult irt_train(const std::vector<Sample>& corpus, const Vocab& vocab,
                      const PhraseVocab& phrases, PolicyParams params, const TrainConfig& config,
                      const std::function<void(const TrainStepLog&)>& on_step) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::InvalidArgument, "training corpus is empty");
  if (params.config.vocab_size != vocab.size() ||
      params.config.phrase_vocab_size != phrases.size())
    throw Error(ErrorCode::Shape, "parameters do not match the vocabularies");

  std::vector<Pair> pairs;
  pairs.reserve(corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& s = corpus[k];
    if (!s.target)
      throw Error(ErrorCode::InvalidArgument,
                  "training sample " + std::to_string(k) + " has no target");
    Pair p{tokenize(s.question), tokenize(*s.target), {}};
    for (const auto& u : s.context) p.context.push_back(tokenize_plain(u));
    pairs.push_back(std::move(p));
  }

  const Rng root(config.seed);
  Rng order_rng = root.split("trainer/order");
  Rng sample_rng = root.split("trainer/sampler");
  ReinforceUpdater updater(config, params.config);

  TrainResult result;
  std::size_t step = 0;
  auto budget_left = [&] { return config.max_steps == 0 || step < config.max_steps; };

  for (std::size_t epoch = 0; epoch < config.epochs && budget_left(); ++epoch) {
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    shuffle(order, order_rng);
    std::deque<PoolEntry> pool;
    for (auto k : order) pool.push_back({k, pairs[k].question, 0});

    while (!pool.empty() && budget_left()) {
      PoolEntry entry = std::move(pool.front());
      pool.pop_front();
      const Pair& pair = pairs[entry.sample];
      const ReferencePolicy policy(params, vocab);
      const EditDistribution probs = policy.edit_probs(entry.current, pair.context);

      TokenSeq first_next;
      for (std::size_t rep = 0; rep < config.samples_per_pair && budget_left(); ++rep) {
        EditScript script;
        std::vector<std::int32_t> ids;
        std::size_t oov = 0;
        if (config.sampler == SamplerKind::Dps) {
          const auto m = compute_matrix(entry.current, pair.target, probs);
          script = backtrack_sample(m, entry.current, pair.target, probs, sample_rng);
          auto targets = resolve_phrase_targets(script, phrases);
          ids = std::move(targets.ids);
          for (bool masked : targets.masked) oov += masked ? 1 : 0;
        } else {
          auto g = epsilon_greedy_sample(
              probs,
              [&](const std::vector<EditOp>& edits) {
                return policy.phrase_probs(entry.current, edits, pair.context);
              },
              phrases.phrases(), config.epsilon, sample_rng);
          script = std::move(g.script);
          ids = std::move(g.phrase_ids);
        }
        TokenSeq next = apply_script(entry.current, script);
        const RewardRecord reward = compute_reward(entry.current, next, pair.target, script.edits);

        auto [grad, logp] = policy.grad_log_prob(entry.current, pair.context, script, ids);
        if (!grad.all_finite() || !std::isfinite(logp))
          throw Error(ErrorCode::Numeric,
                      "non-finite gradient on sample " + std::to_string(entry.sample));

        TrainStepLog log;
        log.step = step;
        log.epoch = epoch;
        log.sample = entry.sample;
        log.chain_depth = entry.depth;
        log.sampler = config.sampler;
        log.tokens = entry.current.size();
        log.reward = reward;
        log.advantage = updater.advantage(reward.value);
        log.oov_phrases = oov;

        updater.accumulate(grad, reward.value);
        if (updater.pending() >= config.accumulate) updater.flush(params);
        ++step;
        if (on_step) on_step(log);
        result.log.push_back(log);
        if (rep == 0) first_next = std::move(next);
      }
      if (!first_next.empty() && entry.depth + 1 < config.max_train_iterations_per_chain)
        pool.push_back({entry.sample, std::move(first_next), entry.depth + 1});
    }
  }
  updater.flush(params);
  result.params = std::move(params);
  return result;
}

}  // namespace rise
