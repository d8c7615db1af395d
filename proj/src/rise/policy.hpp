#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rise/corpus.hpp"
#include "rise/dps.hpp"
#include "rise/editcore.hpp"

namespace rise {

/// Editing and phrasing policy as seen by the trainer and the decoder.
class EditingPolicy {
public:
  virtual ~EditingPolicy() = default;

  /// One 4-way distribution (K, D, I, S) per question token.
  virtual EditDistribution edit_probs(const TokenSeq& question,
                                      const std::vector<TokenSeq>& context) const = 0;
  /// One distribution over the phrase vocabulary per phrase slot of `edits`.
  virtual PhraseDistribution phrase_probs(const TokenSeq& question,
                                          const std::vector<EditOp>& edits,
                                          const std::vector<TokenSeq>& context) const = 0;
  virtual std::size_t phrase_vocab_size() const = 0;
};

struct PolicyConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t vocab_size = 0;
  std::size_t phrase_vocab_size = 0;

  std::size_t feature_dim() const { return 4 * embed_dim; }
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Initial logit offset for KEEP in PolicyParams::random.
inline constexpr double kKeepInitBias = 2.0;

/// Trainable parameters of the reference policy. Each head is a one-hidden-
/// layer tanh MLP over a 4*embed_dim feature:
///   edit head:   [tok, context mean, left neighbour, right neighbour] -> 4
///   phrase head: [span mean, context mean, token before span, token after] -> |phrases|
/// Matrices are row-major, shaped (out, in).
struct PolicyParams {
  PolicyConfig config;
  std::vector<double> embedding;  // vocab_size x embed_dim
  std::vector<double> edit_w1, edit_b1, edit_w2, edit_b2;
  std::vector<double> phrase_w1, phrase_b1, phrase_w2, phrase_b2;

  /// All-zero parameters of the given shape.
  static PolicyParams zeros(const PolicyConfig& config);
  static PolicyParams random(const PolicyConfig& config, Rng& rng);

  struct Block {
    const char* name;
    std::size_t rows, cols;
  };
  /// Block names and shapes in serialization order.
  std::vector<Block> layout() const;
  std::vector<std::vector<double>*> blocks();
  std::vector<const std::vector<double>*> blocks() const;

  std::size_t parameter_count() const;
  double norm() const;
  bool all_finite() const;
  /// this += scale * other (shapes must agree).
  void add_scaled(const PolicyParams& other, double scale);
  void scale(double s);

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Gradients share the parameter layout.
using PolicyGradient = PolicyParams;

/// Read-only view binding parameters to the token vocabulary.
class ReferencePolicy final : public EditingPolicy {
public:
  ReferencePolicy(const PolicyParams& params, const Vocab& vocab);

  EditDistribution edit_probs(const TokenSeq& question,
                              const std::vector<TokenSeq>& context) const override;
  PhraseDistribution phrase_probs(const TokenSeq& question, const std::vector<EditOp>& edits,
                                  const std::vector<TokenSeq>& context) const override;
  std::size_t phrase_vocab_size() const override { return params_.config.phrase_vocab_size; }

  /// Gradient of sum_i log pi_e(edit_i) + sum_slots log pi_p(phrase) for the
  /// given script. `phrase_ids` holds one phrase-vocabulary id per slot; the
  /// OOV id contributes nothing (masked). Returns the log-probability too.
  std::pair<PolicyGradient, double> grad_log_prob(const TokenSeq& question,
                                                  const std::vector<TokenSeq>& context,
                                                  const EditScript& script,
                                                  const std::vector<std::int32_t>& phrase_ids) const;

  /// Log-probability only (same masking as grad_log_prob).
  double log_prob(const TokenSeq& question, const std::vector<TokenSeq>& context,
                  const EditScript& script, const std::vector<std::int32_t>& phrase_ids) const;

  const PolicyParams& params() const noexcept { return params_; }

private:
  struct Encoded {
    std::vector<std::int32_t> question;
    std::vector<std::int32_t> context;  // padding and separators removed
  };
  Encoded encode(const TokenSeq& question, const std::vector<TokenSeq>& context) const;

  const PolicyParams& params_;
  const Vocab& vocab_;
};

/// Everything needed to run a trained policy.
struct Model {
  Vocab vocab;
  PhraseVocab phrases;
  PolicyParams params;

  static Model create(Vocab vocab, PhraseVocab phrases, std::size_t embed_dim,
                      std::size_t hidden_dim, Rng& rng);
  ReferencePolicy policy() const { return ReferencePolicy(params, vocab); }
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_string(const Model& model);
/// `expected`, when given, must match the stored shapes (Shape error otherwise).
Model checkpoint_from_string(const std::string& text,
                             const std::optional<PolicyConfig>& expected = std::nullopt);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path,
                      const std::optional<PolicyConfig>& expected = std::nullopt);

}  // namespace rise
