#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rise/common.hpp"

namespace rise {

using TokenSeq = std::vector<std::string>;

/// Begin-of-sequence sentinel. Occupies position 0 of every question-side
/// sequence. The tokenizer splits brackets off as punctuation, so none of
/// the reserved strings below can be produced from raw text.
inline constexpr std::string_view kBos = "[BOS]";
inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kOovPhrase = "[OOV]";

struct Sample {
  std::vector<std::string> context;
  std::string question;
  std::optional<std::string> target;
};

/// Lowercase, split on whitespace, detach ASCII punctuation, prepend [BOS].
TokenSeq tokenize(std::string_view text);
/// Same rules without the sentinel; used for context utterances.
TokenSeq tokenize_plain(std::string_view text);
/// Space-join the payload tokens (sentinel dropped).
std::string detokenize(const TokenSeq& tokens);
/// Payload tokens only.
TokenSeq strip_sentinel(const TokenSeq& tokens);

std::vector<Sample> parse_corpus(std::string_view jsonl);
std::vector<Sample> load_corpus(const std::string& path);
std::string corpus_to_jsonl(const std::vector<Sample>& samples);
void save_corpus(const std::string& path, const std::vector<Sample>& samples);

class Vocab {
public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kBosId = 1;
  static constexpr std::int32_t kUnkId = 2;
  static constexpr std::int32_t kSepId = 3;
  static constexpr std::int32_t kNumReserved = 4;

  Vocab();
  /// Reserved entries are added first; `tokens` must not repeat or contain them.
  explicit Vocab(const std::vector<std::string>& tokens);

  std::int32_t id(std::string_view token) const;  // unknown -> kUnkId
  const std::string& token(std::int32_t id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<std::int32_t> encode(const TokenSeq& seq) const;

  /// "<id>\t<token>" per line.
  std::string to_text() const;
  static Vocab from_text(std::string_view text);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Fixed inventory of insertable/substitutable phrases. Id 0 is the OOV
/// sentinel; it has no surface form.
class PhraseVocab {
public:
  static constexpr std::int32_t kOovId = 0;

  PhraseVocab();
  explicit PhraseVocab(const std::vector<TokenSeq>& phrases);

  /// Id of the phrase, or kOovId when absent.
  std::int32_t id(const TokenSeq& phrase) const;
  const TokenSeq& phrase(std::int32_t id) const;
  std::size_t size() const noexcept { return phrases_.size(); }
  const std::vector<TokenSeq>& phrases() const noexcept { return phrases_; }

  /// "<id>\t<space-joined phrase>" per line.
  std::string to_text() const;
  static PhraseVocab from_text(std::string_view text);

  friend bool operator==(const PhraseVocab& a, const PhraseVocab& b) {
    return a.phrases_ == b.phrases_;
  }

private:
  std::vector<TokenSeq> phrases_;
  std::map<TokenSeq, std::int32_t> index_;
};

Vocab build_token_vocab(const std::vector<Sample>& samples, std::size_t min_freq);

/// Phrases are harvested from a minimal Levenshtein alignment of every
/// (question, target) pair: each maximal run of non-matching alignment steps
/// that consumes target tokens yields one phrase (the consumed target tokens).
PhraseVocab build_phrase_vocab(const std::vector<Sample>& samples,
                               std::size_t max_size, std::size_t max_phrase_len,
                               std::size_t min_count = 1);

/// Phrases extracted from one aligned pair, in left-to-right order.
std::vector<TokenSeq> extract_pair_phrases(const TokenSeq& question,
                                           const TokenSeq& target);

// --- synthetic corpus -------------------------------------------------------

struct GeneratorConfig {
  std::size_t size = 2000;
  std::size_t vocab_size = 200;
  std::size_t n_entities = 30;
  double p_anaphora = 0.7;
  double p_ellipsis = 0.5;
  std::uint64_t seed = 0;
};

/// Parses "key = value" lines; '#' starts a comment. Keys: size, vocab_size,
/// n_entities, p_anaphora, p_ellipsis, seed.
GeneratorConfig parse_generator_config(std::string_view text);
void validate_generator_config(const GeneratorConfig& config);

/// Replace the first occurrence of `entity` in `question` with `pronoun`.
/// Returns the question unchanged when the entity does not occur.
TokenSeq anaphora_rule(const TokenSeq& question, const TokenSeq& entity,
                       const TokenSeq& pronoun);
/// Drop a leading `clause` (and a following comma) from `question`.
TokenSeq ellipsis_rule(const TokenSeq& question, const TokenSeq& clause);

std::vector<Sample> generate_synthetic_corpus(const GeneratorConfig& config,
                                              std::uint64_t seed);

}  // namespace rise
