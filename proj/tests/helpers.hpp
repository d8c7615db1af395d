#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "rise/common.hpp"
#include "rise/corpus.hpp"
#include "rise/dps.hpp"
#include "rise/policy.hpp"

namespace testing {

/// Whitespace split, no sentinel.
inline rise::TokenSeq words(const std::string& s) {
  std::istringstream in(s);
  rise::TokenSeq out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

/// Whitespace split with the sentinel in front.
inline rise::TokenSeq sent(const std::string& s) {
  rise::TokenSeq out{std::string(rise::kBos)};
  for (auto& w : words(s)) out.push_back(w);
  return out;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rise-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Random strictly positive distribution over the four edits.
inline rise::EditProbs random_probs(rise::Rng& rng) {
  rise::EditProbs p;
  double s = 0.0;
  for (auto& x : p) {
    x = 0.05 + rng.uniform();
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

inline rise::EditDistribution random_policy(std::size_t rows, rise::Rng& rng) {
  rise::EditDistribution d(rows);
  for (auto& r : d) r = random_probs(rng);
  return d;
}

inline rise::EditDistribution uniform_policy(std::size_t rows) {
  return rise::EditDistribution(rows, rise::EditProbs{0.25, 0.25, 0.25, 0.25});
}

inline rise::TokenSeq random_sentence(rise::Rng& rng, std::size_t max_len,
                                      const std::vector<std::string>& alphabet) {
  rise::TokenSeq s{std::string(rise::kBos)};
  const std::size_t n = rng.below(max_len + 1);
  for (std::size_t k = 0; k < n; ++k) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}

/// Hand-built model that rewrites "ira hayes" into "him" and keeps every
/// other token. One embedding dimension flags the name tokens; the edit head
/// turns that flag into a SUBSTITUTE preference.
inline rise::Model pronoun_oracle_model() {
  rise::Vocab vocab({"was", "anyone", "opposed", "to", "ira", "hayes", "revealing", "him"});
  rise::PhraseVocab phrases({{"him"}});
  rise::PolicyConfig cfg{1, 1, vocab.size(), phrases.size()};
  rise::PolicyParams p = rise::PolicyParams::zeros(cfg);
  p.embedding[static_cast<std::size_t>(vocab.id("ira"))] = 1.0;
  p.embedding[static_cast<std::size_t>(vocab.id("hayes"))] = 1.0;
  p.edit_w1 = {5.0, 0.0, 0.0, 0.0};
  p.edit_w2 = {0.0, 0.0, 0.0, 10.0};  // K, D, I, S rows of a 4x1 matrix
  p.edit_b2 = {5.0, -5.0, -5.0, 0.0};
  p.phrase_b2 = {0.0, 5.0};
  return rise::Model{std::move(vocab), std::move(phrases), std::move(p)};
}

}  // namespace testing
