#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rise/metrics.hpp"

using namespace rise;
using testing::words;

namespace {

Corpus identity_corpus() {
  return {words("where did he go after the war"), words("what did ira hayes do next"),
          words("was anyone opposed to him revealing it"), words("who won the first game")};
}

Corpus random_corpus(Rng& rng, std::size_t n, std::size_t max_len) {
  const std::vector<std::string> abc = {"a", "b", "c", "d", "e", "f"};
  Corpus c;
  for (std::size_t k = 0; k < n; ++k) {
    TokenSeq s;
    const std::size_t len = 1 + rng.below(max_len);
    for (std::size_t t = 0; t < len; ++t) s.push_back(abc[rng.below(abc.size())]);
    c.push_back(s);
  }
  return c;
}

}  // namespace

TEST_CASE("identity corpus scores perfectly") {
  const auto c = identity_corpus();
  const auto r = evaluate_corpus(c, c);
  CHECK(r.bleu1 == doctest::Approx(100.0));
  CHECK(r.bleu2 == doctest::Approx(100.0));
  CHECK(r.bleu3 == doctest::Approx(100.0));
  CHECK(r.bleu4 == doctest::Approx(100.0));
  CHECK(r.rougeL == doctest::Approx(100.0));
  CHECK(r.cider == doctest::Approx(10.0));
  CHECK(r.n_samples == 4);
  CHECK_FALSE(r.cider_idf_fallback);
}

TEST_CASE("hand-computed fixtures") {
  CHECK(bleu_n({words("the cat")}, {words("the cat sat")}, 1) == doctest::Approx(60.653).epsilon(1e-4));
  CHECK(rouge_l({words("a b c")}, {words("a c")}) == doctest::Approx(82.99).epsilon(1e-4));
  CHECK(bleu_n({words("x y")}, {words("a b")}, 1) == 0.0);
  CHECK(bleu_n({words("x y")}, {words("a b")}, 4, BleuSmoothing::AddOne) == 0.0);
  CHECK(rouge_l({words("x y")}, {words("a b")}) == 0.0);
  CHECK(cider({words("x y")}, {words("a b")}).score == 0.0);
  CHECK(lcs_length(words("a b c d"), words("b d a")) == 2);
}

TEST_CASE("smoothing keeps short partial matches above zero") {
  const Corpus cand = {words("the cat sat")}, ref = {words("the cat sat down")};
  CHECK(bleu_n(cand, ref, 4) == 0.0);
  CHECK(bleu_n(cand, ref, 4, BleuSmoothing::AddOne) > 0.0);
  CHECK(smoothing_from_string("add_one") == BleuSmoothing::AddOne);
  CHECK_THROWS_AS(smoothing_from_string("floor"), Error);
}

TEST_CASE("random fixtures agree with the direct formulas") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ref = random_corpus(rng, 20, 8);
    auto cand = ref;
    // Perturb about half of the candidates.
    for (auto& s : cand)
      if (rng.below(2)) s = random_corpus(rng, 1, 8)[0];
    for (int n = 1; n <= 4; ++n)
      CHECK(std::fabs(bleu_n(cand, ref, n) - oracle::bleu(cand, ref, n)) < 1e-6);
    CHECK(std::fabs(rouge_l(cand, ref) - oracle::rouge_l(cand, ref)) < 1e-6);
    CHECK(std::fabs(cider(cand, ref).score - oracle::cider(cand, ref)) < 1e-6);
    CHECK(std::fabs(rouge_l(cand, ref, 3) - rouge_l(cand, ref, 1)) < 1e-12);
    CHECK(cider(cand, ref, 3).score == doctest::Approx(cider(cand, ref, 1).score).epsilon(1e-12));
  }
}

TEST_CASE("scores do not depend on pair order") {
  Rng rng(72);
  auto ref = random_corpus(rng, 15, 7), cand = random_corpus(rng, 15, 7);
  const auto before = report_to_json(evaluate_corpus(cand, ref));
  std::vector<std::size_t> idx(ref.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  shuffle(idx, rng);
  Corpus c2, r2;
  for (auto k : idx) c2.push_back(cand[k]), r2.push_back(ref[k]);
  const auto after = report_to_json(evaluate_corpus(c2, r2));
  for (const char* key : {"bleu1", "bleu2", "bleu3", "bleu4", "rougeL", "cider"})
    CHECK(after[key].get<double>() == doctest::Approx(before[key].get<double>()).epsilon(1e-12));
}

TEST_CASE("fixing a wrong token never lowers BLEU-1") {
  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ref = random_corpus(rng, 5, 6);
    auto cand = ref;
    for (auto& s : cand) s[rng.below(s.size())] = "zz";
    const double before = bleu_n(cand, ref, 1);
    cand[0] = ref[0];
    CHECK(bleu_n(cand, ref, 1) >= before - 1e-12);
  }
}

TEST_CASE("degenerate inputs") {
  CHECK_THROWS_AS(bleu_n({}, {}, 4), Error);
  CHECK_THROWS_AS(bleu_n({words("a")}, {words("a"), words("b")}, 4), Error);
  CHECK_THROWS_AS(bleu_n({words("a")}, {words("a")}, 5), Error);
  const Corpus same = {words("a b c d"), words("a b c d")};
  const auto c = cider(same, same);
  CHECK(c.idf_fallback);
  CHECK(c.score == doctest::Approx(10.0));
  const auto r = evaluate_corpus(same, same);
  CHECK(r.cider_idf_fallback);
  CHECK(report_to_json(r)["cider_idf_fallback"] == true);
  CHECK(report_to_display(r).find("100.0") != std::string::npos);
}
