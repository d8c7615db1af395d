#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rise/policy.hpp"

using namespace rise;
using testing::sent;
using testing::words;

namespace {

Vocab small_vocab() { return Vocab({"a", "b", "c", "d", "e"}); }
PhraseVocab small_phrases() { return PhraseVocab({{"a"}, {"b", "c"}, {"e"}}); }

EditScript random_script(const TokenSeq& q, Rng& rng, const std::vector<std::string>& abc) {
  EditScript s;
  for (std::size_t i = 0; i < q.size(); ++i) {
    EditOp op = kAllEditOps[rng.below(4)];
    if (i == 0 && (op == EditOp::Delete || op == EditOp::Substitute)) op = EditOp::Keep;
    s.edits.push_back(op);
  }
  for (std::size_t k = 0; k < count_phrase_slots(s.edits); ++k)
    s.phrases.push_back({abc[rng.below(abc.size())]});
  return s;
}

}  // namespace

TEST_CASE("zero parameters give uniform distributions") {
  const auto vocab = small_vocab();
  const auto phrases = small_phrases();
  const PolicyParams p = PolicyParams::zeros({3, 4, vocab.size(), phrases.size()});
  const ReferencePolicy pi(p, vocab);
  const auto q = sent("a b zzz");
  for (const auto& row : pi.edit_probs(q, {words("c d")}))
    for (double x : row) CHECK(x == doctest::Approx(0.25));
  const auto ph = pi.phrase_probs(q, {EditOp::Keep, EditOp::Substitute, EditOp::Keep, EditOp::Insert}, {});
  REQUIRE(ph.size() == 2);
  for (const auto& row : ph)
    for (double x : row) CHECK(x == doctest::Approx(1.0 / phrases.size()));
}

TEST_CASE("random initialization leans toward KEEP and is seeded") {
  const PolicyConfig cfg{4, 6, 9, 3};
  Rng a(5), b(5), c(6);
  const auto pa = PolicyParams::random(cfg, a);
  CHECK(pa == PolicyParams::random(cfg, b));
  CHECK_FALSE(pa == PolicyParams::random(cfg, c));
  CHECK(pa.edit_b2[0] == kKeepInitBias);
  CHECK(pa.all_finite());
  CHECK_THROWS_AS(PolicyParams::zeros({0, 4, 9, 3}), Error);
}

TEST_CASE("gradient matches finite differences") {
  const std::vector<std::string> abc = {"a", "b", "c", "d", "e", "unk"};
  const auto vocab = small_vocab();
  const auto phrases = small_phrases();
  Rng rng(41);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyConfig cfg{1 + rng.below(3), 1 + rng.below(4), vocab.size(), phrases.size()};
    PolicyParams p = PolicyParams::random(cfg, rng);
    const ReferencePolicy pi(p, vocab);
    const auto q = testing::random_sentence(rng, 5, abc);
    std::vector<TokenSeq> ctx = {testing::words("a c e"), testing::words("b unk")};
    const auto script = random_script(q, rng, abc);
    std::vector<std::int32_t> ids;
    for (std::size_t k = 0; k < script.phrases.size(); ++k)
      ids.push_back(static_cast<std::int32_t>(rng.below(phrases.size())));

    const auto [grad, logp] = pi.grad_log_prob(q, ctx, script, ids);
    CHECK(logp == doctest::Approx(pi.log_prob(q, ctx, script, ids)));
    CHECK(logp <= 0.0);

    auto params = p.blocks();
    const auto grads = grad.blocks();
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t k = 0; k < params[b]->size(); ++k) {
        double& x = (*params[b])[k];
        const double keep = x;
        x = keep + h;
        const double up = pi.log_prob(q, ctx, script, ids);
        x = keep - h;
        const double down = pi.log_prob(q, ctx, script, ids);
        x = keep;
        const double numeric = (up - down) / (2 * h);
        const double analytic = (*grads[b])[k];
        const double err = std::fabs(numeric - analytic);
        if (err > 1e-9) CHECK(err / (std::fabs(numeric) + std::fabs(analytic)) < 1e-4);
      }
  }
}

TEST_CASE("OOV phrase targets are masked out of the gradient") {
  const auto vocab = small_vocab();
  const auto phrases = small_phrases();
  Rng rng(42);
  const PolicyParams p = PolicyParams::random({3, 4, vocab.size(), phrases.size()}, rng);
  const ReferencePolicy pi(p, vocab);
  const auto q = sent("a b c");
  const EditScript s{{EditOp::Keep, EditOp::Substitute, EditOp::Keep, EditOp::Keep}, {{"zz"}}};
  const auto [g, lp] = pi.grad_log_prob(q, {}, s, {PhraseVocab::kOovId});
  for (double x : g.phrase_w1) CHECK(x == 0.0);
  for (double x : g.phrase_w2) CHECK(x == 0.0);
  for (double x : g.phrase_b2) CHECK(x == 0.0);
  double edits_only = 0.0;
  const auto probs = pi.edit_probs(q, {});
  for (std::size_t i = 0; i < q.size(); ++i) edits_only += std::log(probs[i][static_cast<std::size_t>(s.edits[i])]);
  CHECK(lp == doctest::Approx(edits_only));

  const auto [g2, lp2] = pi.grad_log_prob(q, {}, s, {1});
  CHECK(lp2 < lp);
  CHECK_THROWS_AS(pi.grad_log_prob(q, {}, s, {}), Error);
  CHECK_THROWS_AS(pi.grad_log_prob(q, {}, s, {9}), Error);
}

TEST_CASE("padding and separators in the context change nothing") {
  const auto vocab = small_vocab();
  Rng rng(43);
  const PolicyParams p = PolicyParams::random({3, 4, vocab.size(), 2}, rng);
  const ReferencePolicy pi(p, vocab);
  const auto q = sent("a d");
  const auto plain = pi.edit_probs(q, {words("b c"), words("e")});
  const auto padded = pi.edit_probs(
      q, {{"b", std::string(kPad), "c", std::string(kSep)}, {std::string(kPad), "e", std::string(kPad)}});
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t k = 0; k < 4; ++k) CHECK(plain[i][k] == doctest::Approx(padded[i][k]).epsilon(1e-14));
  // A different context does change the output.
  const auto other = pi.edit_probs(q, {words("a a a")});
  CHECK(other[1][0] != doctest::Approx(plain[1][0]).epsilon(1e-12));
}

TEST_CASE("vocabulary size must match the embedding table") {
  const auto vocab = small_vocab();
  const PolicyParams p = PolicyParams::zeros({2, 2, vocab.size() + 1, 2});
  CHECK_THROWS_AS(ReferencePolicy(p, vocab), Error);
}

TEST_CASE("checkpoint round trip and failures") {
  Rng rng(44);
  const Model m = Model::create(small_vocab(), small_phrases(), 3, 5, rng);
  const auto text = checkpoint_to_string(m);
  const Model back = checkpoint_from_string(text);
  CHECK(back.params == m.params);
  CHECK(back.vocab == m.vocab);
  CHECK(back.phrases == m.phrases);
  CHECK(checkpoint_to_string(back) == text);

  testing::TempDir dir;
  save_checkpoint(m, dir.file("ck.json"));
  CHECK(load_checkpoint(dir.file("ck.json")).params == m.params);

  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  auto doc = nlohmann::json::parse(text);
  doc["version"] = 99;
  CHECK(code_of([&] { checkpoint_from_string(doc.dump()); }) == ErrorCode::Version);
  CHECK(code_of([&] { checkpoint_from_string(text, PolicyConfig{4, 5, m.vocab.size(), m.phrases.size()}); }) ==
        ErrorCode::Shape);
  CHECK(code_of([&] { checkpoint_from_string(text.substr(0, text.size() / 2)); }) == ErrorCode::Parse);
  auto bad = nlohmann::json::parse(text);
  bad["blocks"][0]["data"].erase(0);
  CHECK(code_of([&] { checkpoint_from_string(bad.dump()); }) == ErrorCode::Shape);
  CHECK(code_of([&] { load_checkpoint(dir.file("missing.json")); }) == ErrorCode::Io);
}

TEST_CASE("parameter arithmetic") {
  PolicyParams a = PolicyParams::zeros({1, 1, 5, 2});
  PolicyParams b = a;
  for (auto* blk : b.blocks())
    for (double& x : *blk) x = 1.0;
  a.add_scaled(b, 0.5);
  CHECK(a.norm() == doctest::Approx(0.5 * std::sqrt(static_cast<double>(a.parameter_count()))));
  a.scale(2.0);
  CHECK(a == b);
  CHECK_THROWS_AS(a.add_scaled(PolicyParams::zeros({2, 1, 5, 2}), 1.0), Error);
}
