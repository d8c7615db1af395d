// Acceptance run: one PASS/FAIL line per criterion. The end-to-end and
// ablation checks drive the command-line tool on a fresh synthetic corpus.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rise/commands.hpp"
#include "rise/inference.hpp"
#include "rise/metrics.hpp"
#include "rise/reward.hpp"

using namespace rise;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
int inference_contract_replays = 0;  // seeds whose held-out traces all replayed

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::vector<TokenSeq> all_sequences(std::size_t max_len, const std::vector<std::string>& abc) {
  std::vector<TokenSeq> out{{}};
  std::vector<TokenSeq> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& s : frontier)
      for (const auto& a : abc) {
        auto t = s;
        t.push_back(a);
        next.push_back(t);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

std::vector<oracle::Probs> to_oracle(const EditDistribution& d) {
  std::vector<oracle::Probs> out;
  for (const auto& p : d) out.push_back({p[0], p[1], p[2], p[3]});
  return out;
}

// --- criteria -----------------------------------------------------------------

void ld_oracle() {
  const auto t0 = Clock::now();
  const auto seqs = all_sequences(6, {"a", "b", "c", "d"});
  // The oracle sees the symbols as small integers; the library sees strings.
  std::vector<std::vector<int>> codes;
  for (const auto& s : seqs) {
    std::vector<int> c;
    for (const auto& t : s) c.push_back(t[0]);
    codes.push_back(c);
  }
  std::size_t pairs = 0, mismatches = 0;
  oracle::MemoLevenshtein<std::vector<int>> brute;
  for (std::size_t x = 0; x < seqs.size(); ++x)
    for (std::size_t y = 0; y < seqs.size(); ++y) {
      ++pairs;
      if (levenshtein(seqs[x], seqs[y]) != brute(codes[x], codes[y])) ++mismatches;
    }
  Rng rng(1001);
  const std::vector<std::string> abc = {"a", "b", "c", "d"};
  for (int k = 0; k < 1000; ++k) {
    TokenSeq x, y;
    for (std::size_t n = rng.below(13); n > 0; --n) x.push_back(abc[rng.below(4)]);
    for (std::size_t n = rng.below(13); n > 0; --n) y.push_back(abc[rng.below(4)]);
    ++pairs;
    if (levenshtein(x, y) != oracle::levenshtein_memo(x, y)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << pairs << " pairs, " << mismatches << " mismatches, " << secs << " s";
  report(mismatches == 0 && secs < 30.0, "levenshtein matches the recursive oracle", d.str());
}

void dps_matrix_oracle() {
  const auto y = testing::sent("a");
  const auto uniform = compute_matrix(y, y, testing::uniform_policy(2));
  const bool hand = std::fabs(uniform.value(1, 1) - 0.2125) < 1e-15;

  const auto bodies = all_sequences(4, {"x", "y", "z"});
  std::vector<TokenSeq> seqs;
  for (const auto& b : bodies) {
    TokenSeq s{std::string(kBos)};
    s.insert(s.end(), b.begin(), b.end());
    seqs.push_back(s);
  }
  Rng rng(1002);
  double worst = 0.0;
  std::size_t matrices = 0;
  for (const auto& a : seqs)
    for (const auto& b : seqs)
      for (int k = 0; k < 50; ++k) {
        const auto pi = testing::random_policy(a.size(), rng);
        const auto m = compute_matrix(a, b, pi);
        oracle::Lattice o(a, b, to_oracle(pi));
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t j = 0; j < m.cols(); ++j) worst = std::max(worst, std::fabs(m.value(i, j) - o.value(i, j)));
        ++matrices;
      }
  std::ostringstream d;
  d << matrices << " matrices, max |diff| " << worst << ", M[1][1] = " << uniform.value(1, 1);
  report(hand && worst <= 1e-12, "expectation matrix matches the memoized recursion", d.str());
}

void dps_sample_validity() {
  const auto t0 = Clock::now();
  Rng rng(1003);
  const std::vector<std::string> abc = {"p", "q", "r", "s", "t"};
  std::size_t bad_target = 0, bad_cells = 0, not_repro = 0, cells = 0;
  for (int k = 0; k < 500; ++k) {
    const auto a = testing::random_sentence(rng, 8, abc), b = testing::random_sentence(rng, 8, abc);
    const auto pi = testing::random_policy(a.size(), rng);
    const std::uint64_t seed = rng.next_u64();
    const auto m = compute_matrix(a, b, pi);
    Rng r1(seed), r2(seed);
    const auto s1 = backtrack_sample(m, a, b, pi, r1);
    const auto s2 = backtrack_sample(m, a, b, pi, r2);
    if (apply_script(a, s1) != b) ++bad_target;
    if (!(s1 == s2)) ++not_repro;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if ((i == 0 && j == 0) || m.value(i, j) == 0.0) continue;
        ++cells;
        const auto d = cell_distribution(m, i, j, pi);
        double sum = 0.0;
        for (EditOp op : kAllEditOps) {
          const double p = d.p[static_cast<std::size_t>(op)];
          sum += p;
          if (!m.is_allowed(i, j, op) && p != 0.0) ++bad_cells;
        }
        if (std::fabs(sum - 1.0) > 1e-9) ++bad_cells;
      }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "500 triples, " << cells << " cells; wrong target " << bad_target << ", bad cells " << bad_cells
    << ", irreproducible " << not_repro << ", " << secs << " s";
  report(bad_target + bad_cells + not_repro == 0 && secs < 60.0, "sampled scripts are valid", d.str());
}

void reward_fixture() {
  const auto q = testing::sent("was anyone opposed to ira hayes revealing");
  const auto y = testing::sent("was anyone opposed to him revealing");
  using E = EditOp;
  const std::vector<E> him_script = {E::Keep, E::Keep, E::Keep, E::Keep, E::Keep, E::Substitute, E::Substitute, E::Keep};
  std::vector<E> spurious(y.size(), E::Keep);
  spurious[2] = spurious[3] = E::Substitute;

  const auto r1 = compute_reward(q, y, y, him_script);
  const auto r2 = compute_reward(y, y, y, std::vector<E>(y.size(), E::Keep));
  const auto r3 = compute_reward(y, y, y, spurious);
  const bool lds = r1.ld_before == oracle::levenshtein(q, y) && r1.ld_after == oracle::levenshtein(y, y) &&
                   r2.ld_before == oracle::levenshtein(y, y) && r3.ld_after == oracle::levenshtein(y, y);
  std::ostringstream d;
  d << "values " << r1.value << ", " << r2.value << ", " << r3.value;
  report(lds && r1.value == 1.0 && r2.value == 1.0 && r3.value == -1.0, "reward examples", d.str());
}

void gradient_check() {
  const Vocab vocab({"a", "b", "c", "d", "e"});
  const PhraseVocab phrases({{"a"}, {"b", "c"}, {"e"}});
  const std::vector<std::string> abc = {"a", "b", "c", "d", "e", "unk"};
  Rng rng(1004);
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t coords = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyConfig cfg{1 + rng.below(3), 1 + rng.below(4), vocab.size(), phrases.size()};
    PolicyParams p = PolicyParams::random(cfg, rng);
    const ReferencePolicy pi(p, vocab);
    const auto q = testing::random_sentence(rng, 5, abc);
    const std::vector<TokenSeq> ctx = {testing::words("a c e"), testing::words("b unk")};
    EditScript script;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EditOp op = kAllEditOps[rng.below(4)];
      if (i == 0 && (op == EditOp::Delete || op == EditOp::Substitute)) op = EditOp::Insert;
      script.edits.push_back(op);
    }
    std::vector<std::int32_t> ids;
    for (std::size_t k = 0; k < count_phrase_slots(script.edits); ++k) {
      script.phrases.push_back({abc[rng.below(abc.size())]});
      ids.push_back(static_cast<std::int32_t>(1 + rng.below(phrases.size() - 1)));
    }
    const auto grad = pi.grad_log_prob(q, ctx, script, ids).first;
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
        const double numeric = (up - down) / (2 * h), analytic = (*grads[b])[k];
        // Coordinates with no influence on the log-probability have no scale.
        const double scale = std::max(std::fabs(numeric), std::fabs(analytic));
        if (scale > 1e-6) {
          worst = std::max(worst, std::fabs(numeric - analytic) / scale);
          ++coords;
        }
      }
  }
  std::ostringstream d;
  d << "20 configurations, " << coords << " non-zero coordinates, max relative error " << worst;
  report(worst < 1e-4, "analytic gradient matches finite differences", d.str());
}

void metric_fixtures() {
  const Corpus id = {testing::words("where did he go after the war"), testing::words("what did ira hayes do next"),
                     testing::words("was anyone opposed to him revealing it")};
  const auto r = evaluate_corpus(id, id);
  bool ok = std::fabs(r.bleu1 - 100) < 1e-9 && std::fabs(r.bleu2 - 100) < 1e-9 &&
            std::fabs(r.bleu3 - 100) < 1e-9 && std::fabs(r.bleu4 - 100) < 1e-9 &&
            std::fabs(r.rougeL - 100) < 1e-9 && std::fabs(r.cider - 10) < 1e-9;
  const double b1 = bleu_n({testing::words("the cat")}, {testing::words("the cat sat")}, 1);
  const double rl = rouge_l({testing::words("a b c")}, {testing::words("a c")});
  ok = ok && std::fabs(b1 - 60.65) < 0.01 && std::fabs(rl - 82.99) < 0.01;

  Rng rng(1005);
  const std::vector<std::string> abc = {"a", "b", "c", "d", "e", "f", "g"};
  Corpus cand, ref;
  for (int k = 0; k < 20; ++k) {
    TokenSeq c, t;
    for (std::size_t n = 1 + rng.below(9); n > 0; --n) t.push_back(abc[rng.below(abc.size())]);
    c = t;
    if (rng.below(3) > 0) c[rng.below(c.size())] = abc[rng.below(abc.size())];
    if (rng.below(3) == 0) c.push_back("g");
    cand.push_back(c);
    ref.push_back(t);
  }
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) worst = std::max(worst, std::fabs(bleu_n(cand, ref, n) - oracle::bleu(cand, ref, n)));
  worst = std::max(worst, std::fabs(rouge_l(cand, ref) - oracle::rouge_l(cand, ref)));
  worst = std::max(worst, std::fabs(cider(cand, ref).score - oracle::cider(cand, ref)));
  std::ostringstream d;
  d << "identity " << r.bleu4 << "/" << r.rougeL << "/" << r.cider << ", BLEU-1 " << b1 << ", ROUGE-L " << rl
    << ", 20-pair max |diff| " << worst;
  report(ok && worst < 1e-6, "metric fixtures", d.str());
}

// --- end to end ---------------------------------------------------------------

int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(RISE_CLI_PATH) + " " + args + " >>" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct RunStats {
  double bleu4 = 0, origin_bleu4 = 0;
  double mean_reward = 0;
  double non_keep_fraction = 0;
  double train_seconds = 0;
  bool ok = false;
  bool traces_replay = false;
};

RunStats train_stats(const std::string& log_path) {
  RunStats s;
  std::istringstream in(read_file(log_path));
  double reward = 0, non_keep = 0, tokens = 0;
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    reward += j["reward"].get<double>();
    non_keep += j["non_keep"].get<double>();
    tokens += j["tokens"].get<double>();
    ++n;
  }
  s.mean_reward = n ? reward / static_cast<double>(n) : 0.0;
  s.non_keep_fraction = tokens > 0 ? non_keep / tokens : 0.0;
  return s;
}

/// Corpus, vocabularies and a training run for one seed and sampler.
RunStats pipeline(const std::string& root, std::uint64_t seed, const std::string& sampler) {
  const std::string dir = root + "/seed" + std::to_string(seed);
  const std::string log = dir + "/" + sampler + ".log";
  std::filesystem::create_directories(dir);
  RunStats s;
  if (!std::filesystem::exists(dir + "/tokens.txt")) {
    if (run_cli("gen-synthetic --size 2000 --heldout-size 200 --seed " + std::to_string(seed) + " --output " +
                    dir + "/train.jsonl --heldout " + dir + "/heldout.jsonl",
                log) != 0)
      return s;
    if (run_cli("build-vocab --corpus " + dir + "/train.jsonl --tokens " + dir + "/tokens.txt --phrases " + dir +
                    "/phrases.txt",
                log) != 0)
      return s;
  }
  const auto t0 = Clock::now();
  if (run_cli("train --corpus " + dir + "/train.jsonl --tokens " + dir + "/tokens.txt --phrases " + dir +
                  "/phrases.txt --out " + dir + "/" + sampler + " --sampler " + sampler + " --seed " +
                  std::to_string(seed),
              log) != 0)
    return s;
  const double train_seconds = seconds_since(t0);
  s = train_stats(dir + "/" + sampler + "/train_log.jsonl");
  s.train_seconds = train_seconds;
  if (run_cli("simplify --checkpoint " + dir + "/" + sampler + "/checkpoint.json --input " + dir +
                  "/heldout.jsonl --output " + dir + "/" + sampler + "/heldout.out.txt --trace " + dir + "/" +
                  sampler + "/heldout.trace.json",
              log) != 0)
    return s;

  const auto heldout = load_corpus(dir + "/heldout.jsonl");
  Corpus refs, origin;
  for (const auto& h : heldout) {
    refs.push_back(tokenize_plain(*h.target));
    origin.push_back(tokenize_plain(h.question));
  }
  const auto outputs = read_sentences(dir + "/" + sampler + "/heldout.out.txt");
  if (outputs.size() != refs.size()) return s;
  s.bleu4 = bleu_n(outputs, refs, 4);
  s.origin_bleu4 = bleu_n(origin, refs, 4);

  s.traces_replay = true;
  for (const auto& rec : json::parse(read_file(dir + "/" + sampler + "/heldout.trace.json"))) {
    const auto trace = trace_from_json(rec["trace"]);
    s.traces_replay = s.traces_replay && replay_trace(trace) && trace.iterations.size() <= 3;
  }
  s.ok = true;
  return s;
}

void end_to_end_and_ablation(const std::string& root) {
  int e2e_wins = 0, reward_wins = 0, explore_wins = 0, replay_ok = 0;
  double longest = 0.0;
  std::ostringstream e2e, abl;
  e2e.precision(3);
  abl.precision(3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunStats dps = pipeline(root, seed, "dps");
    const RunStats eg = pipeline(root, seed, "epsilon_greedy");
    longest = std::max({longest, dps.train_seconds, eg.train_seconds});
    if (dps.ok && dps.bleu4 - dps.origin_bleu4 >= 5.0 && dps.train_seconds <= 1800.0) ++e2e_wins;
    if (dps.ok && eg.ok && dps.mean_reward >= eg.mean_reward) ++reward_wins;
    if (dps.ok && eg.ok && eg.non_keep_fraction > dps.non_keep_fraction) ++explore_wins;
    if (dps.traces_replay && eg.traces_replay) ++replay_ok;
    e2e << (seed > 1 ? "; " : "") << "seed " << seed << " BLEU-4 " << dps.bleu4 << " vs origin "
        << dps.origin_bleu4;
    abl << (seed > 1 ? "; " : "") << "seed " << seed << " reward " << dps.mean_reward << " vs "
        << eg.mean_reward << ", non-K " << dps.non_keep_fraction << " vs " << eg.non_keep_fraction;
  }
  e2e << "; longest training " << longest << " s";
  report(e2e_wins >= 4, "trained model beats the copy baseline by 5 BLEU-4 (" + std::to_string(e2e_wins) + "/5)",
         e2e.str());
  report(reward_wins >= 4 && explore_wins == 5,
         "DPS out-rewards epsilon-greedy (" + std::to_string(reward_wins) + "/5) with fewer non-KEEP edits (" +
             std::to_string(explore_wins) + "/5)",
         abl.str());
  inference_contract_replays = replay_ok;
}

/// Fixed-preference policy for the termination checks.
class FixedPolicy final : public EditingPolicy {
public:
  FixedPolicy(EditOp last, std::size_t phrases) : last_(last), phrases_(phrases) {}
  EditDistribution edit_probs(const TokenSeq& q, const std::vector<TokenSeq>&) const override {
    EditDistribution d(q.size(), EditProbs{0.7, 0.1, 0.1, 0.1});
    d.back() = EditProbs{0.1, 0.1, 0.1, 0.1};
    d.back()[static_cast<std::size_t>(last_)] = 0.7;
    return d;
  }
  PhraseDistribution phrase_probs(const TokenSeq&, const std::vector<EditOp>& edits,
                                  const std::vector<TokenSeq>&) const override {
    return PhraseDistribution(count_phrase_slots(edits), std::vector<double>(phrases_, 1.0 / phrases_));
  }
  std::size_t phrase_vocab_size() const override { return phrases_; }

private:
  EditOp last_;
  std::size_t phrases_;
};

void inference_contract() {
  const PhraseVocab pv({{"again"}});
  const auto q = testing::sent("where did he go");
  const auto keep = simplify(q, {}, FixedPolicy(EditOp::Keep, pv.size()), pv, 3);
  const bool one = keep.trace.iterations.size() == 1 && keep.output == q && keep.trace.stop == StopReason::AllKeep;
  const auto grow = simplify(q, {}, FixedPolicy(EditOp::Insert, pv.size()), pv, 3);
  const bool capped = grow.trace.iterations.size() == 3 && grow.trace.stop == StopReason::MaxIterations;
  const bool replay = replay_trace(keep.trace) && replay_trace(grow.trace) &&
                      replay_trace(trace_from_json(json::parse(trace_to_json(grow.trace).dump())));
  std::ostringstream d;
  d << "all-KEEP iterations " << keep.trace.iterations.size() << ", capped run " << grow.trace.iterations.size()
    << ", held-out traces replayed for " << inference_contract_replays << "/5 seeds";
  report(one && capped && replay && inference_contract_replays == 5, "inference stops, caps and replays", d.str());
}

}  // namespace

int main(int argc, char** argv) {
  // Work directory for the end-to-end runs; kept when given explicitly.
  testing::TempDir scratch;
  const std::string root = argc > 1 ? argv[1] : scratch.path().string();
  const auto t0 = Clock::now();
  ld_oracle();
  dps_matrix_oracle();
  dps_sample_validity();
  reward_fixture();
  gradient_check();
  metric_fixtures();
  end_to_end_and_ablation(root);
  inference_contract();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << seconds_since(t0) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
