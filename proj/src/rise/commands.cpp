#include "rise/commands.hpp"

#include <filesystem>
#include <map>

#include "rise/trainer.hpp"

namespace rise {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_manifest_next_to(const std::string& artifact, const RunConfig& c, const std::string& cmd) {
  write_json(artifact + ".manifest.json", manifest(c, cmd));
}

std::vector<TokenSeq> tokenize_context(const std::vector<std::string>& context) {
  std::vector<TokenSeq> out;
  for (const auto& u : context) out.push_back(tokenize_plain(u));
  return out;
}

}  // namespace

json manifest(const RunConfig& config, const std::string& command) {
  return {{"tool", "rise"},
          {"version", kVersion},
          {"checkpoint_version", kCheckpointVersion},
          {"command", command},
          {"seed", config.seed},
          {"config", config.to_json()}};
}

json run_gen_synthetic(const RunConfig& c) {
  GeneratorConfig g = c.generator_config();
  auto samples = generate_synthetic_corpus(g, derive_seed(c.seed, "corpus"));
  std::vector<Sample> heldout;
  if (c.heldout_size > 0) {
    heldout.assign(samples.end() - static_cast<std::ptrdiff_t>(c.heldout_size), samples.end());
    samples.resize(samples.size() - c.heldout_size);
    save_corpus(c.heldout_path, heldout);
  }
  save_corpus(c.output_path, samples);
  write_manifest_next_to(c.output_path, c, "gen-synthetic");
  return {{"samples", samples.size()}, {"heldout", heldout.size()}, {"output_path", c.output_path}};
}

json run_build_vocab(const RunConfig& c) {
  const auto samples = load_corpus(c.corpus_path);
  const Vocab vocab = build_token_vocab(samples, c.min_freq);
  const PhraseVocab phrases =
      build_phrase_vocab(samples, c.phrase_vocab_size, c.max_phrase_len, c.phrase_min_count);
  write_file(c.token_vocab_path, vocab.to_text());
  write_file(c.phrase_vocab_path, phrases.to_text());
  write_manifest_next_to(c.token_vocab_path, c, "build-vocab");
  return {{"tokens", vocab.size()}, {"phrases", phrases.size()}};
}

json run_train(const RunConfig& c) {
  const auto corpus = load_corpus(c.corpus_path);
  fs::create_directories(c.output_dir);
  const fs::path dir(c.output_dir);

  Model model = [&] {
    if (!c.init_checkpoint_path.empty())
      return load_checkpoint(c.init_checkpoint_path,
                             PolicyConfig{c.embed_dim, c.hidden_dim, 0, 0});
    Vocab vocab = Vocab::from_text(read_file(c.token_vocab_path));
    PhraseVocab phrases = PhraseVocab::from_text(read_file(c.phrase_vocab_path));
    Rng init(derive_seed(c.seed, "init"));
    return Model::create(std::move(vocab), std::move(phrases), c.embed_dim, c.hidden_dim, init);
  }();
  save_checkpoint(model, (dir / "init_checkpoint.json").string());

  std::string log_text;
  const TrainConfig tc = c.train_config();
  auto result = irt_train(corpus, model.vocab, model.phrases, model.params, tc,
                          [&](const TrainStepLog& s) {
                            log_text += step_to_json(s).dump();
                            log_text.push_back('\n');
                          });
  model.params = std::move(result.params);
  save_checkpoint(model, (dir / "checkpoint.json").string());
  write_file((dir / "train_log.jsonl").string(), log_text);
  write_json((dir / "manifest.json").string(), manifest(c, "train"));

  std::map<std::size_t, std::pair<double, std::size_t>> per_epoch;
  for (const auto& s : result.log) {
    auto& [sum, n] = per_epoch[s.epoch];
    sum += s.reward.value;
    ++n;
  }
  json epochs = json::array();
  for (const auto& [e, acc] : per_epoch)
    epochs.push_back({{"epoch", e}, {"steps", acc.second}, {"mean_reward", acc.first / static_cast<double>(acc.second)}});
  return {{"steps", result.log.size()},
          {"epochs", epochs},
          {"checkpoint", (dir / "checkpoint.json").string()}};
}

json run_simplify(const RunConfig& c) {
  const Model model = load_checkpoint(c.checkpoint_path);
  const auto samples = load_corpus(c.input_path);
  const ReferencePolicy policy = model.policy();
  std::vector<InferenceResult> results(samples.size());
  parallel_for(samples.size(), static_cast<unsigned>(c.jobs), [&](std::size_t k) {
    results[k] = simplify(tokenize(samples[k].question), tokenize_context(samples[k].context),
                          policy, model.phrases, c.max_iterations);
  });
  std::string lines;
  json traces = json::array();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    lines += detokenize(results[k].output);
    lines.push_back('\n');
    traces.push_back({{"index", k},
                      {"question", samples[k].question},
                      {"output", detokenize(results[k].output)},
                      {"trace", trace_to_json(results[k].trace)}});
  }
  write_file(c.output_path, lines);
  if (!c.trace_path.empty()) write_json(c.trace_path, traces);
  write_manifest_next_to(c.output_path, c, "simplify");
  return {{"samples", samples.size()}, {"output_path", c.output_path}};
}

std::vector<TokenSeq> read_sentences(const std::string& path) {
  std::vector<TokenSeq> out;
  const std::string text = read_file(path);
  if (ends_with(path, ".jsonl")) {
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      const std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, path + " line " + std::to_string(line_no) + ": " + e.what());
      }
      const char* key = obj.contains("output") ? "output" : "target";
      if (!obj.contains(key) || !obj[key].is_string())
        throw Error(ErrorCode::Parse, path + " line " + std::to_string(line_no) +
                                          ": needs an \"output\" or \"target\" string");
      out.push_back(tokenize_plain(obj[key].get<std::string>()));
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    out.push_back(tokenize_plain(std::string_view(text).substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

json run_evaluate(const RunConfig& c) {
  const auto candidates = read_sentences(c.candidates_path);
  const auto references = read_sentences(c.references_path);
  const auto report = evaluate_corpus(candidates, references, c.smoothing(),
                                      static_cast<unsigned>(c.jobs));
  json j = report_to_json(report);
  if (!c.report_path.empty()) {
    write_json(c.report_path, j);
    write_manifest_next_to(c.report_path, c, "evaluate");
  }
  j["display"] = report_to_display(report);
  return j;
}

json inspect_dps(const Model& model, const std::string& question, const std::string& target,
                 const std::vector<std::string>& context, std::uint64_t seed) {
  const TokenSeq y_t = tokenize(question);
  const TokenSeq y_star = tokenize(target);
  const auto ctx = tokenize_context(context);
  const ReferencePolicy policy = model.policy();
  const auto probs = policy.edit_probs(y_t, ctx);
  const auto m = compute_matrix(y_t, y_star, probs);

  json matrix = json::array();
  json cells = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      row.push_back(m.value(i, j));
      if (i == 0 && j == 0) continue;
      json cell = {{"i", i}, {"j", j}};
      json allowed = json::array();
      for (EditOp op : kAllEditOps)
        if (m.is_allowed(i, j, op)) allowed.push_back(std::string(1, edit_code(op)));
      cell["allowed"] = allowed;
      try {
        const auto d = cell_distribution(m, i, j, probs);
        json p = json::object();
        for (EditOp op : kAllEditOps)
          p[std::string(1, edit_code(op))] = d.p[static_cast<std::size_t>(op)];
        cell["p"] = p;
      } catch (const Error&) {
        cell["p"] = nullptr;  // zero-valued cell, never visited
      }
      cells.push_back(cell);
    }
    matrix.push_back(row);
  }
  Rng rng = Rng(seed).split("sampler");
  const EditScript script = backtrack_sample(m, y_t, y_star, probs, rng);
  json edit_rows = json::array();
  for (const auto& p : probs) edit_rows.push_back(p);
  return {{"y_t", y_t},
          {"y_star", y_star},
          {"edit_probs", edit_rows},
          {"matrix", matrix},
          {"cells", cells},
          {"script", script_to_json(script)},
          {"output", apply_script(y_t, script)}};
}

json run_inspect_dps(const RunConfig& c) {
  const Model model = load_checkpoint(c.checkpoint_path);
  json dump = inspect_dps(model, c.question, c.target, c.context, c.seed);
  if (!c.output_path.empty()) write_json(c.output_path, dump);
  return dump;
}

}  // namespace rise
