#include "rise/config.hpp"

#include <cmath>
#include <set>

namespace rise {

using nlohmann::json;

namespace {

/// Calls f(key, member) for every field, in a fixed order.
template <class C, class F>
void visit_fields(C& c, F&& f) {
  f("corpus_path", c.corpus_path);
  f("token_vocab_path", c.token_vocab_path);
  f("phrase_vocab_path", c.phrase_vocab_path);
  f("checkpoint_path", c.checkpoint_path);
  f("init_checkpoint_path", c.init_checkpoint_path);
  f("output_dir", c.output_dir);
  f("output_path", c.output_path);
  f("input_path", c.input_path);
  f("trace_path", c.trace_path);
  f("candidates_path", c.candidates_path);
  f("references_path", c.references_path);
  f("report_path", c.report_path);
  f("heldout_path", c.heldout_path);
  f("gen_config_path", c.gen_config_path);
  f("seed", c.seed);
  f("jobs", c.jobs);
  f("min_freq", c.min_freq);
  f("phrase_vocab_size", c.phrase_vocab_size);
  f("max_phrase_len", c.max_phrase_len);
  f("phrase_min_count", c.phrase_min_count);
  f("gen_size", c.gen_size);
  f("gen_vocab_size", c.gen_vocab_size);
  f("gen_n_entities", c.gen_n_entities);
  f("gen_p_anaphora", c.gen_p_anaphora);
  f("gen_p_ellipsis", c.gen_p_ellipsis);
  f("heldout_size", c.heldout_size);
  f("embed_dim", c.embed_dim);
  f("hidden_dim", c.hidden_dim);
  f("learning_rate", c.learning_rate);
  f("epochs", c.epochs);
  f("max_steps", c.max_steps);
  f("grad_clip_norm", c.grad_clip_norm);
  f("max_train_iterations_per_chain", c.max_train_iterations_per_chain);
  f("sampler", c.sampler);
  f("epsilon", c.epsilon);
  f("baseline", c.baseline);
  f("optimizer", c.optimizer);
  f("adam_beta1", c.adam_beta1);
  f("adam_beta2", c.adam_beta2);
  f("adam_eps", c.adam_eps);
  f("accumulate", c.accumulate);
  f("samples_per_pair", c.samples_per_pair);
  f("max_iterations", c.max_iterations);
  f("bleu_smoothing", c.bleu_smoothing);
  f("question", c.question);
  f("target", c.target);
  f("context", c.context);
}

Error config_error(const std::string& key, const std::string& why) {
  return Error(ErrorCode::Config, "config key '" + key + "': " + why);
}

void assign(const std::string& key, const json& v, std::string& out) {
  if (v.is_null()) return;
  if (!v.is_string()) throw config_error(key, "expected a string");
  out = v.get<std::string>();
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t and uint64_t share one overload");

void assign(const std::string& key, const json& v, std::uint64_t& out) {
  if (v.is_null()) return;
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw config_error(key, "expected a non-negative integer, got " + v.dump());
  out = v.get<std::uint64_t>();
}

void assign(const std::string& key, const json& v, double& out) {
  if (v.is_null()) return;
  if (!v.is_number()) throw config_error(key, "expected a number, got " + v.dump());
  out = v.get<double>();
}

void assign(const std::string& key, const json& v, std::vector<std::string>& out) {
  if (v.is_null()) return;
  if (!v.is_array()) throw config_error(key, "expected an array of strings");
  std::vector<std::string> tmp;
  for (const auto& x : v) {
    if (!x.is_string()) throw config_error(key, "expected an array of strings");
    tmp.push_back(x.get<std::string>());
  }
  out = std::move(tmp);
}

void apply_values(RunConfig& c, const json& values, const char* origin) {
  if (values.is_null()) return;
  if (!values.is_object())
    throw Error(ErrorCode::Config, std::string(origin) + " must be a flat JSON object");
  std::set<std::string> known;
  visit_fields(c, [&](const char* key, auto&) { known.insert(key); });
  for (const auto& [key, v] : values.items())
    if (!known.count(key)) throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
  visit_fields(c, [&](const char* key, auto& member) {
    auto it = values.find(key);
    if (it != values.end()) assign(key, *it, member);
  });
}

void need(bool ok, const char* key, const std::string& why) {
  if (!ok) throw config_error(key, why);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-synthetic", "build-vocab", "train",
                                                 "simplify",      "evaluate",    "inspect-dps"};
  return names;
}

void check_ranges(const RunConfig& c) {
  need(c.jobs >= 1, "jobs", "must be at least 1");
  need(c.min_freq >= 1, "min_freq", "must be at least 1");
  need(c.phrase_vocab_size >= 1, "phrase_vocab_size", "must be at least 1");
  need(c.max_phrase_len >= 1, "max_phrase_len", "must be at least 1");
  need(c.phrase_min_count >= 1, "phrase_min_count", "must be at least 1");
  need(c.gen_n_entities >= 2, "gen_n_entities", "must be at least 2");
  need(c.gen_vocab_size >= 60, "gen_vocab_size", "must be at least 60");
  need(c.gen_p_anaphora >= 0.0 && c.gen_p_anaphora <= 1.0, "gen_p_anaphora", "must lie in [0, 1]");
  need(c.gen_p_ellipsis >= 0.0 && c.gen_p_ellipsis <= 1.0, "gen_p_ellipsis", "must lie in [0, 1]");
  need(c.heldout_size <= c.gen_size, "heldout_size", "cannot exceed gen_size");
  need(c.embed_dim >= 1, "embed_dim", "must be at least 1");
  need(c.hidden_dim >= 1, "hidden_dim", "must be at least 1");
  need(std::isfinite(c.learning_rate) && c.learning_rate >= 0.0, "learning_rate",
       "must be a finite non-negative number");
  need(c.grad_clip_norm > 0.0, "grad_clip_norm", "must be positive");
  need(c.max_train_iterations_per_chain >= 1, "max_train_iterations_per_chain", "must be at least 1");
  need(c.epsilon >= 0.0 && c.epsilon <= 1.0, "epsilon",
       "must lie in [0, 1], got " + json(c.epsilon).dump());
  need(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  need(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  need(c.adam_eps > 0.0, "adam_eps", "must be positive");
  need(c.accumulate >= 1, "accumulate", "must be at least 1");
  need(c.samples_per_pair >= 1, "samples_per_pair", "must be at least 1");
  need(c.max_iterations >= 1, "max_iterations", "must be at least 1");
  try {
    sampler_from_string(c.sampler);
  } catch (const Error& e) {
    throw config_error("sampler", e.what());
  }
  try {
    baseline_from_string(c.baseline);
  } catch (const Error& e) {
    throw config_error("baseline", e.what());
  }
  try {
    optimizer_from_string(c.optimizer);
  } catch (const Error& e) {
    throw config_error("optimizer", e.what());
  }
  try {
    smoothing_from_string(c.bleu_smoothing);
  } catch (const Error& e) {
    throw config_error("bleu_smoothing", e.what());
  }
}

void check_required(const RunConfig& c, const std::string& command) {
  auto require = [&](const std::string& value, const char* key) {
    if (value.empty())
      throw Error(ErrorCode::Config,
                  "missing required path '" + std::string(key) + "' for '" + command + "'");
  };
  if (command.empty()) return;
  if (command == "gen-synthetic") {
    require(c.output_path, "output_path");
    if (c.heldout_size > 0) require(c.heldout_path, "heldout_path");
  } else if (command == "build-vocab") {
    require(c.corpus_path, "corpus_path");
    require(c.token_vocab_path, "token_vocab_path");
    require(c.phrase_vocab_path, "phrase_vocab_path");
  } else if (command == "train") {
    require(c.corpus_path, "corpus_path");
    require(c.output_dir, "output_dir");
    if (c.init_checkpoint_path.empty()) {
      require(c.token_vocab_path, "token_vocab_path");
      require(c.phrase_vocab_path, "phrase_vocab_path");
    }
  } else if (command == "simplify") {
    require(c.checkpoint_path, "checkpoint_path");
    require(c.input_path, "input_path");
    require(c.output_path, "output_path");
  } else if (command == "evaluate") {
    require(c.candidates_path, "candidates_path");
    require(c.references_path, "references_path");
  } else if (command == "inspect-dps") {
    require(c.checkpoint_path, "checkpoint_path");
    if (c.question.empty()) throw Error(ErrorCode::Config, "inspect-dps needs 'question'");
    if (c.target.empty()) throw Error(ErrorCode::Config, "inspect-dps needs 'target'");
  } else {
    throw Error(ErrorCode::Config, "unknown command '" + command + "'");
  }
}

RunConfig resolve_config(const json& file_values, const json& overrides,
                         const std::string& command) {
  RunConfig c;
  apply_values(c, file_values, "config file");
  apply_values(c, overrides, "overrides");
  if (!c.gen_config_path.empty()) {
    // The generator's key-value file sits below the JSON config and the
    // overrides: apply it to fresh defaults, then re-apply both on top.
    const GeneratorConfig g = parse_generator_config(read_file(c.gen_config_path));
    RunConfig layered;
    layered.gen_size = g.size;
    layered.gen_vocab_size = g.vocab_size;
    layered.gen_n_entities = g.n_entities;
    layered.gen_p_anaphora = g.p_anaphora;
    layered.gen_p_ellipsis = g.p_ellipsis;
    layered.seed = g.seed;
    apply_values(layered, file_values, "config file");
    apply_values(layered, overrides, "overrides");
    c = std::move(layered);
  }
  check_ranges(c);
  check_required(c, command);
  return c;
}

RunConfig validate_config(const std::string& path, const std::string& command) {
  json values = json::object();
  if (!path.empty()) {
    try {
      values = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, "config file '" + path + "': " + e.what());
    }
  }
  return resolve_config(values, json::object(), command);
}

json RunConfig::to_json() const {
  json out = json::object();
  visit_fields(*this, [&](const char* key, const auto& member) { out[key] = member; });
  return out;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.epochs = epochs;
  t.max_steps = max_steps;
  t.grad_clip_norm = grad_clip_norm;
  t.max_train_iterations_per_chain = max_train_iterations_per_chain;
  t.sampler = sampler_from_string(sampler);
  t.epsilon = epsilon;
  t.seed = derive_seed(seed, "trainer");
  t.baseline = baseline_from_string(baseline);
  t.optimizer = optimizer_from_string(optimizer);
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_eps = adam_eps;
  t.accumulate = accumulate;
  t.samples_per_pair = samples_per_pair;
  return t;
}

GeneratorConfig RunConfig::generator_config() const {
  GeneratorConfig g;
  g.size = gen_size;
  g.vocab_size = gen_vocab_size;
  g.n_entities = gen_n_entities;
  g.p_anaphora = gen_p_anaphora;
  g.p_ellipsis = gen_p_ellipsis;
  g.seed = seed;
  return g;
}

}  // namespace rise
