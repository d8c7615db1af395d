// Command-line front end over the C API.
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rise/rise.h"

using nlohmann::json;

namespace {

struct Flag {
  const char* name;  // without leading dashes
  const char* key;   // config key
  const char* help;
};

// Short flags per subcommand. Any config key can also be set with --set.
const std::map<std::string, std::vector<Flag>>& command_flags() {
  static const std::map<std::string, std::vector<Flag>> flags = {
      {"gen-synthetic",
       {{"output", "output_path", "corpus JSONL to write"},
        {"heldout", "heldout_path", "held-out JSONL to write"},
        {"heldout-size", "heldout_size", "number of pairs held out"},
        {"size", "gen_size", "number of pairs"},
        {"gen-config", "gen_config_path", "generator key=value file"},
        {"seed", "seed", "random seed"}}},
      {"build-vocab",
       {{"corpus", "corpus_path", "training corpus JSONL"},
        {"tokens", "token_vocab_path", "token vocabulary to write"},
        {"phrases", "phrase_vocab_path", "phrase vocabulary to write"},
        {"min-freq", "min_freq", "minimum token frequency"},
        {"phrase-vocab-size", "phrase_vocab_size", "phrase vocabulary size"},
        {"max-phrase-len", "max_phrase_len", "longest phrase in tokens"}}},
      {"train",
       {{"corpus", "corpus_path", "training corpus JSONL"},
        {"tokens", "token_vocab_path", "token vocabulary"},
        {"phrases", "phrase_vocab_path", "phrase vocabulary"},
        {"init", "init_checkpoint_path", "start from this checkpoint"},
        {"out", "output_dir", "directory for checkpoints and logs"},
        {"lr", "learning_rate", "learning rate"},
        {"epochs", "epochs", "passes over the corpus"},
        {"max-steps", "max_steps", "stop after this many updates (0: no limit)"},
        {"sampler", "sampler", "dps | epsilon_greedy"},
        {"epsilon", "epsilon", "exploration rate for epsilon_greedy"},
        {"baseline", "baseline", "none | mean_reward"},
        {"optimizer", "optimizer", "sgd | adam"},
        {"seed", "seed", "random seed"}}},
      {"simplify",
       {{"checkpoint", "checkpoint_path", "trained checkpoint"},
        {"input", "input_path", "questions JSONL"},
        {"output", "output_path", "rewritten questions, one per line"},
        {"trace", "trace_path", "per-iteration trace JSON"},
        {"max-iters", "max_iterations", "maximum editing iterations"},
        {"jobs", "jobs", "worker threads"}}},
      {"evaluate",
       {{"candidates", "candidates_path", "system outputs (text or JSONL)"},
        {"references", "references_path", "references (text or JSONL)"},
        {"report", "report_path", "metrics JSON to write"},
        {"smoothing", "bleu_smoothing", "none | add_one"},
        {"jobs", "jobs", "worker threads"}}},
      {"inspect-dps",
       {{"checkpoint", "checkpoint_path", "trained checkpoint"},
        {"question", "question", "question text"},
        {"target", "target", "target text"},
        {"output", "output_path", "dump JSON to write"},
        {"seed", "seed", "random seed"}}},
  };
  return flags;
}

using CommandFn = rise_status (*)(const char*, char**);

const std::map<std::string, CommandFn>& command_fns() {
  static const std::map<std::string, CommandFn> fns = {
      {"gen-synthetic", rise_cmd_gen_synthetic}, {"build-vocab", rise_cmd_build_vocab},
      {"train", rise_cmd_train},                 {"simplify", rise_cmd_simplify},
      {"evaluate", rise_cmd_evaluate},           {"inspect-dps", rise_cmd_inspect_dps},
  };
  return fns;
}

json defaults() {
  char* out = nullptr;
  if (rise_config_resolve(nullptr, nullptr, nullptr, &out) != RISE_OK) return json::object();
  json j = json::parse(out);
  rise_string_free(out);
  return j;
}

// Convert a flag value to the JSON type of the key's default.
json typed_value(const json& defaults, const std::string& key, const std::string& text) {
  auto it = defaults.find(key);
  if (it == defaults.end()) throw CLI::ValidationError(key, "unknown config key");
  if (it->is_string()) return text;
  if (it->is_array()) {
    json arr = json::array();
    arr.push_back(text);
    return arr;
  }
  try {
    json v = json::parse(text);
    if (!v.is_number()) throw CLI::ValidationError(key, "expected a number, got '" + text + "'");
    return v;
  } catch (const json::parse_error&) {
    throw CLI::ValidationError(key, "expected a number, got '" + text + "'");
  }
}

int fail(rise_status s) {
  std::cerr << "error: " << rise_last_error() << "\n";
  return s == RISE_OK ? 0 : 1;
}

struct Invocation {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  std::vector<std::string> context;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rewrite self-contained questions into conversational ones."};
  app.require_subcommand(1);
  app.set_version_flag("--version", rise_version());

  const json base = defaults();
  std::map<std::string, Invocation> inv;
  std::map<std::string, CLI::App*> subs;

  for (const auto& [name, flags] : command_flags()) {
    CLI::App* sub = app.add_subcommand(name);
    Invocation& in = inv[name];
    sub->add_option("--config", in.config_path, "JSON config file");
    sub->add_option("--set", in.sets, "override a config key (key=value)");
    for (const auto& f : flags)
      sub->add_option(std::string("--") + f.name, in.flag_values[f.key], f.help);
    if (name == "inspect-dps") sub->add_option("--context", in.context, "context utterance (repeatable)");
    subs[name] = sub;
  }

  std::string validate_path, validate_command;
  bool print_resolved = false;
  CLI::App* validate = app.add_subcommand("validate-config", "check a config file");
  validate->add_option("config", validate_path, "JSON config file")->required();
  validate->add_option("--command", validate_command, "also check the paths this command needs");
  validate->add_flag("--print", print_resolved, "print the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (validate->parsed()) {
    char* resolved = nullptr;
    const rise_status s = rise_config_resolve(validate_path.c_str(), nullptr,
                                              validate_command.c_str(), &resolved);
    if (s != RISE_OK) return fail(s);
    if (print_resolved) std::cout << resolved << "\n";
    else std::cout << "ok\n";
    rise_string_free(resolved);
    return 0;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    Invocation& in = inv[name];
    json overrides = json::object();
    try {
      for (const auto& f : command_flags().at(name))
        if (sub->count(std::string("--") + f.name))
          overrides[f.key] = typed_value(base, f.key, in.flag_values[f.key]);
      for (const auto& kv : in.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
          throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = typed_value(base, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!in.context.empty()) overrides["context"] = in.context;
    } catch (const CLI::Error& e) {
      std::cerr << "error: " << e.what() << "\n\n" << sub->help();
      return 2;
    }

    char* resolved = nullptr;
    rise_status s = rise_config_resolve(in.config_path.empty() ? nullptr : in.config_path.c_str(),
                                        overrides.dump().c_str(), name.c_str(), &resolved);
    if (s != RISE_OK) return fail(s);
    char* summary = nullptr;
    s = command_fns().at(name)(resolved, &summary);
    rise_string_free(resolved);
    if (s != RISE_OK) return fail(s);
    std::cout << summary << "\n";
    rise_string_free(summary);
    return 0;
  }
  return 2;
}
