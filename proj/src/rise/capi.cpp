#include "rise/rise.h"

#include <cstdlib>
#include <cstring>
#include <new>

#include "rise/commands.hpp"

using nlohmann::json;

struct rise_model {
  rise::Model model;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
rise_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return RISE_OK;
  } catch (const rise::Error& e) {
    g_last_error = e.what();
    return static_cast<rise_status>(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return RISE_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RISE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RISE_ERR_INTERNAL;
  }
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return nullptr;
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw rise::Error(rise::ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

std::vector<std::string> parse_context(const char* context_json) {
  const json j = parse_json(context_json, "context");
  std::vector<std::string> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw rise::Error(rise::ErrorCode::InvalidArgument, "context must be a JSON array of strings");
  for (const auto& u : j) {
    if (!u.is_string()) throw rise::Error(rise::ErrorCode::InvalidArgument, "context must be a JSON array of strings");
    out.push_back(u.get<std::string>());
  }
  return out;
}

void require(const void* p, const char* name) {
  if (!p) throw rise::Error(rise::ErrorCode::InvalidArgument, std::string(name) + " is NULL");
}

rise_status run_command(const char* config_json, char** summary, const char* command,
                        json (*fn)(const rise::RunConfig&)) {
  return guarded([&] {
    require(config_json, "config_json");
    const rise::RunConfig c = rise::resolve_config(parse_json(config_json, "config"), nullptr, command);
    const json out = fn(c);
    if (summary) *summary = dup(out.dump(2));
  });
}

}  // namespace

extern "C" {

const char* rise_version(void) { return rise::kVersion; }

const char* rise_last_error(void) { return g_last_error.c_str(); }

void rise_string_free(char* s) { std::free(s); }

rise_status rise_config_resolve(const char* config_path, const char* overrides_json,
                                const char* command, char** resolved_json) {
  return guarded([&] {
    require(resolved_json, "resolved_json");
    json file_values = json::object();
    if (config_path && *config_path) {
      const std::string text = rise::read_file(config_path);
      try {
        file_values = json::parse(text);
      } catch (const json::parse_error& e) {
        throw rise::Error(rise::ErrorCode::Parse, std::string("config file '") + config_path + "': " + e.what());
      }
    }
    const json overrides = parse_json(overrides_json, "overrides");
    const rise::RunConfig c =
        rise::resolve_config(file_values, overrides, command ? command : "");
    *resolved_json = dup(c.to_json().dump(2));
  });
}

rise_status rise_cmd_gen_synthetic(const char* c, char** s) {
  return run_command(c, s, "gen-synthetic", rise::run_gen_synthetic);
}
rise_status rise_cmd_build_vocab(const char* c, char** s) {
  return run_command(c, s, "build-vocab", rise::run_build_vocab);
}
rise_status rise_cmd_train(const char* c, char** s) { return run_command(c, s, "train", rise::run_train); }
rise_status rise_cmd_simplify(const char* c, char** s) {
  return run_command(c, s, "simplify", rise::run_simplify);
}
rise_status rise_cmd_evaluate(const char* c, char** s) {
  return run_command(c, s, "evaluate", rise::run_evaluate);
}
rise_status rise_cmd_inspect_dps(const char* c, char** s) {
  return run_command(c, s, "inspect-dps", rise::run_inspect_dps);
}

rise_status rise_model_load(const char* checkpoint_path, rise_model** model) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(model, "model");
    *model = nullptr;
    auto m = std::make_unique<rise_model>(rise_model{rise::load_checkpoint(checkpoint_path)});
    *model = m.release();
  });
}

void rise_model_free(rise_model* model) { delete model; }

rise_status rise_model_simplify(const rise_model* model, const char* question,
                                const char* context_json, unsigned max_iterations, char** output,
                                char** trace_json) {
  return guarded([&] {
    require(model, "model");
    require(question, "question");
    require(output, "output");
    if (max_iterations == 0)
      throw rise::Error(rise::ErrorCode::InvalidArgument, "max_iterations must be at least 1");
    std::vector<rise::TokenSeq> ctx;
    for (const auto& u : parse_context(context_json)) ctx.push_back(rise::tokenize_plain(u));
    const auto r = rise::simplify(rise::tokenize(question), ctx, model->model.policy(),
                                  model->model.phrases, max_iterations);
    std::string text = rise::detokenize(r.output);
    char* trace = trace_json ? dup(rise::trace_to_json(r.trace).dump(2)) : nullptr;
    *output = dup(text);
    if (trace_json) *trace_json = trace;
  });
}

rise_status rise_model_inspect_dps(const rise_model* model, const char* question,
                                   const char* target, const char* context_json,
                                   unsigned long long seed, char** dump_json) {
  return guarded([&] {
    require(model, "model");
    require(question, "question");
    require(target, "target");
    require(dump_json, "dump_json");
    const json d = rise::inspect_dps(model->model, question, target, parse_context(context_json), seed);
    *dump_json = dup(d.dump(2));
  });
}

}  // extern "C"
