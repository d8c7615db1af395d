#include "rise/policy.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace rise {

using nlohmann::json;

// --- parameters -------------------------------------------------------------

std::vector<PolicyParams::Block> PolicyParams::layout() const {
  const auto& c = config;
  const std::size_t f = c.feature_dim(), h = c.hidden_dim;
  return {
      {"embedding", c.vocab_size, c.embed_dim},
      {"edit_w1", h, f},
      {"edit_b1", h, 1},
      {"edit_w2", kNumEditOps, h},
      {"edit_b2", kNumEditOps, 1},
      {"phrase_w1", h, f},
      {"phrase_b1", h, 1},
      {"phrase_w2", c.phrase_vocab_size, h},
      {"phrase_b2", c.phrase_vocab_size, 1},
  };
}

std::vector<std::vector<double>*> PolicyParams::blocks() {
  return {&embedding, &edit_w1, &edit_b1, &edit_w2, &edit_b2,
          &phrase_w1, &phrase_b1, &phrase_w2, &phrase_b2};
}

std::vector<const std::vector<double>*> PolicyParams::blocks() const {
  return {&embedding, &edit_w1, &edit_b1, &edit_w2, &edit_b2,
          &phrase_w1, &phrase_b1, &phrase_w2, &phrase_b2};
}

PolicyParams PolicyParams::zeros(const PolicyConfig& config) {
  if (config.embed_dim == 0 || config.hidden_dim == 0 || config.vocab_size == 0 ||
      config.phrase_vocab_size == 0)
    throw Error(ErrorCode::InvalidArgument, "policy dimensions must be positive");
  PolicyParams p;
  p.config = config;
  auto lay = p.layout();
  auto blk = p.blocks();
  for (std::size_t k = 0; k < lay.size(); ++k) blk[k]->assign(lay[k].rows * lay[k].cols, 0.0);
  return p;
}

PolicyParams PolicyParams::random(const PolicyConfig& config, Rng& rng) {
  PolicyParams p = zeros(config);
  auto fill = [&](std::vector<double>& v, double limit) {
    for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * limit;
  };
  const double f = static_cast<double>(config.feature_dim());
  const double h = static_cast<double>(config.hidden_dim);
  fill(p.embedding, 0.5);
  fill(p.edit_w1, std::sqrt(6.0 / (f + h)));
  fill(p.edit_w2, 0.1 * std::sqrt(6.0 / (h + kNumEditOps)));
  fill(p.phrase_w1, std::sqrt(6.0 / (f + h)));
  fill(p.phrase_w2, 0.1 * std::sqrt(6.0 / (h + static_cast<double>(config.phrase_vocab_size))));
  // Start close to the copy policy: K gets about 70% of the mass per token.
  p.edit_b2[static_cast<std::size_t>(EditOp::Keep)] = kKeepInitBias;
  return p;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* b : blocks()) n += b->size();
  return n;
}

double PolicyParams::norm() const {
  double s = 0.0;
  for (const auto* b : blocks())
    for (double x : *b) s += x * x;
  return std::sqrt(s);
}

bool PolicyParams::all_finite() const {
  for (const auto* b : blocks())
    for (double x : *b)
      if (!std::isfinite(x)) return false;
  return true;
}

void PolicyParams::add_scaled(const PolicyParams& other, double s) {
  if (!(other.config == config))
    throw Error(ErrorCode::Shape, "parameter shapes differ");
  auto mine = blocks();
  auto theirs = other.blocks();
  for (std::size_t k = 0; k < mine.size(); ++k)
    for (std::size_t i = 0; i < mine[k]->size(); ++i) (*mine[k])[i] += s * (*theirs[k])[i];
}

void PolicyParams::scale(double s) {
  for (auto* b : blocks())
    for (auto& x : *b) x *= s;
}

// --- forward / backward -----------------------------------------------------

namespace {

struct MlpView {
  const double* w1;
  const double* b1;
  const double* w2;
  const double* b2;
  std::size_t in, hidden, out;
};

struct MlpGrad {
  double* w1;
  double* b1;
  double* w2;
  double* b2;
};

struct MlpCache {
  std::vector<double> hidden;  // tanh activations
  std::vector<double> probs;
  std::vector<double> log_probs;
};

void softmax(MlpCache& c) {
  auto& z = c.log_probs;
  const double hi = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) s += std::exp(x - hi);
  const double lse = hi + std::log(s);
  c.probs.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] -= lse;
    c.probs[k] = std::exp(z[k]);
  }
}

MlpCache mlp_forward(const MlpView& m, const std::vector<double>& feature) {
  MlpCache c;
  c.hidden.resize(m.hidden);
  for (std::size_t r = 0; r < m.hidden; ++r) {
    double a = m.b1[r];
    const double* row = m.w1 + r * m.in;
    for (std::size_t k = 0; k < m.in; ++k) a += row[k] * feature[k];
    c.hidden[r] = std::tanh(a);
  }
  c.log_probs.resize(m.out);
  for (std::size_t o = 0; o < m.out; ++o) {
    double z = m.b2[o];
    const double* row = m.w2 + o * m.hidden;
    for (std::size_t r = 0; r < m.hidden; ++r) z += row[r] * c.hidden[r];
    c.log_probs[o] = z;
  }
  softmax(c);
  return c;
}

/// Accumulates d log p[target] / d(params) into g and returns d/d(feature).
std::vector<double> mlp_backward(const MlpView& m, const MlpGrad& g,
                                 const std::vector<double>& feature, const MlpCache& c,
                                 std::size_t target) {
  std::vector<double> dz(m.out);
  for (std::size_t o = 0; o < m.out; ++o) dz[o] = (o == target ? 1.0 : 0.0) - c.probs[o];
  std::vector<double> dh(m.hidden, 0.0);
  for (std::size_t o = 0; o < m.out; ++o) {
    g.b2[o] += dz[o];
    double* grow = g.w2 + o * m.hidden;
    const double* wrow = m.w2 + o * m.hidden;
    for (std::size_t r = 0; r < m.hidden; ++r) {
      grow[r] += dz[o] * c.hidden[r];
      dh[r] += wrow[r] * dz[o];
    }
  }
  std::vector<double> df(m.in, 0.0);
  for (std::size_t r = 0; r < m.hidden; ++r) {
    const double da = dh[r] * (1.0 - c.hidden[r] * c.hidden[r]);
    g.b1[r] += da;
    double* grow = g.w1 + r * m.in;
    const double* wrow = m.w1 + r * m.in;
    for (std::size_t k = 0; k < m.in; ++k) {
      grow[k] += da * feature[k];
      df[k] += wrow[k] * da;
    }
  }
  return df;
}

MlpView edit_head(const PolicyParams& p) {
  return {p.edit_w1.data(), p.edit_b1.data(), p.edit_w2.data(), p.edit_b2.data(),
          p.config.feature_dim(), p.config.hidden_dim, kNumEditOps};
}

MlpView phrase_head(const PolicyParams& p) {
  return {p.phrase_w1.data(), p.phrase_b1.data(), p.phrase_w2.data(), p.phrase_b2.data(),
          p.config.feature_dim(), p.config.hidden_dim, p.config.phrase_vocab_size};
}

MlpGrad edit_grad(PolicyGradient& g) {
  return {g.edit_w1.data(), g.edit_b1.data(), g.edit_w2.data(), g.edit_b2.data()};
}

MlpGrad phrase_grad(PolicyGradient& g) {
  return {g.phrase_w1.data(), g.phrase_b1.data(), g.phrase_w2.data(), g.phrase_b2.data()};
}

/// Feature assembly. Each slot is a weighted sum of embedding rows, which
/// makes the backward scatter uniform across heads.
struct Slot {
  std::vector<std::pair<std::int32_t, double>> terms;  // (token id, weight)
};

std::vector<double> assemble(const PolicyParams& p, const std::array<Slot, 4>& slots) {
  const std::size_t d = p.config.embed_dim;
  std::vector<double> f(4 * d, 0.0);
  for (std::size_t s = 0; s < 4; ++s)
    for (auto [id, w] : slots[s].terms) {
      const double* e = p.embedding.data() + static_cast<std::size_t>(id) * d;
      for (std::size_t k = 0; k < d; ++k) f[s * d + k] += w * e[k];
    }
  return f;
}

void scatter(PolicyGradient& g, const std::array<Slot, 4>& slots, const std::vector<double>& df) {
  const std::size_t d = g.config.embed_dim;
  for (std::size_t s = 0; s < 4; ++s)
    for (auto [id, w] : slots[s].terms) {
      double* e = g.embedding.data() + static_cast<std::size_t>(id) * d;
      for (std::size_t k = 0; k < d; ++k) e[k] += w * df[s * d + k];
    }
}

Slot context_slot(const std::vector<std::int32_t>& ctx) {
  Slot s;
  if (ctx.empty()) return s;
  const double w = 1.0 / static_cast<double>(ctx.size());
  for (auto id : ctx) s.terms.emplace_back(id, w);
  return s;
}

Slot single(const std::vector<std::int32_t>& q, std::ptrdiff_t pos) {
  Slot s;
  if (pos >= 0 && static_cast<std::size_t>(pos) < q.size())
    s.terms.emplace_back(q[static_cast<std::size_t>(pos)], 1.0);
  return s;
}

std::array<Slot, 4> edit_slots(const std::vector<std::int32_t>& q, const Slot& ctx,
                               std::size_t i) {
  const auto pos = static_cast<std::ptrdiff_t>(i);
  return {single(q, pos), ctx, single(q, pos - 1), single(q, pos + 1)};
}

std::array<Slot, 4> span_slots(const std::vector<std::int32_t>& q, const Slot& ctx,
                               const Span& span) {
  Slot mean;
  const double w = 1.0 / static_cast<double>(span.end - span.begin);
  for (std::size_t k = span.begin; k < span.end; ++k) mean.terms.emplace_back(q[k], w);
  return {mean, ctx, single(q, static_cast<std::ptrdiff_t>(span.begin) - 1),
          single(q, static_cast<std::ptrdiff_t>(span.end))};
}

}  // namespace

ReferencePolicy::ReferencePolicy(const PolicyParams& params, const Vocab& vocab)
    : params_(params), vocab_(vocab) {
  if (vocab.size() != params.config.vocab_size)
    throw Error(ErrorCode::Shape, "vocabulary has " + std::to_string(vocab.size()) +
                                      " entries but the embedding table has " +
                                      std::to_string(params.config.vocab_size));
}

ReferencePolicy::Encoded ReferencePolicy::encode(const TokenSeq& question,
                                                 const std::vector<TokenSeq>& context) const {
  Encoded e;
  e.question = vocab_.encode(question);
  for (const auto& utt : context)
    for (const auto& tok : utt) {
      const auto id = vocab_.id(tok);
      if (id == Vocab::kPadId || id == Vocab::kSepId) continue;
      e.context.push_back(id);
    }
  return e;
}

EditDistribution ReferencePolicy::edit_probs(const TokenSeq& question,
                                             const std::vector<TokenSeq>& context) const {
  const auto enc = encode(question, context);
  const Slot ctx = context_slot(enc.context);
  const auto head = edit_head(params_);
  EditDistribution out(question.size());
  for (std::size_t i = 0; i < question.size(); ++i) {
    const auto cache = mlp_forward(head, assemble(params_, edit_slots(enc.question, ctx, i)));
    std::copy(cache.probs.begin(), cache.probs.end(), out[i].begin());
  }
  return out;
}

PhraseDistribution ReferencePolicy::phrase_probs(const TokenSeq& question,
                                                 const std::vector<EditOp>& edits,
                                                 const std::vector<TokenSeq>& context) const {
  const auto enc = encode(question, context);
  const Slot ctx = context_slot(enc.context);
  const auto head = phrase_head(params_);
  PhraseDistribution out;
  for (const auto& span : extract_spans(question, edits))
    out.push_back(mlp_forward(head, assemble(params_, span_slots(enc.question, ctx, span))).probs);
  return out;
}

std::pair<PolicyGradient, double> ReferencePolicy::grad_log_prob(
    const TokenSeq& question, const std::vector<TokenSeq>& context, const EditScript& script,
    const std::vector<std::int32_t>& phrase_ids) const {
  validate_script(question, script);
  const auto spans = extract_spans(question, script.edits);
  if (phrase_ids.size() != spans.size())
    throw Error(ErrorCode::Shape, "grad_log_prob: " + std::to_string(phrase_ids.size()) +
                                      " phrase ids for " + std::to_string(spans.size()) +
                                      " phrase slots");
  const auto enc = encode(question, context);
  const Slot ctx = context_slot(enc.context);
  PolicyGradient g = PolicyParams::zeros(params_.config);
  double logp = 0.0;

  const auto ehead = edit_head(params_);
  const auto egrad = edit_grad(g);
  for (std::size_t i = 0; i < question.size(); ++i) {
    const auto slots = edit_slots(enc.question, ctx, i);
    const auto feature = assemble(params_, slots);
    const auto cache = mlp_forward(ehead, feature);
    const auto target = static_cast<std::size_t>(script.edits[i]);
    logp += cache.log_probs[target];
    scatter(g, slots, mlp_backward(ehead, egrad, feature, cache, target));
  }

  const auto phead = phrase_head(params_);
  const auto pgrad = phrase_grad(g);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto id = phrase_ids[s];
    if (id == PhraseVocab::kOovId) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= params_.config.phrase_vocab_size)
      throw Error(ErrorCode::Shape, "phrase id " + std::to_string(id) + " is out of range");
    const auto slots = span_slots(enc.question, ctx, spans[s]);
    const auto feature = assemble(params_, slots);
    const auto cache = mlp_forward(phead, feature);
    logp += cache.log_probs[static_cast<std::size_t>(id)];
    scatter(g, slots, mlp_backward(phead, pgrad, feature, cache, static_cast<std::size_t>(id)));
  }
  return {std::move(g), logp};
}

double ReferencePolicy::log_prob(const TokenSeq& question, const std::vector<TokenSeq>& context,
                                 const EditScript& script,
                                 const std::vector<std::int32_t>& phrase_ids) const {
  return grad_log_prob(question, context, script, phrase_ids).second;
}

// --- model bundle and checkpoints ---------------------------------------------

Model Model::create(Vocab vocab, PhraseVocab phrases, std::size_t embed_dim,
                    std::size_t hidden_dim, Rng& rng) {
  PolicyConfig cfg{embed_dim, hidden_dim, vocab.size(), phrases.size()};
  PolicyParams params = PolicyParams::random(cfg, rng);
  return Model{std::move(vocab), std::move(phrases), std::move(params)};
}

std::string checkpoint_to_string(const Model& model) {
  const auto& p = model.params;
  json doc;
  doc["format"] = "rise-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["config"] = {{"embed_dim", p.config.embed_dim},
                   {"hidden_dim", p.config.hidden_dim},
                   {"vocab_size", p.config.vocab_size},
                   {"phrase_vocab_size", p.config.phrase_vocab_size}};
  doc["vocab"] = model.vocab.tokens();
  doc["phrase_vocab"] = model.phrases.phrases();
  json blocks = json::array();
  const auto lay = p.layout();
  const auto data = p.blocks();
  for (std::size_t k = 0; k < lay.size(); ++k)
    blocks.push_back({{"name", lay[k].name},
                      {"shape", {lay[k].rows, lay[k].cols}},
                      {"data", *data[k]}});
  doc["blocks"] = std::move(blocks);
  return doc.dump() + "\n";
}

Model checkpoint_from_string(const std::string& text, const std::optional<PolicyConfig>& expected) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("corrupt checkpoint: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "rise-checkpoint")
      throw Error(ErrorCode::Parse, "corrupt checkpoint: not a rise checkpoint document");
    if (!doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != kCheckpointVersion)
      throw Error(ErrorCode::Version, "unsupported checkpoint version " +
                                          (doc.contains("version") ? doc["version"].dump()
                                                                   : std::string("<missing>")) +
                                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    const auto& c = doc.at("config");
    PolicyConfig cfg{c.at("embed_dim").get<std::size_t>(), c.at("hidden_dim").get<std::size_t>(),
                     c.at("vocab_size").get<std::size_t>(),
                     c.at("phrase_vocab_size").get<std::size_t>()};
    if (expected) {
      auto mismatch = [&](const char* key, std::size_t want, std::size_t got) {
        if (want != got)
          throw Error(ErrorCode::Shape, std::string("checkpoint ") + key + " is " +
                                            std::to_string(got) + ", configuration expects " +
                                            std::to_string(want));
      };
      mismatch("embed_dim", expected->embed_dim, cfg.embed_dim);
      mismatch("hidden_dim", expected->hidden_dim, cfg.hidden_dim);
      if (expected->vocab_size) mismatch("vocab_size", expected->vocab_size, cfg.vocab_size);
      if (expected->phrase_vocab_size)
        mismatch("phrase_vocab_size", expected->phrase_vocab_size, cfg.phrase_vocab_size);
    }

    auto tokens = doc.at("vocab").get<std::vector<std::string>>();
    Vocab vocab = [&] {
      if (tokens.size() < static_cast<std::size_t>(Vocab::kNumReserved))
        throw Error(ErrorCode::Parse, "corrupt checkpoint: vocabulary lacks reserved entries");
      Vocab v(std::vector<std::string>(tokens.begin() + Vocab::kNumReserved, tokens.end()));
      if (v.tokens() != tokens)
        throw Error(ErrorCode::Parse, "corrupt checkpoint: reserved vocabulary entries differ");
      return v;
    }();
    auto phrase_list = doc.at("phrase_vocab").get<std::vector<TokenSeq>>();
    if (phrase_list.empty())
      throw Error(ErrorCode::Parse, "corrupt checkpoint: phrase vocabulary is empty");
    PhraseVocab phrases(std::vector<TokenSeq>(phrase_list.begin() + 1, phrase_list.end()));
    if (vocab.size() != cfg.vocab_size || phrases.size() != cfg.phrase_vocab_size)
      throw Error(ErrorCode::Shape, "checkpoint vocabularies disagree with its config");

    PolicyParams p = PolicyParams::zeros(cfg);
    const auto lay = p.layout();
    auto dst = p.blocks();
    const auto& blocks = doc.at("blocks");
    if (!blocks.is_array() || blocks.size() != lay.size())
      throw Error(ErrorCode::Shape, "checkpoint holds " + std::to_string(blocks.size()) +
                                        " parameter blocks, expected " + std::to_string(lay.size()));
    for (std::size_t k = 0; k < lay.size(); ++k) {
      const auto& b = blocks[k];
      if (b.at("name").get<std::string>() != lay[k].name)
        throw Error(ErrorCode::Shape, "checkpoint block " + std::to_string(k) + " is '" +
                                          b.at("name").get<std::string>() + "', expected '" +
                                          lay[k].name + "'");
      const auto shape = b.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != lay[k].rows || shape[1] != lay[k].cols)
        throw Error(ErrorCode::Shape, std::string("checkpoint block '") + lay[k].name +
                                          "' has shape " + b.at("shape").dump());
      auto values = b.at("data").get<std::vector<double>>();
      if (values.size() != lay[k].rows * lay[k].cols)
        throw Error(ErrorCode::Shape, std::string("checkpoint block '") + lay[k].name +
                                          "' has the wrong number of values");
      *dst[k] = std::move(values);
    }
    if (!p.all_finite())
      throw Error(ErrorCode::Numeric, "checkpoint contains non-finite parameters");
    return Model{std::move(vocab), std::move(phrases), std::move(p)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("corrupt checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::string& path) {
  write_file(path, checkpoint_to_string(model));
}

Model load_checkpoint(const std::string& path, const std::optional<PolicyConfig>& expected) {
  return checkpoint_from_string(read_file(path), expected);
}

}  // namespace rise
