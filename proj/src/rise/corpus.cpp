#include "rise/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include <json.hpp>

#include "rise/editcore.hpp"

namespace rise {

using nlohmann::json;

// --- tokenization -----------------------------------------------------------

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

TokenSeq tokenize_plain(std::string_view text) {
  TokenSeq out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  out.emplace_back(kBos);
  TokenSeq body = tokenize_plain(text);
  out.insert(out.end(), std::make_move_iterator(body.begin()),
             std::make_move_iterator(body.end()));
  return out;
}

TokenSeq strip_sentinel(const TokenSeq& tokens) {
  if (!tokens.empty() && tokens.front() == kBos)
    return TokenSeq(tokens.begin() + 1, tokens.end());
  return tokens;
}

std::string detokenize(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t == kBos) continue;
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// --- corpus I/O -------------------------------------------------------------

std::vector<Sample> parse_corpus(std::string_view jsonl) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = trim(jsonl.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) -> Error {
      return Error(ErrorCode::Parse, "corpus line " + std::to_string(line_no) + ": " + why);
    };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!obj.is_object()) throw fail("expected a JSON object");

    Sample s;
    auto q = obj.find("question");
    if (q == obj.end()) throw fail("missing \"question\" field");
    if (!q->is_string()) throw fail("\"question\" must be a string");
    s.question = q->get<std::string>();
    if (trim(s.question).empty()) throw fail("\"question\" is empty");

    if (auto c = obj.find("context"); c != obj.end() && !c->is_null()) {
      if (!c->is_array()) throw fail("\"context\" must be an array of strings");
      for (const auto& u : *c) {
        if (!u.is_string()) throw fail("\"context\" must be an array of strings");
        s.context.push_back(u.get<std::string>());
      }
    }
    if (auto t = obj.find("target"); t != obj.end() && !t->is_null()) {
      if (!t->is_string()) throw fail("\"target\" must be a string");
      s.target = t->get<std::string>();
      if (trim(*s.target).empty()) throw fail("\"target\" is empty");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_corpus(const std::string& path) {
  return parse_corpus(read_file(path));
}

std::string corpus_to_jsonl(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    json obj;
    obj["context"] = s.context;
    obj["question"] = s.question;
    if (s.target) obj["target"] = *s.target;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<Sample>& samples) {
  write_file(path, corpus_to_jsonl(samples));
}

// --- vocabularies -----------------------------------------------------------

Vocab::Vocab() {
  add(std::string(kPad));
  add(std::string(kBos));
  add(std::string(kUnk));
  add(std::string(kSep));
}

Vocab::Vocab(const std::vector<std::string>& tokens) : Vocab() {
  for (const auto& t : tokens) {
    if (t.empty()) throw Error(ErrorCode::InvalidArgument, "empty token in vocabulary");
    if (index_.count(t))
      throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary token '" + t + "'");
    add(t);
  }
}

void Vocab::add(const std::string& token) {
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(token);
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw Error(ErrorCode::InvalidArgument, "token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::vector<std::int32_t> Vocab::encode(const TokenSeq& seq) const {
  std::vector<std::int32_t> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq) ids.push_back(id(t));
  return ids;
}

std::string Vocab::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    out += std::to_string(i) + "\t" + tokens_[i] + "\n";
  return out;
}

namespace {

// Splits "<id>\t<rest>" lines and checks ids are 0..n-1 in order.
std::vector<std::string> parse_id_lines(std::string_view text, const char* what) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error(ErrorCode::Parse, std::string(what) + " line " + std::to_string(line_no) +
                                        ": expected '<id>\\t<entry>'");
    std::size_t id = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, id);
    if (ec != std::errc() || p != line.data() + tab || id != out.size())
      throw Error(ErrorCode::Parse, std::string(what) + " line " + std::to_string(line_no) +
                                        ": ids must be consecutive from 0");
    out.emplace_back(line.substr(tab + 1));
  }
  return out;
}

std::string join(const TokenSeq& seq) {
  std::string out;
  for (const auto& t : seq) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

TokenSeq split_spaces(std::string_view s) {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(' ', pos);
    if (end == std::string_view::npos) end = s.size();
    if (end > pos) out.emplace_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

}  // namespace

Vocab Vocab::from_text(std::string_view text) {
  auto entries = parse_id_lines(text, "vocab");
  const std::string reserved[] = {std::string(kPad), std::string(kBos), std::string(kUnk),
                                  std::string(kSep)};
  if (entries.size() < kNumReserved)
    throw Error(ErrorCode::Parse, "vocab is missing reserved entries");
  for (int i = 0; i < kNumReserved; ++i)
    if (entries[static_cast<std::size_t>(i)] != reserved[i])
      throw Error(ErrorCode::Parse, "vocab reserved entry " + std::to_string(i) + " must be " +
                                        reserved[i]);
  return Vocab(std::vector<std::string>(entries.begin() + kNumReserved, entries.end()));
}

PhraseVocab::PhraseVocab() {
  phrases_.push_back(TokenSeq{std::string(kOovPhrase)});
}

PhraseVocab::PhraseVocab(const std::vector<TokenSeq>& phrases) : PhraseVocab() {
  for (const auto& p : phrases) {
    if (p.empty()) throw Error(ErrorCode::InvalidArgument, "empty phrase in phrase vocabulary");
    if (p == phrases_.front())
      throw Error(ErrorCode::InvalidArgument, "phrase vocabulary may not list the OOV sentinel");
    if (!index_.emplace(p, static_cast<std::int32_t>(phrases_.size())).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate phrase '" + join(p) + "'");
    phrases_.push_back(p);
  }
}

std::int32_t PhraseVocab::id(const TokenSeq& phrase) const {
  auto it = index_.find(phrase);
  return it == index_.end() ? kOovId : it->second;
}

const TokenSeq& PhraseVocab::phrase(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= phrases_.size())
    throw Error(ErrorCode::InvalidArgument, "phrase id out of range: " + std::to_string(id));
  return phrases_[static_cast<std::size_t>(id)];
}

std::string PhraseVocab::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < phrases_.size(); ++i)
    out += std::to_string(i) + "\t" + join(phrases_[i]) + "\n";
  return out;
}

PhraseVocab PhraseVocab::from_text(std::string_view text) {
  auto entries = parse_id_lines(text, "phrase vocab");
  if (entries.empty() || entries.front() != kOovPhrase)
    throw Error(ErrorCode::Parse, "phrase vocab entry 0 must be " + std::string(kOovPhrase));
  std::vector<TokenSeq> phrases;
  for (std::size_t i = 1; i < entries.size(); ++i) phrases.push_back(split_spaces(entries[i]));
  return PhraseVocab(phrases);
}

Vocab build_token_vocab(const std::vector<Sample>& samples, std::size_t min_freq) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "cannot build a vocabulary from no samples");
  if (min_freq == 0) throw Error(ErrorCode::InvalidArgument, "min_freq must be positive");
  std::unordered_map<std::string, std::size_t> counts;
  auto count = [&](std::string_view text) {
    for (auto& t : tokenize_plain(text)) ++counts[t];
  };
  for (const auto& s : samples) {
    for (const auto& u : s.context) count(u);
    count(s.question);
    if (s.target) count(*s.target);
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(tokens);
}

std::vector<TokenSeq> extract_pair_phrases(const TokenSeq& question, const TokenSeq& target) {
  const auto steps = align(question, target);
  std::vector<TokenSeq> out;
  TokenSeq run;
  auto flush = [&] {
    if (!run.empty()) out.push_back(std::move(run));
    run.clear();
  };
  for (const auto& step : steps) {
    switch (step.kind) {
      case AlignStep::Kind::Match:
        flush();
        break;
      case AlignStep::Kind::Substitute:
      case AlignStep::Kind::Insert:
        run.push_back(target[step.target_index]);
        break;
      case AlignStep::Kind::Delete:
        break;
    }
  }
  flush();
  return out;
}

PhraseVocab build_phrase_vocab(const std::vector<Sample>& samples, std::size_t max_size,
                               std::size_t max_phrase_len, std::size_t min_count) {
  if (max_size == 0 || max_phrase_len == 0)
    throw Error(ErrorCode::InvalidArgument, "max_size and max_phrase_len must be positive");
  std::map<TokenSeq, std::size_t> counts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!s.target)
      throw Error(ErrorCode::InvalidArgument,
                  "sample " + std::to_string(i) + " has no target; phrase extraction needs pairs");
    for (auto& p : extract_pair_phrases(tokenize(s.question), tokenize(*s.target)))
      if (p.size() <= max_phrase_len) ++counts[p];
  }
  std::vector<std::pair<TokenSeq, std::size_t>> ranked;
  for (auto& [p, n] : counts)
    if (n >= min_count) ranked.emplace_back(p, n);
  // std::map iteration already gives lexicographic order; stable_sort keeps it
  // as the tie-breaker.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<TokenSeq> phrases;
  for (auto& [p, n] : ranked) phrases.push_back(p);
  return PhraseVocab(phrases);
}

// --- synthetic corpus -------------------------------------------------------

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "generator config: '" + key + "' expects a number, got '" +
                                       value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw Error(ErrorCode::Config, "generator config: '" + key +
                                       "' expects a non-negative integer, got '" + value + "'");
  return v;
}

}  // namespace

GeneratorConfig parse_generator_config(std::string_view text) {
  GeneratorConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Config,
                  "generator config line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(view.substr(0, eq)));
    std::string value(trim(view.substr(eq + 1)));
    if (key == "size") cfg.size = parse_uint(key, value);
    else if (key == "vocab_size") cfg.vocab_size = parse_uint(key, value);
    else if (key == "n_entities") cfg.n_entities = parse_uint(key, value);
    else if (key == "p_anaphora") cfg.p_anaphora = parse_double(key, value);
    else if (key == "p_ellipsis") cfg.p_ellipsis = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else throw Error(ErrorCode::Config, "generator config: unknown key '" + key + "'");
  }
  validate_generator_config(cfg);
  return cfg;
}

void validate_generator_config(const GeneratorConfig& c) {
  auto bad = [](const std::string& key, const std::string& why) {
    return Error(ErrorCode::Config, "generator config: '" + key + "' " + why);
  };
  if (c.n_entities < 2) throw bad("n_entities", "must be at least 2");
  if (c.vocab_size < 60) throw bad("vocab_size", "must be at least 60");
  if (!(c.p_anaphora >= 0.0 && c.p_anaphora <= 1.0)) throw bad("p_anaphora", "must lie in [0, 1]");
  if (!(c.p_ellipsis >= 0.0 && c.p_ellipsis <= 1.0)) throw bad("p_ellipsis", "must lie in [0, 1]");
}

TokenSeq anaphora_rule(const TokenSeq& question, const TokenSeq& entity, const TokenSeq& pronoun) {
  if (entity.empty() || entity.size() > question.size()) return question;
  auto it = std::search(question.begin(), question.end(), entity.begin(), entity.end());
  if (it == question.end()) return question;
  TokenSeq out(question.begin(), it);
  out.insert(out.end(), pronoun.begin(), pronoun.end());
  out.insert(out.end(), it + static_cast<std::ptrdiff_t>(entity.size()), question.end());
  return out;
}

TokenSeq ellipsis_rule(const TokenSeq& question, const TokenSeq& clause) {
  std::size_t start = (!question.empty() && question.front() == kBos) ? 1 : 0;
  if (clause.empty() || question.size() < start + clause.size()) return question;
  if (!std::equal(clause.begin(), clause.end(), question.begin() + static_cast<std::ptrdiff_t>(start)))
    return question;
  std::size_t cut = start + clause.size();
  if (cut < question.size() && question[cut] == ",") ++cut;
  TokenSeq out(question.begin(), question.begin() + static_cast<std::ptrdiff_t>(start));
  out.insert(out.end(), question.begin() + static_cast<std::ptrdiff_t>(cut), question.end());
  return out;
}

namespace {

enum class Gender { Male, Female, Group };

struct Entity {
  TokenSeq name;
  Gender gender;
};

struct Verb {
  std::string base, ing;
};

const std::vector<std::string> kMaleFirst = {
    "ira", "john", "paul", "james", "robert", "peter", "henry", "frank",
    "george", "albert", "louis", "oscar", "walter", "arthur", "edward", "victor"};
const std::vector<std::string> kFemaleFirst = {
    "mary", "anna", "grace", "ruth", "alice", "helen", "emma", "clara",
    "rose", "julia", "lucy", "ella", "irene", "nora", "edith", "vera"};
const std::vector<std::string> kLast = {
    "hayes", "baker", "carter", "ellis", "foster", "grant", "hughes", "jensen", "keller",
    "lawson", "morgan", "nolan", "parker", "reed", "stone", "turner", "walsh", "young"};
const std::vector<std::string> kBands = {
    "beatles", "byrds", "monkees", "ramones", "eagles", "zombies", "kinks", "animals"};

const std::vector<Verb> kVerbs = {
    {"reveal", "revealing"}, {"record", "recording"}, {"write", "writing"},
    {"leave", "leaving"},    {"join", "joining"},     {"sign", "signing"},
    {"visit", "visiting"},   {"build", "building"},   {"sell", "selling"},
    {"release", "releasing"},{"direct", "directing"}, {"publish", "publishing"},
    {"win", "winning"},      {"lose", "losing"},      {"found", "founding"},
    {"fund", "funding"},     {"attend", "attending"}, {"design", "designing"},
    {"teach", "teaching"},   {"study", "studying"},   {"perform", "performing"},
    {"organize", "organizing"}, {"manage", "managing"}, {"produce", "producing"},
    {"criticize", "criticizing"}, {"support", "supporting"}, {"praise", "praising"},
    {"host", "hosting"},     {"tour", "touring"},     {"cancel", "cancelling"},
    {"announce", "announcing"}, {"defend", "defending"}, {"question", "questioning"},
    {"document", "documenting"}, {"finance", "financing"}, {"launch", "launching"},
    {"restore", "restoring"}, {"oppose", "opposing"}, {"adopt", "adopting"},
    {"accept", "accepting"}};

const std::vector<std::string> kNouns = {
    "album", "book", "film", "company", "school", "contract", "award", "band",
    "studio", "theater", "museum", "novel", "song", "record", "team", "club",
    "paper", "report", "plan", "project", "house", "farm", "church", "hospital",
    "newspaper", "magazine", "prize", "medal", "show", "series", "concert", "festival",
    "program", "campaign", "bill", "law", "treaty", "statue", "painting", "letter",
    "speech", "interview", "documentary", "label", "orchestra", "choir", "gallery", "library"};

const std::vector<std::string> kClauseNouns = {
    "war", "election", "tour", "merger", "trial", "season", "strike", "scandal",
    "move", "divorce", "wedding", "recession", "coup", "flood", "fire", "premiere",
    "split", "reunion", "injury", "crash"};

const std::vector<std::string> kPreps = {"after", "during", "before", "following"};

const std::vector<std::string> kRoles = {
    "singer", "writer", "soldier", "painter", "actor", "director", "politician",
    "scientist", "athlete", "teacher", "lawyer", "producer"};

const std::vector<std::string> kWh = {"where", "when", "why", "how"};

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

TokenSeq words(std::initializer_list<std::string_view> parts) {
  TokenSeq out;
  for (auto p : parts) out.emplace_back(p);
  return out;
}

void append(TokenSeq& a, const TokenSeq& b) { a.insert(a.end(), b.begin(), b.end()); }

std::string sentence(const TokenSeq& toks) { return detokenize(toks); }

TokenSeq subject_pronoun(Gender g) {
  switch (g) {
    case Gender::Male: return {"he"};
    case Gender::Female: return {"she"};
    case Gender::Group: return {"they"};
  }
  return {};
}

TokenSeq object_pronoun(Gender g) {
  switch (g) {
    case Gender::Male: return {"him"};
    case Gender::Female: return {"her"};
    case Gender::Group: return {"them"};
  }
  return {};
}

std::vector<Entity> make_entities(std::size_t n, Rng& rng) {
  // Enumerate candidate names deterministically, then draw n distinct ones.
  std::vector<Entity> pool;
  for (const auto& f : kMaleFirst)
    for (const auto& l : kLast) pool.push_back({{f, l}, Gender::Male});
  for (const auto& f : kFemaleFirst)
    for (const auto& l : kLast) pool.push_back({{f, l}, Gender::Female});
  for (const auto& b : kBands) pool.push_back({{"the", b}, Gender::Group});
  shuffle(pool, rng);
  // Keep a few groups in every draw so all pronoun classes occur.
  std::vector<Entity> out;
  std::size_t groups = std::max<std::size_t>(1, n / 6);
  for (const auto& e : pool) {
    if (out.size() == n) break;
    bool is_group = e.gender == Gender::Group;
    std::size_t have_groups = static_cast<std::size_t>(
        std::count_if(out.begin(), out.end(), [](const Entity& x) { return x.gender == Gender::Group; }));
    if (is_group && have_groups >= groups) continue;
    if (!is_group && out.size() - have_groups >= n - groups) continue;
    out.push_back(e);
  }
  return out;
}

template <class T>
std::vector<T> take(std::vector<T> pool, std::size_t n, Rng& rng) {
  shuffle(pool, rng);
  if (pool.size() > n) pool.resize(std::max<std::size_t>(n, 1));
  return pool;
}

}  // namespace

std::vector<Sample> generate_synthetic_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  validate_generator_config(config);
  Rng root(seed);
  Rng setup = root.split("generator/setup");
  Rng draw = root.split("generator/samples");

  const auto entities = make_entities(config.n_entities, setup);

  // Everything not spent on entity names and function words is divided
  // between verbs, nouns and clause nouns.
  std::size_t entity_tokens = 0;
  {
    std::vector<std::string> seen;
    for (const auto& e : entities)
      for (const auto& t : e.name)
        if (std::find(seen.begin(), seen.end(), t) == seen.end()) seen.push_back(t);
    entity_tokens = seen.size();
  }
  const std::size_t fixed = 40;
  std::size_t budget = config.vocab_size > fixed + entity_tokens
                           ? config.vocab_size - fixed - entity_tokens
                           : 12;
  const auto verbs = take(kVerbs, std::max<std::size_t>(4, budget * 2 / 5 / 2), setup);
  const auto nouns = take(kNouns, std::max<std::size_t>(4, budget * 2 / 5), setup);
  const auto clause_nouns = take(kClauseNouns, std::max<std::size_t>(3, budget / 5), setup);

  std::vector<Sample> out;
  out.reserve(config.size);
  for (std::size_t k = 0; k < config.size; ++k) {
    const Entity& entity = pick(entities, draw);
    bool use_anaphora = draw.uniform() < config.p_anaphora;
    bool use_ellipsis = draw.uniform() < config.p_ellipsis;
    if (!use_anaphora && !use_ellipsis) use_anaphora = true;

    // Core question; `subject` records the entity's grammatical role.
    TokenSeq core;
    bool subject = true;
    const Verb& verb = pick(verbs, draw);
    const std::string& noun = pick(nouns, draw);
    switch (draw.below(6)) {
      case 0:
        core = words({pick(kWh, draw)});
        core.push_back("did");
        append(core, entity.name);
        append(core, {verb.base, "the", noun, "?"});
        break;
      case 1:
        core = words({"did"});
        append(core, entity.name);
        append(core, {verb.base, "the", noun, "?"});
        break;
      case 2:
        core = words({"what", "did"});
        append(core, entity.name);
        append(core, {verb.base, "?"});
        break;
      case 3:
        core = words({"was", "anyone", "opposed", "to"});
        append(core, entity.name);
        append(core, {verb.ing, "the", noun, "?"});
        subject = false;
        break;
      case 4:
        core = words({"what", "did", "the", noun, "say", "about"});
        append(core, entity.name);
        core.push_back("?");
        subject = false;
        break;
      default:
        core = words({pick(kWh, draw), "did", "the", noun, verb.base});
        append(core, entity.name);
        core.push_back("?");
        subject = false;
        break;
    }

    TokenSeq clause = {pick(kPreps, draw), "the", pick(clause_nouns, draw)};
    TokenSeq question;
    if (use_ellipsis) {
      question = clause;
      question.push_back(",");
    }
    append(question, core);

    TokenSeq target = question;
    if (use_ellipsis) target = ellipsis_rule(target, clause);
    if (use_anaphora)
      target = anaphora_rule(target, entity.name,
                             subject ? subject_pronoun(entity.gender) : object_pronoun(entity.gender));

    // The context mentions the entity only when anaphora resolves against it,
    // and the clause only when it was elided.
    const Entity* topic = &entity;
    if (!use_anaphora) {
      do {
        topic = &pick(entities, draw);
      } while (topic->name == entity.name);
    }
    Sample s;
    TokenSeq u1 = words({"tell", "me", "about"});
    append(u1, topic->name);
    u1.push_back("?");
    s.context.push_back(sentence(u1));
    TokenSeq u2 = topic->name;
    append(u2, {topic->gender == Gender::Group ? "were" : "was", "a",
                topic->gender == Gender::Group ? "band" : pick(kRoles, draw), "."});
    s.context.push_back(sentence(u2));
    if (use_ellipsis) {
      TokenSeq u3 = words({"what", "happened"});
      append(u3, clause);
      u3.push_back("?");
      s.context.push_back(sentence(u3));
      TokenSeq u4 = topic->name;
      append(u4, {"had", "a", "hard", "time", "."});
      s.context.push_back(sentence(u4));
    }
    s.question = sentence(question);
    s.target = sentence(target);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace rise
