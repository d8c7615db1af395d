#include "rise/editcore.hpp"

#include <algorithm>
#include <array>

namespace rise {

using nlohmann::json;

char edit_code(EditOp op) {
  switch (op) {
    case EditOp::Keep: return 'K';
    case EditOp::Delete: return 'D';
    case EditOp::Insert: return 'I';
    case EditOp::Substitute: return 'S';
  }
  return '?';
}

EditOp edit_from_code(char code) {
  switch (code) {
    case 'K': return EditOp::Keep;
    case 'D': return EditOp::Delete;
    case 'I': return EditOp::Insert;
    case 'S': return EditOp::Substitute;
    default:
      throw Error(ErrorCode::Parse, std::string("unknown edit code '") + code + "'");
  }
}

std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b) {
  // Two DP rows; short inputs (the common case in training) stay on the stack.
  constexpr std::size_t kInline = 64;
  std::array<std::size_t, 2 * kInline> small;
  std::vector<std::size_t> large;
  const std::size_t width = b.size() + 1;
  std::size_t* prev = small.data();
  if (width > kInline) {
    large.resize(2 * width);
    prev = large.data();
  }
  std::size_t* cur = prev + width;
  for (std::size_t j = 0; j < width; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j < width; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<AlignStep> align(const TokenSeq& source, const TokenSeq& target) {
  const std::size_t m = source.size(), n = target.size();
  std::vector<std::size_t> d((m + 1) * (n + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (n + 1) + j]; };
  for (std::size_t i = 0; i <= m; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (source[i - 1] == target[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});

  std::vector<AlignStep> steps;
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = source[i - 1] == target[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        steps.push_back({same ? AlignStep::Kind::Match : AlignStep::Kind::Substitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      steps.push_back({AlignStep::Kind::Delete, i - 1, 0});
      --i;
    } else {
      steps.push_back({AlignStep::Kind::Insert, 0, j - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::size_t count_non_keep(const std::vector<EditOp>& edits) {
  return static_cast<std::size_t>(
      std::count_if(edits.begin(), edits.end(), [](EditOp e) { return e != EditOp::Keep; }));
}

std::size_t count_phrase_slots(const std::vector<EditOp>& edits) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < edits.size(); ++k) {
    if (edits[k] == EditOp::Insert) ++n;
    else if (edits[k] == EditOp::Substitute && (k == 0 || edits[k - 1] != EditOp::Substitute)) ++n;
  }
  return n;
}

std::vector<Span> extract_spans(const TokenSeq& question, const std::vector<EditOp>& edits) {
  if (question.size() != edits.size())
    throw Error(ErrorCode::InvalidArgument, "extract_spans: " + std::to_string(edits.size()) +
                                                " edits for " + std::to_string(question.size()) +
                                                " tokens");
  std::vector<Span> spans;
  const std::size_t len = edits.size();
  std::size_t k = 0;
  while (k < len) {
    if (edits[k] == EditOp::Insert) {
      spans.push_back({Span::Kind::Insert, k, std::min(k + 2, len), k});
      ++k;
    } else if (edits[k] == EditOp::Substitute) {
      std::size_t end = k;
      while (end < len && edits[end] == EditOp::Substitute) ++end;
      spans.push_back({Span::Kind::Substitute, k, end, k});
      k = end;
    } else {
      ++k;
    }
  }
  return spans;
}

TokenSeq span_tokens(const TokenSeq& question, const Span& span) {
  return TokenSeq(question.begin() + static_cast<std::ptrdiff_t>(span.begin),
                  question.begin() + static_cast<std::ptrdiff_t>(span.end));
}

void validate_script(const TokenSeq& source, const EditScript& script) {
  if (script.edits.size() != source.size())
    throw Error(ErrorCode::InvalidArgument, "edit script has " +
                                                std::to_string(script.edits.size()) +
                                                " edits for " + std::to_string(source.size()) +
                                                " tokens");
  if (!source.empty() && source.front() == kBos && script.edits.front() != EditOp::Keep &&
      script.edits.front() != EditOp::Insert)
    throw Error(ErrorCode::InvalidArgument,
                std::string("the sentinel may only carry K or I, got ") +
                    edit_code(script.edits.front()));
  const std::size_t slots = count_phrase_slots(script.edits);
  if (slots != script.phrases.size())
    throw Error(ErrorCode::InvalidArgument, "edit script needs " + std::to_string(slots) +
                                                " phrases, has " +
                                                std::to_string(script.phrases.size()));
  for (const auto& p : script.phrases)
    if (p.empty()) throw Error(ErrorCode::InvalidArgument, "edit script contains an empty phrase");
}

TokenSeq apply_script(const TokenSeq& source, const EditScript& script) {
  validate_script(source, script);
  TokenSeq out;
  out.reserve(source.size() + 4);
  std::size_t phrase = 0;
  const auto& edits = script.edits;
  for (std::size_t k = 0; k < edits.size(); ++k) {
    switch (edits[k]) {
      case EditOp::Keep:
        out.push_back(source[k]);
        break;
      case EditOp::Delete:
        break;
      case EditOp::Insert: {
        out.push_back(source[k]);
        const auto& p = script.phrases[phrase++];
        out.insert(out.end(), p.begin(), p.end());
        break;
      }
      case EditOp::Substitute:
        if (k == 0 || edits[k - 1] != EditOp::Substitute) {
          const auto& p = script.phrases[phrase++];
          out.insert(out.end(), p.begin(), p.end());
        }
        break;
    }
  }
  return out;
}

EditScript all_keep(std::size_t length) {
  return EditScript{std::vector<EditOp>(length, EditOp::Keep), {}};
}

json script_to_json(const EditScript& script) {
  json edits = json::array();
  for (EditOp e : script.edits) edits.push_back(std::string(1, edit_code(e)));
  return json{{"edits", edits}, {"phrases", script.phrases}};
}

EditScript script_from_json(const json& j) {
  EditScript s;
  try {
    for (const auto& e : j.at("edits")) {
      const auto code = e.get<std::string>();
      if (code.size() != 1) throw Error(ErrorCode::Parse, "edit codes are single characters");
      s.edits.push_back(edit_from_code(code[0]));
    }
    s.phrases = j.at("phrases").get<std::vector<TokenSeq>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed edit script: ") + e.what());
  }
  return s;
}

}  // namespace rise
