#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace advlex::text {

/// A token as a byte range into the text it was cut from.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string_view view(std::string_view source) const {
    return source.substr(begin, end - begin);
  }
  friend bool operator==(const Token&, const Token&) = default;
};

inline bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// ASCII punctuation only; UTF-8 continuation bytes count as word characters.
inline bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline bool is_terminal(std::string_view tok) {
  return tok == "." || tok == "!" || tok == "?";
}

inline bool is_closer(std::string_view tok) {
  return tok == "\"" || tok == "'" || tok == ")" || tok == "]" || tok == "}";
}

inline bool is_punct_token(std::string_view tok) {
  return tok.size() == 1 && is_punct(tok.front());
}

/// Whitespace split, then every leading and trailing punctuation character
/// becomes its own token. Interior punctuation ("don't", "well-known") stays.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    std::size_t e = i;

    std::size_t lead = b;
    while (lead < e && is_punct(s[lead])) ++lead;
    if (lead == e) {
      for (std::size_t k = b; k < e; ++k) out.push_back({k, k + 1});
      continue;
    }
    std::size_t trail = e;
    while (trail > lead && is_punct(s[trail - 1])) --trail;
    for (std::size_t k = b; k < lead; ++k) out.push_back({k, k + 1});
    out.push_back({lead, trail});
    for (std::size_t k = trail; k < e; ++k) out.push_back({k, k + 1});
  }
  return out;
}

struct SentenceSpan {
  std::size_t begin = 0;  // byte offset of first token
  std::size_t end = 0;    // byte offset one past last token
};

/// Sentence boundaries fall after a run of terminal punctuation tokens plus
/// any closing quotes or brackets that immediately follow it.
inline std::vector<SentenceSpan> segment(std::string_view s) {
  auto toks = tokenize(s);
  std::vector<SentenceSpan> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t first = i;
    while (i < toks.size() && !is_terminal(toks[i].view(s))) ++i;
    while (i < toks.size() && is_terminal(toks[i].view(s))) ++i;
    while (i < toks.size() && is_closer(toks[i].view(s))) ++i;
    out.push_back({toks[first].begin, toks[i - 1].end});
  }
  return out;
}

inline std::vector<std::string> token_strings(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) out.emplace_back(t.view(s));
  return out;
}

}  // namespace advlex::text
