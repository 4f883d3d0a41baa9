#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advlex/error.hpp"
#include "advlex/text.hpp"
#include "advlex/util.hpp"

namespace advlex {

enum class Category {
  manner,
  subject_oriented,
  speaker_oriented,
  frequency,
  temporal,
  spatial,
  degree,
  domain,
  focus,
  conjunctive,
};

inline constexpr std::size_t kCategoryCount = 10;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::manner,    Category::subject_oriented, Category::speaker_oriented,
    Category::frequency, Category::temporal,         Category::spatial,
    Category::degree,    Category::domain,           Category::focus,
    Category::conjunctive,
};

constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::manner: return "manner";
    case Category::subject_oriented: return "subject_oriented";
    case Category::speaker_oriented: return "speaker_oriented";
    case Category::frequency: return "frequency";
    case Category::temporal: return "temporal";
    case Category::spatial: return "spatial";
    case Category::degree: return "degree";
    case Category::domain: return "domain";
    case Category::focus: return "focus";
    case Category::conjunctive: return "conjunctive";
  }
  return "";
}

inline std::optional<Category> try_parse_category(std::string_view label) {
  auto lower = to_lower_ascii(label);
  for (auto c : kAllCategories) {
    if (to_string(c) == lower) return c;
  }
  return std::nullopt;
}

/// Case-insensitive parse of one of the ten canonical labels.
inline Category parse_category(std::string_view label) {
  if (auto c = try_parse_category(label)) return *c;
  throw Error(ErrorCode::UnknownCategory, std::string(label));
}

struct CategoryDiagnostic {
  Category category;
  std::string_view paraphrase_template;
  std::string_view probe_question;
};

/// Paraphrase tests and probe questions shown to annotators.
inline const std::array<CategoryDiagnostic, kCategoryCount>& diagnostics() {
  static const std::array<CategoryDiagnostic, kCategoryCount> table = {{
      {Category::manner, "in a [X] manner", "How was it done?"},
      {Category::subject_oriented, "It was [X] of [SUBJECT] to [VERB]",
       "What does it say about the subject?"},
      {Category::speaker_oriented, "It is [X] that ... / I [say/judge] that ...",
       "What is the speaker's stance?"},
      {Category::frequency, "[X] times", "How often?"},
      {Category::temporal, "at/for [X] time", "When? For how long?"},
      {Category::spatial, "at/to [X] place", "Where?"},
      {Category::degree, "to a [X] extent", "To what extent? How much?"},
      {Category::domain, "In a [X] sense / From a [X] perspective",
       "In which domain does the claim hold?"},
      {Category::focus, "only/even/also [CONSTITUENT]",
       "Does it mark inclusion, exclusion, or emphasis?"},
      {Category::conjunctive, "in contrast / on the other hand / however",
       "Does it mark opposition, correction, connection, or contrast?"},
  }};
  return table;
}

inline const CategoryDiagnostic& diagnostic(Category c) {
  return diagnostics()[static_cast<std::size_t>(c)];
}

/// Seed adverbs known to typify each category. Lemmas are unique across
/// categories.
class CueLexicon {
 public:
  CueLexicon() = default;

  void add(Category c, std::string lemma) {
    lemma = to_lower_ascii(lemma);
    auto [it, inserted] = by_lemma_.emplace(lemma, c);
    if (!inserted && it->second != c) {
      throw Error(ErrorCode::MalformedRecord, lemma,
                  "cue lemma listed under two categories");
    }
  }

  std::optional<Category> lookup(std::string_view lemma) const {
    auto it = by_lemma_.find(to_lower_ascii(lemma));
    if (it == by_lemma_.end()) return std::nullopt;
    return it->second;
  }

  std::set<std::string> lemmas(Category c) const {
    std::set<std::string> out;
    for (const auto& [lemma, cat] : by_lemma_) {
      if (cat == c) out.insert(lemma);
    }
    return out;
  }

  std::size_t size() const { return by_lemma_.size(); }

  /// `category<TAB>lemma` per line; blank lines and '#' comments skipped.
  static CueLexicon parse(std::string_view content) {
    CueLexicon lex;
    for_each_line(content, [&](std::string_view line, std::size_t no) {
      auto t = trim(line);
      if (t.empty() || t.front() == '#') return;
      auto tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no),
                    "expected category<TAB>lemma");
      }
      auto cat = try_parse_category(trim(line.substr(0, tab)));
      if (!cat) {
        throw Error(ErrorCode::UnknownCategory,
                    std::string(trim(line.substr(0, tab))),
                    "line " + std::to_string(no));
      }
      auto lemma = trim(line.substr(tab + 1));
      if (lemma.empty()) {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no),
                    "empty lemma");
      }
      lex.add(*cat, std::string(lemma));
    });
    return lex;
  }

  static CueLexicon load(const fs::path& path) { return parse(read_file(path)); }

 private:
  std::map<std::string, Category> by_lemma_;
};

struct RankedCategory {
  Category category;
  double score;
  friend bool operator==(const RankedCategory&, const RankedCategory&) = default;
};

namespace detail {

inline bool has_suffix_any(std::string_view w,
                           std::initializer_list<std::string_view> sfx) {
  return std::any_of(sfx.begin(), sfx.end(),
                     [&](std::string_view s) { return ends_with(w, s); });
}

}  // namespace detail

/// Pre-fill ranking for the classification screen. A cue-lexicon hit puts
/// that category first at 1.0. Without a hit, the rule table below scores
/// categories from the lemma's suffix and its position in the sentence;
/// each category keeps the maximum score any rule assigns it.
///
///   -ly, not sentence-initial          manner 0.6
///   -ly, followed by a word            degree 0.3
///   -ly, sentence-initial              speaker_oriented 0.5,
///                                      subject_oriented 0.4, domain 0.3,
///                                      manner 0.1
///   -ward(s) -where -side -stairs      spatial 0.5
///   -wise                              domain 0.4
///   other, sentence-initial            conjunctive 0.4, temporal 0.3,
///                                      focus 0.2
///   other, not initial                 temporal 0.3, degree 0.2, focus 0.2
///
/// Ties break lexicographically on the category name.
inline std::vector<RankedCategory> suggest_category(std::string_view lemma,
                                                    std::string_view sentence,
                                                    const CueLexicon& cues) {
  auto toks = text::tokenize(sentence);
  const auto key = to_lower_ascii(lemma);
  std::optional<std::size_t> pos;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (to_lower_ascii(toks[i].view(sentence)) == key) {
      pos = i;
      break;
    }
  }
  if (!pos) throw Error(ErrorCode::LemmaNotInSentence, std::string(lemma));

  std::array<double, kCategoryCount> score{};
  auto bump = [&](Category c, double s) {
    auto& slot = score[static_cast<std::size_t>(c)];
    slot = std::max(slot, s);
  };

  // Leading punctuation does not make a word non-initial.
  bool initial = true;
  for (std::size_t i = 0; i < *pos; ++i) {
    if (!text::is_punct_token(toks[i].view(sentence))) {
      initial = false;
      break;
    }
  }
  bool followed_by_word = *pos + 1 < toks.size() &&
                          !text::is_punct_token(toks[*pos + 1].view(sentence));

  if (ends_with(key, "ly")) {
    if (initial) {
      bump(Category::speaker_oriented, 0.5);
      bump(Category::subject_oriented, 0.4);
      bump(Category::domain, 0.3);
      bump(Category::manner, 0.1);
    } else {
      bump(Category::manner, 0.6);
    }
    if (followed_by_word) bump(Category::degree, 0.3);
  } else {
    if (detail::has_suffix_any(key, {"ward", "wards", "where", "side", "stairs"})) {
      bump(Category::spatial, 0.5);
    }
    if (ends_with(key, "wise")) bump(Category::domain, 0.4);
    if (initial) {
      bump(Category::conjunctive, 0.4);
      bump(Category::temporal, 0.3);
      bump(Category::focus, 0.2);
    } else {
      bump(Category::temporal, 0.3);
      bump(Category::degree, 0.2);
      bump(Category::focus, 0.2);
    }
  }
  if (auto cue = cues.lookup(key)) bump(*cue, 1.0);

  std::vector<RankedCategory> out;
  out.reserve(kCategoryCount);
  for (auto c : kAllCategories) out.push_back({c, score[static_cast<std::size_t>(c)]});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return to_string(a.category) < to_string(b.category);
  });
  return out;
}

}  // namespace advlex
