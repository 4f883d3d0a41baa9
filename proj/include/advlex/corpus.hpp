#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/error.hpp"
#include "advlex/text.hpp"
#include "advlex/util.hpp"

namespace advlex {

struct Sentence {
  std::string text;
  std::vector<text::Token> tokens;  // offsets into `text`

  std::string_view token(std::size_t i) const { return tokens.at(i).view(text); }
};

struct CorpusDocument {
  std::string doc_id;
  std::string source;
  std::vector<Sentence> sentences;
};

enum class CorpusFormat { plain_text, jsonl };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "plain_text" || s == "text" || s == "plain") return CorpusFormat::plain_text;
  if (s == "jsonl") return CorpusFormat::jsonl;
  throw Error(ErrorCode::ConfigError, std::string(s), "unknown corpus format");
}

/// Splits raw document text into tokenized sentences.
inline std::vector<Sentence> split_sentences(std::string_view raw) {
  std::vector<Sentence> out;
  for (const auto& span : text::segment(raw)) {
    Sentence s;
    s.text = std::string(raw.substr(span.begin, span.end - span.begin));
    s.tokens = text::tokenize(s.text);
    out.push_back(std::move(s));
  }
  return out;
}

inline CorpusDocument make_document(std::string doc_id, std::string source,
                                    std::string_view raw) {
  return {std::move(doc_id), std::move(source), split_sentences(raw)};
}

/// Reads each file in order and hands documents to `sink` in input order.
/// Plain text is one document per file (id = file name). JSONL is one
/// document per line; `text` is required, `id` and `source` optional.
inline void ingest(const std::vector<fs::path>& paths, CorpusFormat format,
                   const std::function<void(CorpusDocument)>& sink) {
  std::set<std::string> seen;
  auto claim = [&](const std::string& id) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::MalformedRecord, id, "duplicate document id");
    }
  };
  for (const auto& path : paths) {
    const auto content = read_file(path);
    if (format == CorpusFormat::plain_text) {
      if (trim(content).empty()) continue;
      auto id = path.filename().string();
      claim(id);
      sink(make_document(id, path.stem().string(), content));
      continue;
    }
    for_each_line(content, [&](std::string_view line, std::size_t no) {
      if (trim(line).empty()) return;
      const auto where = path.filename().string() + ":" + std::to_string(no);
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedRecord, where, e.what());
      }
      if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
        throw Error(ErrorCode::MalformedRecord, where, "missing string field 'text'");
      }
      std::string id = where;
      if (rec.contains("id")) {
        const auto& v = rec["id"];
        if (v.is_string()) id = v.get<std::string>();
        else if (v.is_number_integer()) id = std::to_string(v.get<std::int64_t>());
        else throw Error(ErrorCode::MalformedRecord, where, "'id' must be string or integer");
      }
      std::string source = path.stem().string();
      if (rec.contains("source")) {
        if (!rec["source"].is_string()) {
          throw Error(ErrorCode::MalformedRecord, where, "'source' must be a string");
        }
        source = rec["source"].get<std::string>();
      }
      claim(id);
      sink(make_document(id, source, rec["text"].get<std::string>()));
    });
  }
}

inline std::vector<CorpusDocument> ingest_all(const std::vector<fs::path>& paths,
                                              CorpusFormat format) {
  std::vector<CorpusDocument> docs;
  ingest(paths, format, [&](CorpusDocument d) { docs.push_back(std::move(d)); });
  return docs;
}

struct ExtractionLexicon {
  std::set<std::string> known_adverbs;
  std::set<std::string> ambiguous_exclusions;
  std::vector<std::string> adverbial_suffixes{"ly"};
  std::size_t min_stem_length = 3;

  bool excluded(std::string_view lower) const {
    return ambiguous_exclusions.count(std::string(lower)) > 0;
  }

  bool matches_suffix(std::string_view lower) const {
    for (const auto& sfx : adverbial_suffixes) {
      if (ends_with(lower, sfx) && lower.size() >= sfx.size() + min_stem_length) {
        return true;
      }
    }
    return false;
  }

  /// Sectioned file: `[known]`, `[excluded]`, `[suffixes]`, one entry per
  /// line, '#' comments. A `[suffixes]` section replaces the default list.
  static ExtractionLexicon parse(std::string_view content) {
    ExtractionLexicon lex;
    enum class Section { none, known, excluded, suffixes } section = Section::none;
    bool custom_suffixes = false;
    for_each_line(content, [&](std::string_view line, std::size_t no) {
      auto t = trim(line);
      if (t.empty() || t.front() == '#') return;
      if (t.front() == '[') {
        if (t == "[known]") section = Section::known;
        else if (t == "[excluded]") section = Section::excluded;
        else if (t == "[suffixes]") {
          section = Section::suffixes;
          if (!custom_suffixes) lex.adverbial_suffixes.clear();
          custom_suffixes = true;
        } else {
          throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no),
                      "unknown section " + std::string(t));
        }
        return;
      }
      auto entry = to_lower_ascii(t);
      switch (section) {
        case Section::known: lex.known_adverbs.insert(entry); break;
        case Section::excluded: lex.ambiguous_exclusions.insert(entry); break;
        case Section::suffixes:
          if (entry.front() == '-') entry.erase(0, 1);
          lex.adverbial_suffixes.push_back(entry);
          break;
        case Section::none:
          throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no),
                      "entry before any section header");
      }
    });
    return lex;
  }

  static ExtractionLexicon load(const fs::path& path) { return parse(read_file(path)); }
};

struct AdverbOccurrence {
  std::string occurrence_id;
  std::string lemma;
  std::string surface;
  std::string sentence_text;
  std::size_t token_index = 0;
  std::size_t token_count = 0;
  std::string source;

  friend bool operator==(const AdverbOccurrence&, const AdverbOccurrence&) = default;
};

inline std::string occurrence_id(std::string_view doc_id, std::size_t sentence_index,
                                 std::size_t token_index) {
  return hash_fields({doc_id, std::to_string(sentence_index), std::to_string(token_index)});
}

/// A token is extracted when it is a known adverb or carries an adverbial
/// suffix on a long-enough stem, and is not excluded. Exclusion always wins.
inline std::vector<AdverbOccurrence> extract_adverbs(const CorpusDocument& doc,
                                                     const ExtractionLexicon& lex) {
  std::vector<AdverbOccurrence> out;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& sent = doc.sentences[si];
    for (std::size_t ti = 0; ti < sent.tokens.size(); ++ti) {
      auto surface = sent.token(ti);
      auto lower = to_lower_ascii(surface);
      if (lex.excluded(lower)) continue;
      if (!lex.known_adverbs.count(lower) && !lex.matches_suffix(lower)) continue;
      out.push_back({occurrence_id(doc.doc_id, si, ti), lower, std::string(surface),
                     sent.text, ti, sent.tokens.size(), doc.source});
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const AdverbOccurrence& o) {
  nlohmann::ordered_json j;
  j["occurrence_id"] = o.occurrence_id;
  j["lemma"] = o.lemma;
  j["surface"] = o.surface;
  j["sentence_text"] = o.sentence_text;
  j["token_index"] = o.token_index;
  j["token_count"] = o.token_count;
  j["source"] = o.source;
  return j;
}

inline AdverbOccurrence occurrence_from_json(const nlohmann::json& j, const std::string& where) {
  try {
    AdverbOccurrence o;
    o.occurrence_id = j.at("occurrence_id").get<std::string>();
    o.lemma = j.at("lemma").get<std::string>();
    o.surface = j.at("surface").get<std::string>();
    o.sentence_text = j.at("sentence_text").get<std::string>();
    o.token_index = j.at("token_index").get<std::size_t>();
    o.token_count = j.at("token_count").get<std::size_t>();
    o.source = j.at("source").get<std::string>();
    if (o.token_count == 0 || o.token_index >= o.token_count) {
      throw Error(ErrorCode::MalformedRecord, where, "token_index out of range");
    }
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, where, e.what());
  }
}

inline std::string occurrences_to_jsonl(const std::vector<AdverbOccurrence>& occs) {
  std::string out;
  for (const auto& o : occs) {
    out += to_json(o).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<AdverbOccurrence> parse_occurrences(std::string_view content) {
  std::vector<AdverbOccurrence> out;
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    if (trim(line).empty()) return;
    const auto where = "line " + std::to_string(no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, where, e.what());
    }
    out.push_back(occurrence_from_json(j, where));
  });
  return out;
}

inline std::vector<AdverbOccurrence> load_occurrences(const fs::path& path) {
  return parse_occurrences(read_file(path));
}

}  // namespace advlex
