#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "advlex/error.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex::oewn {

inline bool is_synset_id(std::string_view id) {
  if (id.size() != 10 || id.substr(8) != "-r") return false;
  for (std::size_t i = 0; i < 8; ++i) {
    if (id[i] < '0' || id[i] > '9') return false;
  }
  return true;
}

inline std::uint32_t synset_number(std::string_view id) {
  return static_cast<std::uint32_t>(std::stoul(std::string(id.substr(0, 8))));
}

inline std::string format_synset_id(std::uint32_t number) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08u-r", number);
  return buf;
}

struct Member {
  std::string lemma;
  std::string sense_id;
  friend bool operator==(const Member&, const Member&) = default;
};

enum class Origin { existing, new_synset };
enum class Status { draft, validated };

constexpr std::string_view to_string(Origin o) {
  return o == Origin::existing ? "existing" : "new";
}
constexpr std::string_view to_string(Status s) {
  return s == Status::draft ? "draft" : "validated";
}

struct Entry {
  std::string synset_id;
  std::string category;  // checked against the taxonomy by validate()
  std::vector<Member> members;
  std::string gloss;
  std::vector<std::string> examples;
  Origin origin = Origin::new_synset;
  Status status = Status::draft;
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Entries in file order. Emission sorts by synset id.
struct LexiconFile {
  std::vector<Entry> entries;

  const Entry* find(std::string_view id) const {
    for (const auto& e : entries) {
      if (e.synset_id == id) return &e;
    }
    return nullptr;
  }
  friend bool operator==(const LexiconFile&, const LexiconFile&) = default;
};

namespace detail {

inline std::string where(const YAML::Node& node) {
  auto m = node.Mark();
  if (m.line < 0) return {};
  return "line " + std::to_string(m.line + 1);
}

[[noreturn]] inline void violation(const std::string& path, const YAML::Node& node,
                                   const std::string& detail) {
  auto loc = where(node);
  throw Error(ErrorCode::SchemaViolation, path, loc.empty() ? detail : loc + ": " + detail);
}

inline std::string scalar(const YAML::Node& node, const std::string& path,
                          bool allow_empty = false) {
  if (!node.IsScalar()) violation(path, node, "expected a scalar");
  auto s = node.Scalar();
  if (!allow_empty && s.empty()) violation(path, node, "must be nonempty");
  return s;
}

}  // namespace detail

/// Strict parse. Unknown keys, missing keys, and wrong shapes are
/// SchemaViolation; a key not shaped like `NNNNNNNN-r` is BadSynsetId;
/// a sense id used twice is DuplicateSenseId.
inline LexiconFile parse_lexicon_text(const std::string& content) {
  YAML::Node root;
  try {
    root = YAML::Load(content);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::SchemaViolation, "", e.what());
  }
  LexiconFile lex;
  if (root.IsNull()) return lex;
  if (!root.IsMap()) detail::violation("", root, "top level must be a mapping");

  std::set<std::string> ids;
  std::map<std::string, std::string> sense_owner;
  for (const auto& kv : root) {
    const auto id = detail::scalar(kv.first, "<key>");
    if (!is_synset_id(id)) {
      throw Error(ErrorCode::BadSynsetId, id, detail::where(kv.first));
    }
    if (!ids.insert(id).second) detail::violation(id, kv.first, "duplicate synset id");
    const auto& body = kv.second;
    if (!body.IsMap()) detail::violation(id, body, "entry must be a mapping");

    Entry e;
    e.synset_id = id;
    std::set<std::string> seen;
    for (const auto& field : body) {
      const auto key = detail::scalar(field.first, id + ".<key>");
      const auto path = id + "." + key;
      if (!seen.insert(key).second) detail::violation(path, field.first, "duplicate key");
      const auto& v = field.second;
      if (key == "category") {
        e.category = detail::scalar(v, path);
      } else if (key == "gloss") {
        e.gloss = detail::scalar(v, path);
      } else if (key == "members") {
        if (!v.IsSequence() || v.size() == 0) {
          detail::violation(path, v, "must be a nonempty sequence");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
          const auto mpath = path + "[" + std::to_string(i) + "]";
          const auto& m = v[i];
          if (!m.IsMap()) detail::violation(mpath, m, "member must be a mapping");
          Member mem;
          bool has_lemma = false, has_sense = false;
          for (const auto& mf : m) {
            const auto mk = detail::scalar(mf.first, mpath + ".<key>");
            if (mk == "lemma" && !has_lemma) {
              mem.lemma = detail::scalar(mf.second, mpath + ".lemma");
              has_lemma = true;
            } else if (mk == "sense_id" && !has_sense) {
              mem.sense_id = detail::scalar(mf.second, mpath + ".sense_id");
              has_sense = true;
            } else {
              detail::violation(mpath + "." + mk, mf.first, "unknown or repeated key");
            }
          }
          if (!has_lemma) detail::violation(mpath + ".lemma", m, "missing");
          if (!has_sense) detail::violation(mpath + ".sense_id", m, "missing");
          auto [it, fresh] = sense_owner.emplace(mem.sense_id, id);
          if (!fresh) {
            throw Error(ErrorCode::DuplicateSenseId, mem.sense_id,
                        "in " + it->second + " and " + id);
          }
          e.members.push_back(std::move(mem));
        }
      } else if (key == "examples") {
        if (!v.IsSequence()) detail::violation(path, v, "must be a sequence");
        for (std::size_t i = 0; i < v.size(); ++i) {
          e.examples.push_back(
              detail::scalar(v[i], path + "[" + std::to_string(i) + "]", true));
        }
      } else if (key == "origin") {
        auto s = detail::scalar(v, path);
        if (s == "existing") e.origin = Origin::existing;
        else if (s == "new") e.origin = Origin::new_synset;
        else detail::violation(path, v, "must be 'existing' or 'new'");
      } else if (key == "status") {
        auto s = detail::scalar(v, path);
        if (s == "draft") e.status = Status::draft;
        else if (s == "validated") e.status = Status::validated;
        else detail::violation(path, v, "must be 'draft' or 'validated'");
      } else {
        detail::violation(path, field.first, "unknown key");
      }
    }
    for (const char* required : {"category", "members", "gloss", "examples", "origin", "status"}) {
      if (!seen.count(required)) detail::violation(id + "." + required, body, "missing");
    }
    lex.entries.push_back(std::move(e));
  }
  return lex;
}

inline LexiconFile parse_lexicon(const fs::path& path) {
  return parse_lexicon_text(read_file(path));
}

/// YAML double-quoted scalar. Control characters are escaped; UTF-8 passes
/// through untouched.
inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", c);
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  out += '"';
  return out;
}

/// Canonical text: entries sorted by id, fixed key order, two-space indent,
/// every free-text value double-quoted, trailing newline.
inline std::string emit_lexicon_text(const LexiconFile& lex) {
  std::vector<const Entry*> order;
  for (const auto& e : lex.entries) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const Entry* a, const Entry* b) { return a->synset_id < b->synset_id; });
  if (order.empty()) return "{}\n";
  std::string out;
  for (const auto* e : order) {
    out += e->synset_id + ":\n";
    out += "  category: " + quote(e->category) + "\n";
    out += "  members:\n";
    for (const auto& m : e->members) {
      out += "    - lemma: " + quote(m.lemma) + "\n";
      out += "      sense_id: " + quote(m.sense_id) + "\n";
    }
    out += "  gloss: " + quote(e->gloss) + "\n";
    if (e->examples.empty()) {
      out += "  examples: []\n";
    } else {
      out += "  examples:\n";
      for (const auto& x : e->examples) out += "    - " + quote(x) + "\n";
    }
    out += "  origin: " + std::string(to_string(e->origin)) + "\n";
    out += "  status: " + std::string(to_string(e->status)) + "\n";
  }
  return out;
}

inline void emit_lexicon(const LexiconFile& lex, const fs::path& path) {
  write_file_atomic(path, emit_lexicon_text(lex));
}

/// Id range reserved for newly minted synsets.
struct IdRange {
  std::uint32_t first = 90000000;
  std::uint32_t last = 99999999;
  bool contains(std::uint32_t n) const { return n >= first && n <= last; }
};

enum class FindingKind { UnknownCategory, MissingExample, PossibleDuplicate, IdRangeViolation };

constexpr std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::UnknownCategory: return "UnknownCategory";
    case FindingKind::MissingExample: return "MissingExample";
    case FindingKind::PossibleDuplicate: return "PossibleDuplicate";
    case FindingKind::IdRangeViolation: return "IdRangeViolation";
  }
  return "";
}

struct Finding {
  FindingKind kind;
  std::string synset_id;
  std::string detail;
};

/// Reports, never mutates. An empty result means the lexicon is clean.
inline std::vector<Finding> validate_lexicon(const LexiconFile& lex, const IdRange& range = {}) {
  std::vector<Finding> out;
  for (const auto& e : lex.entries) {
    if (!try_parse_category(e.category) || e.category != to_lower_ascii(e.category)) {
      out.push_back({FindingKind::UnknownCategory, e.synset_id, e.category});
    }
    if (e.status == Status::validated && e.examples.empty()) {
      out.push_back({FindingKind::MissingExample, e.synset_id, "validated entry without example"});
    }
    const bool in_range = range.contains(synset_number(e.synset_id));
    if (e.origin == Origin::new_synset && !in_range) {
      out.push_back({FindingKind::IdRangeViolation, e.synset_id, "new synset outside reserved range"});
    } else if (e.origin == Origin::existing && in_range) {
      out.push_back({FindingKind::IdRangeViolation, e.synset_id, "existing synset inside reserved range"});
    }
  }
  for (std::size_t i = 0; i < lex.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < lex.entries.size(); ++j) {
      const auto& a = lex.entries[i];
      const auto& b = lex.entries[j];
      if (a.gloss != b.gloss) continue;
      for (const auto& ma : a.members) {
        bool overlap = std::any_of(b.members.begin(), b.members.end(),
                                   [&](const Member& mb) { return mb.lemma == ma.lemma; });
        if (overlap) {
          out.push_back({FindingKind::PossibleDuplicate, b.synset_id,
                         "same gloss and lemma '" + ma.lemma + "' as " + a.synset_id});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace advlex::oewn
