#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/embeddings.hpp"
#include "advlex/error.hpp"
#include "advlex/oewn.hpp"
#include "advlex/senses.hpp"
#include "advlex/taxonomy.hpp"

namespace advlex {

using oewn::IdRange;
using oewn::Member;
using oewn::Origin;

struct Synset {
  std::string synset_id;
  Category category = Category::manner;
  std::vector<Member> members;
  std::string gloss;
  std::vector<std::string> examples;
  Origin origin = Origin::new_synset;
  std::optional<Vector> centroid;

  friend bool operator==(const Synset&, const Synset&) = default;
};

struct SynsetParams {
  double similarity_threshold = 0.8;
  IdRange id_range;
};

/// Synset inventory plus the id allocator state. Ids are never reused: a
/// merged-away id stays in `retired`.
class Lexicon {
 public:
  const std::map<std::string, Synset>& synsets() const { return synsets_; }
  const std::set<std::string>& retired() const { return retired_; }
  std::uint32_t next_number() const { return next_number_; }

  const Synset& at(const std::string& id) const {
    auto it = synsets_.find(id);
    if (it == synsets_.end()) throw Error(ErrorCode::UnknownSynset, id);
    return it->second;
  }
  bool contains(const std::string& id) const { return synsets_.count(id) > 0; }

  void put(Synset s) {
    if (!oewn::is_synset_id(s.synset_id)) throw Error(ErrorCode::BadSynsetId, s.synset_id);
    auto id = s.synset_id;
    synsets_[id] = std::move(s);
  }

  void retire(const std::string& id) {
    synsets_.erase(id);
    retired_.insert(id);
  }

  /// Lowest free number in the range at or above the allocator cursor.
  std::string allocate(const IdRange& range) {
    std::uint32_t n = std::max(next_number_, range.first);
    while (true) {
      if (n > range.last || n < range.first) {
        throw Error(ErrorCode::IdRangeExhausted, oewn::format_synset_id(range.first));
      }
      auto id = oewn::format_synset_id(n);
      if (!synsets_.count(id) && !retired_.count(id)) {
        next_number_ = n + 1;
        return id;
      }
      ++n;
    }
  }

  /// Deterministic state serialization (maps are ordered).
  nlohmann::ordered_json to_json() const;
  static Lexicon from_json(const nlohmann::json& j);

  /// Existing lexicon file, no centroids.
  static Lexicon from_file(const oewn::LexiconFile& file) {
    Lexicon lex;
    for (const auto& e : file.entries) {
      Synset s;
      s.synset_id = e.synset_id;
      s.category = parse_category(e.category);
      s.members = e.members;
      s.gloss = e.gloss;
      s.examples = e.examples;
      s.origin = e.origin;
      lex.put(std::move(s));
    }
    return lex;
  }

  oewn::LexiconFile to_file() const {
    oewn::LexiconFile f;
    for (const auto& [id, s] : synsets_) {
      f.entries.push_back({id, std::string(to_string(s.category)), s.members, s.gloss,
                           s.examples, s.origin, oewn::Status::validated});
    }
    return f;
  }

  friend bool operator==(const Lexicon&, const Lexicon&) = default;

 private:
  std::map<std::string, Synset> synsets_;
  std::set<std::string> retired_;
  std::uint32_t next_number_ = 0;
};

inline nlohmann::ordered_json synset_to_json(const Synset& s) {
  nlohmann::ordered_json j;
  j["synset_id"] = s.synset_id;
  j["category"] = to_string(s.category);
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& m : s.members) {
    members.push_back({{"lemma", m.lemma}, {"sense_id", m.sense_id}});
  }
  j["members"] = members;
  j["gloss"] = s.gloss;
  j["examples"] = s.examples;
  j["origin"] = oewn::to_string(s.origin);
  j["centroid"] = s.centroid ? nlohmann::ordered_json(*s.centroid) : nlohmann::ordered_json(nullptr);
  return j;
}

inline Synset synset_from_json(const nlohmann::json& j) {
  Synset s;
  s.synset_id = j.at("synset_id").get<std::string>();
  s.category = parse_category(j.at("category").get<std::string>());
  for (const auto& m : j.at("members")) {
    s.members.push_back({m.at("lemma").get<std::string>(), m.at("sense_id").get<std::string>()});
  }
  s.gloss = j.at("gloss").get<std::string>();
  s.examples = j.at("examples").get<std::vector<std::string>>();
  s.origin = j.at("origin").get<std::string>() == "existing" ? Origin::existing : Origin::new_synset;
  if (j.contains("centroid") && !j["centroid"].is_null()) s.centroid = j["centroid"].get<Vector>();
  return s;
}

inline nlohmann::ordered_json Lexicon::to_json() const {
  nlohmann::ordered_json j;
  j["next_number"] = next_number_;
  j["retired"] = retired_;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [id, s] : synsets_) arr.push_back(synset_to_json(s));
  j["synsets"] = arr;
  return j;
}

inline Lexicon Lexicon::from_json(const nlohmann::json& j) {
  Lexicon lex;
  try {
    lex.next_number_ = j.at("next_number").get<std::uint32_t>();
    for (const auto& r : j.at("retired")) lex.retired_.insert(r.get<std::string>());
    for (const auto& s : j.at("synsets")) lex.put(synset_from_json(s));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, "lexicon state", e.what());
  }
  return lex;
}

struct Alignment {
  std::string synset_id;
  std::vector<std::string> sense_ids;
  double similarity = 0.0;
};

struct AlignmentReport {
  std::vector<Alignment> aligned;           // components attached to existing synsets
  std::vector<std::string> minted;          // newly allocated ids, ascending
  std::vector<std::string> skipped_no_centroid;  // existing synsets we could not compare
};

struct FormResult {
  std::vector<Synset> synsets;  // one per connected component, in component order
  AlignmentReport report;
};

namespace detail {

inline std::string join_unique(const std::vector<std::string>& parts, const std::string& sep) {
  std::vector<std::string> seen;
  std::string out;
  for (const auto& p : parts) {
    if (p.empty() || std::find(seen.begin(), seen.end(), p) != seen.end()) continue;
    if (!out.empty()) out += sep;
    out += p;
    seen.push_back(p);
  }
  return out;
}

inline void append_unique(std::vector<std::string>& into, const std::vector<std::string>& more) {
  for (const auto& x : more) {
    if (std::find(into.begin(), into.end(), x) == into.end()) into.push_back(x);
  }
}

inline void append_unique(std::vector<Member>& into, const std::vector<Member>& more) {
  for (const auto& m : more) {
    bool dup = std::any_of(into.begin(), into.end(),
                           [&](const Member& x) { return x.sense_id == m.sense_id; });
    if (!dup) into.push_back(m);
  }
}

}  // namespace detail

/// Groups validated senses into synsets. Within one category, senses whose
/// centroids reach the similarity threshold are linked and each connected
/// component becomes a synset. A component whose mean centroid reaches the
/// threshold against a same-category synset already in `lexicon` joins it;
/// otherwise a fresh id is allocated. `lexicon` is updated in place.
inline FormResult form_synsets(const std::vector<SenseEntry>& senses, Lexicon& lexicon,
                               const SynsetParams& params) {
  for (const auto& s : senses) {
    if (s.provenance != Provenance::human_validated || !s.category) {
      throw Error(ErrorCode::UnvalidatedSense, s.sense_id);
    }
    if (s.centroid.empty()) throw Error(ErrorCode::MissingCentroid, s.sense_id);
  }
  std::vector<std::size_t> order(senses.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return senses[a].sense_id < senses[b].sense_id; });

  // Union-find over senses, edges only within a category.
  std::vector<std::size_t> parent(senses.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < senses.size(); ++i) {
    for (std::size_t j = i + 1; j < senses.size(); ++j) {
      if (senses[i].category != senses[j].category) continue;
      if (cosine_similarity(senses[i].centroid, senses[j].centroid) >= params.similarity_threshold) {
        parent[find(i)] = find(j);
      }
    }
  }
  // Components in order of their smallest sense id.
  std::vector<std::vector<std::size_t>> components;
  std::map<std::size_t, std::size_t> root_to_component;
  for (auto idx : order) {
    auto r = find(idx);
    auto [it, fresh] = root_to_component.emplace(r, components.size());
    if (fresh) components.emplace_back();
    components[it->second].push_back(idx);
  }

  FormResult result;
  std::set<std::string> skipped;
  for (const auto& comp : components) {
    const auto category = *senses[comp.front()].category;
    std::vector<Vector> cents;
    std::vector<Member> members;
    std::vector<std::string> glosses, examples, sense_ids;
    for (auto idx : comp) {
      const auto& s = senses[idx];
      cents.push_back(s.centroid);
      members.push_back({s.lemma, s.sense_id});
      glosses.push_back(s.gloss);
      if (s.example) examples.push_back(*s.example);
      sense_ids.push_back(s.sense_id);
    }
    const Vector comp_centroid = centroid(cents);

    std::optional<std::string> best_id;
    double best_sim = -2.0;
    for (const auto& [id, existing] : lexicon.synsets()) {
      if (existing.category != category) continue;
      if (!existing.centroid) {
        skipped.insert(id);
        continue;
      }
      double sim = cosine_similarity(comp_centroid, *existing.centroid);
      if (sim > best_sim) {
        best_sim = sim;
        best_id = id;
      }
    }

    Synset out;
    if (best_id && best_sim >= params.similarity_threshold) {
      out = lexicon.at(*best_id);
      detail::append_unique(out.members, members);
      detail::append_unique(out.examples, examples);
      out.origin = Origin::existing;
      lexicon.put(out);
      result.report.aligned.push_back({*best_id, sense_ids, best_sim});
    } else {
      out.synset_id = lexicon.allocate(params.id_range);
      out.category = category;
      out.members = members;
      out.gloss = detail::join_unique(glosses, "; ");
      detail::append_unique(out.examples, examples);
      out.origin = Origin::new_synset;
      out.centroid = comp_centroid;
      lexicon.put(out);
      result.report.minted.push_back(out.synset_id);
    }
    result.synsets.push_back(std::move(out));
  }
  result.report.skipped_no_centroid.assign(skipped.begin(), skipped.end());
  return result;
}

/// Folds `b` into `a` (or the reverse; the smaller id survives).
inline Synset merge_synsets(const std::string& a, const std::string& b, Lexicon& lexicon) {
  if (a == b) throw Error(ErrorCode::IdenticalArguments, a);
  const auto& sa = lexicon.at(a);
  const auto& sb = lexicon.at(b);
  if (sa.category != sb.category) {
    throw Error(ErrorCode::CategoryMismatch, a + "/" + b,
                std::string(to_string(sa.category)) + " vs " + std::string(to_string(sb.category)));
  }
  const auto& survivor = a < b ? sa : sb;
  const auto& absorbed = a < b ? sb : sa;
  Synset out = survivor;
  detail::append_unique(out.members, absorbed.members);
  out.gloss = detail::join_unique({survivor.gloss, absorbed.gloss}, "; ");
  detail::append_unique(out.examples, absorbed.examples);
  if (survivor.centroid && absorbed.centroid) {
    const double wa = static_cast<double>(survivor.members.size());
    const double wb = static_cast<double>(absorbed.members.size());
    Vector c(survivor.centroid->size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = (wa * (*survivor.centroid)[i] + wb * (*absorbed.centroid)[i]) / (wa + wb);
    }
    out.centroid = c;
  } else if (!survivor.centroid) {
    out.centroid = absorbed.centroid;
  }
  const auto retired_id = absorbed.synset_id;
  lexicon.retire(retired_id);
  lexicon.put(out);
  return out;
}

struct DuplicatePair {
  std::string first;
  std::string second;
  double similarity;
};

/// Same-category synset pairs at or above the threshold, most similar first.
/// A work queue for reviewers; nothing is merged.
inline std::vector<DuplicatePair> duplicate_scan(const Lexicon& lexicon, const SynsetParams& params) {
  std::vector<const Synset*> list;
  for (const auto& [id, s] : lexicon.synsets()) {
    if (s.centroid) list.push_back(&s);
  }
  std::vector<DuplicatePair> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = i + 1; j < list.size(); ++j) {
      if (list[i]->category != list[j]->category) continue;
      double sim = cosine_similarity(*list[i]->centroid, *list[j]->centroid);
      if (sim >= params.similarity_threshold) {
        out.push_back({list[i]->synset_id, list[j]->synset_id, sim});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return x.similarity > y.similarity; });
  return out;
}

// ---- audit log -----------------------------------------------------------

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Lexicon mutations with an append-only audit trail. Each entry records
/// enough input to re-run the operation, so replaying the log over the
/// initial lexicon rebuilds the final one.
class SynsetEditor {
 public:
  using Clock = std::function<std::string()>;

  SynsetEditor(Lexicon initial, std::optional<fs::path> log_path = std::nullopt,
               Clock clock = utc_timestamp)
      : lexicon_(std::move(initial)), log_path_(std::move(log_path)), clock_(std::move(clock)) {}

  const Lexicon& lexicon() const { return lexicon_; }
  const std::vector<nlohmann::ordered_json>& log() const { return log_; }

  FormResult form(const std::vector<SenseEntry>& senses, const SynsetParams& params,
                  const std::string& actor) {
    auto result = form_synsets(senses, lexicon_, params);
    nlohmann::ordered_json inputs;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : senses) arr.push_back(to_json(s));
    inputs["senses"] = arr;
    inputs["similarity_threshold"] = params.similarity_threshold;
    inputs["id_range"] = {params.id_range.first, params.id_range.last};
    std::vector<std::string> ids;
    for (const auto& s : result.synsets) ids.push_back(s.synset_id);
    record("form_synsets", actor, inputs, ids);
    return result;
  }

  Synset merge(const std::string& a, const std::string& b, const std::string& actor) {
    auto out = merge_synsets(a, b, lexicon_);
    record("merge_synsets", actor, {{"a", a}, {"b", b}}, out.synset_id);
    return out;
  }

  /// Re-applies every audited operation to `initial`. Throws ReplayError when
  /// an operation yields a different result id than the one recorded.
  static Lexicon replay(Lexicon initial, const std::vector<nlohmann::json>& entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const auto where = "audit entry " + std::to_string(i + 1);
      try {
        const auto op = e.at("op").get<std::string>();
        const auto& in = e.at("inputs");
        if (op == "form_synsets") {
          std::vector<SenseEntry> senses;
          for (const auto& s : in.at("senses")) senses.push_back(sense_entry_from_json(s));
          SynsetParams p;
          p.similarity_threshold = in.at("similarity_threshold").get<double>();
          p.id_range.first = in.at("id_range").at(0).get<std::uint32_t>();
          p.id_range.last = in.at("id_range").at(1).get<std::uint32_t>();
          auto r = form_synsets(senses, initial, p);
          std::vector<std::string> ids;
          for (const auto& s : r.synsets) ids.push_back(s.synset_id);
          if (e.at("result_id") != nlohmann::json(ids)) {
            throw Error(ErrorCode::ReplayError, where, "result ids differ");
          }
        } else if (op == "merge_synsets") {
          auto out = merge_synsets(in.at("a").get<std::string>(), in.at("b").get<std::string>(), initial);
          if (e.at("result_id").get<std::string>() != out.synset_id) {
            throw Error(ErrorCode::ReplayError, where, "result id differs");
          }
        } else {
          throw Error(ErrorCode::ReplayError, where, "unknown op " + op);
        }
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::ReplayError, where, ex.what());
      }
    }
    return initial;
  }

 private:
  template <typename Result>
  void record(const std::string& op, const std::string& actor, const nlohmann::ordered_json& inputs,
              const Result& result_id) {
    nlohmann::ordered_json j;
    j["op"] = op;
    j["timestamp"] = clock_();
    j["actor"] = actor;
    j["inputs"] = inputs;
    j["result_id"] = result_id;
    if (log_path_) append_line_durable(*log_path_, j.dump());
    log_.push_back(std::move(j));
  }

  Lexicon lexicon_;
  std::optional<fs::path> log_path_;
  Clock clock_;
  std::vector<nlohmann::ordered_json> log_;
};

}  // namespace advlex
