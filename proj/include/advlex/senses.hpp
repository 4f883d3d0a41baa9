#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/corpus.hpp"
#include "advlex/embeddings.hpp"
#include "advlex/error.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex {

enum class Linkage { average, complete, single };

constexpr std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "";
}

inline Linkage parse_linkage(std::string_view s) {
  if (s == "average") return Linkage::average;
  if (s == "complete") return Linkage::complete;
  if (s == "single") return Linkage::single;
  throw Error(ErrorCode::ConfigError, std::string(s), "unknown linkage");
}

struct ClusterParams {
  double distance_threshold = 0.4;
  std::size_t min_cluster_size = 100;
  Linkage linkage = Linkage::average;
};

/// Bottom-up agglomerative clustering over cosine distance.
///
/// `keys` order clusters for tie-breaking: a cluster's key is the smallest
/// key among its members, and among equally distant pairs the pair with the
/// lexicographically smallest (lower key, higher key) merges first. Merging
/// continues while the closest pair is within `threshold`.
///
/// Returns every cluster (no size filtering) as sorted index lists, ordered
/// by their smallest index.
inline std::vector<std::vector<std::size_t>> agglomerate(
    const std::vector<std::span<const double>>& points,
    const std::vector<std::string>& keys, Linkage linkage, double threshold) {
  const std::size_t n = points.size();
  if (keys.size() != n) throw Error(ErrorCode::EmptyInput, "agglomerate", "keys/points size");
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  if (n < 2) return members;

  std::vector<double> dist(n * n, 0.0);
  auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      D(i, j) = D(j, i) = cosine_distance(points[i], points[j]);
    }
  }

  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::string> key(keys);

  // True when pair (a,b) at distance d precedes pair (c,e) at distance f.
  auto before = [&](double d, std::size_t a, std::size_t b, double f, std::size_t c,
                    std::size_t e) {
    if (d != f) return d < f;
    const auto& a1 = std::min(key[a], key[b]);
    const auto& a2 = std::max(key[a], key[b]);
    const auto& c1 = std::min(key[c], key[e]);
    const auto& c2 = std::max(key[c], key[e]);
    if (a1 != c1) return a1 < c1;
    return a2 < c2;
  };

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> nn(n, none);
  auto recompute_nn = [&](std::size_t i) {
    nn[i] = none;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (nn[i] == none || before(D(i, j), i, j, D(i, nn[i]), i, nn[i])) nn[i] = j;
    }
  };
  for (std::size_t i = 0; i < n; ++i) recompute_nn(i);

  std::size_t remaining = n;
  while (remaining > 1) {
    std::size_t a = none;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == none) continue;
      if (a == none || before(D(i, nn[i]), i, nn[i], D(a, nn[a]), a, nn[a])) a = i;
    }
    std::size_t b = nn[a];
    if (D(a, b) > threshold) break;
    if (b < a) std::swap(a, b);

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      double merged = 0.0;
      switch (linkage) {
        case Linkage::single: merged = std::min(D(k, a), D(k, b)); break;
        case Linkage::complete: merged = std::max(D(k, a), D(k, b)); break;
        case Linkage::average:
          merged = (static_cast<double>(size[a]) * D(k, a) +
                    static_cast<double>(size[b]) * D(k, b)) /
                   static_cast<double>(size[a] + size[b]);
          break;
      }
      D(k, a) = D(a, k) = merged;
    }
    active[b] = false;
    size[a] += size[b];
    key[a] = std::min(key[a], key[b]);
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    --remaining;

    recompute_nn(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        recompute_nn(k);
      } else if (before(D(k, a), k, a, D(k, nn[k]), k, nn[k])) {
        nn[k] = a;
      }
    }
  }

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    std::sort(members[i].begin(), members[i].end());
    out.push_back(std::move(members[i]));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

enum class ClusterStatus { candidate, validated, discarded, merged };

struct SenseCluster {
  std::string cluster_id;
  std::string lemma;
  std::vector<std::string> member_ids;  // sorted
  Vector centroid;
  ClusterStatus status = ClusterStatus::candidate;
  std::string merged_into;  // set when status == merged
};

struct ResidualEntry {
  std::string occurrence_id;
  std::string lemma;
  std::string reason;
};

struct ClusteringResult {
  std::vector<SenseCluster> clusters;
  std::vector<ResidualEntry> residual;
};

inline std::string cluster_id_for(const std::string& lemma,
                                  const std::vector<std::string>& sorted_members) {
  std::uint64_t h = fnv1a64(lemma);
  for (const auto& m : sorted_members) {
    h = fnv1a64("\x1f", h);
    h = fnv1a64(m, h);
  }
  return hex64(h);
}

/// Clusters one lemma's occurrences into candidate senses. Clusters below
/// `min_cluster_size` are dropped into the residual list. Output order is
/// descending size, then smallest member id.
inline ClusteringResult cluster_senses_with_residual(
    const std::string& lemma, const std::vector<AdverbOccurrence>& occurrences,
    const EmbeddingStore& store, const ClusterParams& params) {
  std::vector<const AdverbOccurrence*> occs;
  occs.reserve(occurrences.size());
  for (const auto& o : occurrences) occs.push_back(&o);
  std::sort(occs.begin(), occs.end(), [](const auto* a, const auto* b) {
    return a->occurrence_id < b->occurrence_id;
  });
  std::vector<std::string> ids;
  std::vector<std::span<const double>> points;
  for (std::size_t i = 0; i < occs.size(); ++i) {
    const auto& o = *occs[i];
    if (o.lemma != lemma) {
      throw Error(ErrorCode::MalformedRecord, o.occurrence_id,
                  "lemma '" + o.lemma + "' does not match '" + lemma + "'");
    }
    if (i > 0 && occs[i - 1]->occurrence_id == o.occurrence_id) {
      throw Error(ErrorCode::DuplicateOccurrence, o.occurrence_id);
    }
    const auto& rec = store.at(o.occurrence_id);
    ids.push_back(o.occurrence_id);
    points.emplace_back(rec.vector);
  }

  auto groups = agglomerate(points, ids, params.linkage, params.distance_threshold);

  ClusteringResult result;
  for (const auto& g : groups) {
    if (g.size() < params.min_cluster_size) {
      for (auto i : g) {
        result.residual.push_back({ids[i], lemma,
                                   "cluster_size " + std::to_string(g.size()) +
                                       " < min_cluster_size " +
                                       std::to_string(params.min_cluster_size)});
      }
      continue;
    }
    SenseCluster c;
    c.lemma = lemma;
    std::vector<std::span<const double>> vecs;
    for (auto i : g) {
      c.member_ids.push_back(ids[i]);
      vecs.push_back(points[i]);
    }
    c.centroid = centroid(vecs);
    c.cluster_id = cluster_id_for(lemma, c.member_ids);
    result.clusters.push_back(std::move(c));
  }
  std::sort(result.clusters.begin(), result.clusters.end(), [](const auto& x, const auto& y) {
    if (x.member_ids.size() != y.member_ids.size()) {
      return x.member_ids.size() > y.member_ids.size();
    }
    return x.member_ids.front() < y.member_ids.front();
  });
  std::sort(result.residual.begin(), result.residual.end(),
            [](const auto& x, const auto& y) { return x.occurrence_id < y.occurrence_id; });
  return result;
}

inline std::vector<SenseCluster> cluster_senses(const std::string& lemma,
                                                const std::vector<AdverbOccurrence>& occurrences,
                                                const EmbeddingStore& store,
                                                const ClusterParams& params) {
  return cluster_senses_with_residual(lemma, occurrences, store, params).clusters;
}

struct ExampleFilter {
  std::size_t min_tokens = 3;  // inclusive
  std::size_t max_tokens = 20;  // inclusive

  bool admits(std::size_t token_count) const {
    return token_count >= min_tokens && token_count <= max_tokens;
  }
};

struct ExampleChoice {
  std::string sentence;
  std::string occurrence_id;
};

/// Lowest masked-token entropy among members whose sentence length falls in
/// the window; ties go to the smaller occurrence id. nullopt means no member
/// qualifies and an annotator has to supply one.
inline std::optional<ExampleChoice> select_example(
    const SenseCluster& cluster, const std::map<std::string, AdverbOccurrence>& occurrences,
    const EmbeddingStore& store, const ExampleFilter& filter) {
  const AdverbOccurrence* best = nullptr;
  double best_entropy = 0.0;
  for (const auto& id : cluster.member_ids) {
    const double entropy = store.at(id).masked_entropy;
    auto it = occurrences.find(id);
    if (it == occurrences.end()) {
      throw Error(ErrorCode::MalformedRecord, id, "occurrence record missing");
    }
    const auto& occ = it->second;
    if (!filter.admits(occ.token_count)) continue;
    if (!best || entropy < best_entropy ||
        (entropy == best_entropy && id < best->occurrence_id)) {
      best = &occ;
      best_entropy = entropy;
    }
  }
  if (!best) return std::nullopt;
  return ExampleChoice{best->sentence_text, best->occurrence_id};
}

enum class Provenance { auto_draft, human_validated };

constexpr std::string_view to_string(Provenance p) {
  return p == Provenance::auto_draft ? "auto" : "human_validated";
}

struct SenseEntry {
  std::string sense_id;
  std::string lemma;
  std::optional<Category> category;
  std::string gloss;
  std::optional<std::string> example;
  std::optional<std::string> example_occurrence_id;
  std::string cluster_id;
  Provenance provenance = Provenance::auto_draft;
  bool example_verified = false;
  Vector centroid;

  /// The invariant a human_validated entry must satisfy.
  bool promotable() const {
    return category.has_value() && !gloss.empty() && example.has_value() && example_verified;
  }

  friend bool operator==(const SenseEntry&, const SenseEntry&) = default;
};

inline std::string sense_id_for(const std::string& lemma, std::size_t sense_number) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", sense_number);
  return lemma + ".r." + buf;
}

/// Pre-review draft: template gloss, top suggested category, provenance auto.
/// `sense_number` is the 1-based rank of the cluster within its lemma.
inline SenseEntry draft_entry(const SenseCluster& cluster, std::size_t sense_number,
                              const std::optional<ExampleChoice>& example,
                              const std::vector<RankedCategory>& suggestion) {
  SenseEntry e;
  e.lemma = cluster.lemma;
  e.sense_id = sense_id_for(cluster.lemma, sense_number);
  e.cluster_id = cluster.cluster_id;
  e.centroid = cluster.centroid;
  if (!suggestion.empty()) e.category = suggestion.front().category;
  e.gloss = cluster.lemma + " (sense " + std::to_string(sense_number) + ")";
  if (example) {
    e.gloss += ": as in '" + example->sentence + "'";
    e.example = example->sentence;
    e.example_occurrence_id = example->occurrence_id;
  }
  return e;
}

// ---- serialization -------------------------------------------------------

inline std::string_view to_string(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::candidate: return "candidate";
    case ClusterStatus::validated: return "validated";
    case ClusterStatus::discarded: return "discarded";
    case ClusterStatus::merged: return "merged_into";
  }
  return "";
}

inline nlohmann::ordered_json to_json(const SenseCluster& c) {
  nlohmann::ordered_json j;
  j["cluster_id"] = c.cluster_id;
  j["lemma"] = c.lemma;
  j["member_ids"] = c.member_ids;
  j["centroid"] = c.centroid;
  j["status"] = to_string(c.status);
  if (c.status == ClusterStatus::merged) j["merged_into"] = c.merged_into;
  return j;
}

inline SenseCluster cluster_from_json(const nlohmann::json& j) {
  SenseCluster c;
  c.cluster_id = j.at("cluster_id").get<std::string>();
  c.lemma = j.at("lemma").get<std::string>();
  c.member_ids = j.at("member_ids").get<std::vector<std::string>>();
  c.centroid = j.at("centroid").get<Vector>();
  auto status = j.at("status").get<std::string>();
  if (status == "candidate") c.status = ClusterStatus::candidate;
  else if (status == "validated") c.status = ClusterStatus::validated;
  else if (status == "discarded") c.status = ClusterStatus::discarded;
  else if (status == "merged_into") {
    c.status = ClusterStatus::merged;
    c.merged_into = j.at("merged_into").get<std::string>();
  } else {
    throw Error(ErrorCode::MalformedRecord, c.cluster_id, "unknown status " + status);
  }
  return c;
}

inline nlohmann::ordered_json to_json(const ResidualEntry& r) {
  nlohmann::ordered_json j;
  j["occurrence_id"] = r.occurrence_id;
  j["lemma"] = r.lemma;
  j["reason"] = r.reason;
  return j;
}

inline nlohmann::ordered_json to_json(const SenseEntry& e) {
  nlohmann::ordered_json j;
  j["sense_id"] = e.sense_id;
  j["lemma"] = e.lemma;
  j["category"] = e.category ? nlohmann::ordered_json(std::string(to_string(*e.category)))
                             : nlohmann::ordered_json(nullptr);
  j["gloss"] = e.gloss;
  j["example"] = e.example ? nlohmann::ordered_json(*e.example) : nlohmann::ordered_json(nullptr);
  j["example_occurrence_id"] = e.example_occurrence_id
                                   ? nlohmann::ordered_json(*e.example_occurrence_id)
                                   : nlohmann::ordered_json(nullptr);
  j["cluster_id"] = e.cluster_id;
  j["provenance"] = to_string(e.provenance);
  j["example_verified"] = e.example_verified;
  j["centroid"] = e.centroid;
  return j;
}

inline SenseEntry sense_entry_from_json(const nlohmann::json& j) {
  SenseEntry e;
  try {
    e.sense_id = j.at("sense_id").get<std::string>();
    e.lemma = j.at("lemma").get<std::string>();
    if (!j.at("category").is_null()) e.category = parse_category(j["category"].get<std::string>());
    e.gloss = j.at("gloss").get<std::string>();
    if (!j.at("example").is_null()) e.example = j["example"].get<std::string>();
    if (j.contains("example_occurrence_id") && !j["example_occurrence_id"].is_null()) {
      e.example_occurrence_id = j["example_occurrence_id"].get<std::string>();
    }
    e.cluster_id = j.at("cluster_id").get<std::string>();
    auto prov = j.at("provenance").get<std::string>();
    if (prov == "auto") e.provenance = Provenance::auto_draft;
    else if (prov == "human_validated") e.provenance = Provenance::human_validated;
    else throw Error(ErrorCode::MalformedRecord, e.sense_id, "unknown provenance " + prov);
    e.example_verified = j.value("example_verified", false);
    if (j.contains("centroid")) e.centroid = j["centroid"].get<Vector>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, e.sense_id, ex.what());
  }
  return e;
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) out += to_json(item).dump() + "\n";
  return out;
}

inline std::vector<nlohmann::json> parse_jsonl(std::string_view content) {
  std::vector<nlohmann::json> out;
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    if (trim(line).empty()) return;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no), e.what());
    }
  });
  return out;
}

inline std::vector<SenseCluster> parse_clusters(std::string_view content) {
  std::vector<SenseCluster> out;
  for (const auto& j : parse_jsonl(content)) out.push_back(cluster_from_json(j));
  return out;
}

inline std::vector<SenseEntry> parse_sense_entries(std::string_view content) {
  std::vector<SenseEntry> out;
  for (const auto& j : parse_jsonl(content)) out.push_back(sense_entry_from_json(j));
  return out;
}

}  // namespace advlex
