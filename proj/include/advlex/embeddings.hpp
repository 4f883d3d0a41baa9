#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/error.hpp"
#include "advlex/util.hpp"

namespace advlex {

using Vector = std::vector<double>;

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

/// Cosine similarity, clamped to [-1, 1].
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "",
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorCode::ZeroNormVector, "");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

/// 1 - cos(u, v), in [0, 2].
inline double cosine_distance(std::span<const double> u, std::span<const double> v) {
  return 1.0 - cosine_similarity(u, v);
}

inline Vector centroid(const std::vector<std::span<const double>>& vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "centroid");
  const auto dim = vectors.front().size();
  Vector out(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "",
                  std::to_string(v.size()) + " vs " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) out[i] += v[i];
  }
  for (auto& x : out) x /= static_cast<double>(vectors.size());
  return out;
}

inline Vector centroid(const std::vector<Vector>& vectors) {
  std::vector<std::span<const double>> views(vectors.begin(), vectors.end());
  return centroid(views);
}

struct EmbeddingRecord {
  std::string occurrence_id;
  Vector vector;
  double masked_entropy = 0.0;  // nats
  std::string model_tag;
};

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t dimension, std::string model_tag)
      : dimension_(dimension), model_tag_(std::move(model_tag)) {
    if (dimension_ < 2) {
      throw Error(ErrorCode::MalformedRecord, "header", "dimension must be >= 2");
    }
  }

  std::size_t dimension() const { return dimension_; }
  const std::string& model_tag() const { return model_tag_; }
  std::size_t size() const { return records_.size(); }
  bool contains(const std::string& id) const { return records_.count(id) > 0; }

  const EmbeddingRecord& at(const std::string& id) const {
    auto it = records_.find(id);
    if (it == records_.end()) throw Error(ErrorCode::MissingEmbedding, id);
    return it->second;
  }

  const std::map<std::string, EmbeddingRecord>& records() const { return records_; }

  /// Validates and inserts one record.
  void insert(EmbeddingRecord rec) {
    const auto& id = rec.occurrence_id;
    if (rec.vector.size() != dimension_) {
      throw Error(ErrorCode::DimensionMismatch, id,
                  "expected " + std::to_string(dimension_) + " entries, got " +
                      std::to_string(rec.vector.size()));
    }
    for (double x : rec.vector) {
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteVector, id);
    }
    if (!(norm(rec.vector) > 0.0)) throw Error(ErrorCode::ZeroNormVector, id);
    if (!std::isfinite(rec.masked_entropy) || rec.masked_entropy < 0.0) {
      throw Error(ErrorCode::MalformedRecord, id, "masked_entropy must be finite and >= 0");
    }
    if (rec.model_tag.empty()) rec.model_tag = model_tag_;
    if (records_.count(id)) throw Error(ErrorCode::DuplicateOccurrence, id);
    records_.emplace(id, std::move(rec));
  }

 private:
  std::size_t dimension_ = 0;
  std::string model_tag_;
  std::map<std::string, EmbeddingRecord> records_;
};

namespace detail {

inline nlohmann::json parse_json_line(std::string_view line, std::size_t no) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no), e.what());
  }
}

}  // namespace detail

/// Header line `{"dimension": D, "model_tag": ...}`, then one record per
/// line: `{"occurrence_id", "vector", "masked_entropy", "model_tag"}`.
inline EmbeddingStore parse_store(std::string_view content) {
  EmbeddingStore store;
  bool have_header = false;
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    if (trim(line).empty()) return;
    auto j = detail::parse_json_line(line, no);
    const auto where = "line " + std::to_string(no);
    if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, where, "expected object");
    try {
      if (!have_header) {
        auto dim = j.at("dimension").get<long long>();
        if (dim < 2) throw Error(ErrorCode::MalformedRecord, where, "dimension must be >= 2");
        store = EmbeddingStore(static_cast<std::size_t>(dim),
                               j.value("model_tag", std::string{}));
        have_header = true;
        return;
      }
      EmbeddingRecord rec;
      rec.occurrence_id = j.at("occurrence_id").get<std::string>();
      const auto& vec = j.at("vector");
      if (!vec.is_array()) throw Error(ErrorCode::MalformedRecord, where, "vector must be an array");
      rec.vector.reserve(vec.size());
      for (const auto& x : vec) {
        if (!x.is_number()) throw Error(ErrorCode::NonFiniteVector, rec.occurrence_id);
        rec.vector.push_back(x.get<double>());
      }
      rec.masked_entropy = j.at("masked_entropy").get<double>();
      rec.model_tag = j.value("model_tag", std::string{});
      store.insert(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where, e.what());
    }
  });
  if (!have_header) throw Error(ErrorCode::MalformedRecord, "header", "missing header line");
  return store;
}

inline EmbeddingStore load_store(const fs::path& path) { return parse_store(read_file(path)); }

/// Serializes records in the given order (the adapter writes input order).
inline std::string store_to_jsonl(std::size_t dimension, const std::string& model_tag,
                                  const std::vector<EmbeddingRecord>& records) {
  std::string out;
  nlohmann::ordered_json header;
  header["dimension"] = dimension;
  header["model_tag"] = model_tag;
  out += header.dump() + "\n";
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["occurrence_id"] = r.occurrence_id;
    j["vector"] = r.vector;
    j["masked_entropy"] = r.masked_entropy;
    j["model_tag"] = r.model_tag.empty() ? model_tag : r.model_tag;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace advlex
