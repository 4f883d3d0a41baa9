#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/error.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex {

struct AnnotationSet {
  std::string annotator_id;
  std::map<std::string, Category> labels;  // item_id -> label

  void add(std::string item, Category c) {
    if (!labels.emplace(item, c).second) {
      throw Error(ErrorCode::MalformedRecord, item, "item labeled twice by " + annotator_id);
    }
  }

  /// CSV `item_id,category`, optional header row `item_id,category`.
  static AnnotationSet parse_csv(std::string annotator, std::string_view content) {
    AnnotationSet set{std::move(annotator), {}};
    for_each_line(content, [&](std::string_view line, std::size_t no) {
      auto t = trim(line);
      if (t.empty() || t.front() == '#') return;
      auto comma = t.find(',');
      if (comma == std::string_view::npos) {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no),
                    "expected item_id,category");
      }
      auto item = std::string(trim(t.substr(0, comma)));
      auto label = trim(t.substr(comma + 1));
      if (no == 1 && item == "item_id" && label == "category") return;
      if (item.empty()) {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(no), "empty item id");
      }
      set.add(std::move(item), parse_category(label));
    });
    return set;
  }

  static AnnotationSet load_csv(const fs::path& path) {
    return parse_csv(path.stem().string(), read_file(path));
  }
};

/// Rows are the first annotator's labels, columns the second's, both in
/// taxonomy order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kCategoryCount>, kCategoryCount> counts{};
  std::uint64_t n = 0;

  void add(Category row, Category col, std::uint64_t k = 1) {
    counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] += k;
    n += k;
  }

  ConfusionMatrix transposed() const {
    ConfusionMatrix t;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      for (std::size_t j = 0; j < kCategoryCount; ++j) t.counts[j][i] = counts[i][j];
    }
    t.n = n;
    return t;
  }
};

struct ConfusionReport {
  ConfusionMatrix matrix;
  std::vector<std::string> excluded;  // items labeled by only one annotator
};

inline ConfusionReport confusion(const AnnotationSet& a, const AnnotationSet& b) {
  ConfusionReport r;
  for (const auto& [item, la] : a.labels) {
    auto it = b.labels.find(item);
    if (it == b.labels.end()) {
      r.excluded.push_back(item);
      continue;
    }
    r.matrix.add(la, it->second);
  }
  for (const auto& [item, lb] : b.labels) {
    if (!a.labels.count(item)) r.excluded.push_back(item);
  }
  std::sort(r.excluded.begin(), r.excluded.end());
  if (r.matrix.n == 0) throw Error(ErrorCode::NoSharedItems, a.annotator_id + "/" + b.annotator_id);
  return r;
}

/// kappa = (p_o - p_e) / (1 - p_e) with p_o = trace / n and
/// p_e = sum_i row_i * col_i / n^2.
inline double cohen_kappa(const ConfusionMatrix& m) {
  if (m.n == 0) throw Error(ErrorCode::NoSharedItems, "", "empty matrix");
  std::uint64_t trace = 0;
  std::array<std::uint64_t, kCategoryCount> rows{}, cols{};
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    trace += m.counts[i][i];
    for (std::size_t j = 0; j < kCategoryCount; ++j) {
      rows[i] += m.counts[i][j];
      cols[j] += m.counts[i][j];
    }
  }
  std::uint64_t chance = 0;  // n^2 * p_e, kept integral
  for (std::size_t i = 0; i < kCategoryCount; ++i) chance += rows[i] * cols[i];
  const double n = static_cast<double>(m.n);
  const std::uint64_t n2 = m.n * m.n;
  if (chance == n2) {
    if (trace == m.n) return 1.0;
    throw Error(ErrorCode::UndefinedKappa, "", "chance agreement is 1 but observed is not");
  }
  // (trace*n - chance) / (n^2 - chance), exact in the numerator and denominator.
  const double num = static_cast<double>(trace) * n - static_cast<double>(chance);
  const double den = static_cast<double>(n2 - chance);
  return num / den;
}

inline nlohmann::ordered_json kappa_report_json(const ConfusionReport& r, double kappa) {
  nlohmann::ordered_json j;
  j["kappa"] = kappa;
  j["n"] = r.matrix.n;
  j["excluded"] = r.excluded;
  nlohmann::ordered_json cats = nlohmann::ordered_json::array();
  for (auto c : kAllCategories) cats.push_back(std::string(to_string(c)));
  j["categories"] = cats;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.matrix.counts) rows.push_back(row);
  j["counts"] = rows;
  return j;
}

}  // namespace advlex
