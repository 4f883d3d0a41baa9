#pragma once

#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/corpus.hpp"
#include "advlex/error.hpp"
#include "advlex/senses.hpp"
#include "advlex/synsets.hpp"
#include "advlex/util.hpp"

namespace advlex {

/// Every threshold the pipeline uses, in one place.
///
/// File format: one `key = value` per line, `#` starts a comment, blank
/// lines ignored. Relative paths resolve against the config file's
/// directory. A relative run_dir resolves against $ADVLEX_RUN_ROOT when set.
struct RunConfig {
  std::vector<fs::path> corpus_paths;
  CorpusFormat corpus_format = CorpusFormat::plain_text;
  fs::path lexicon;          // extraction lexicon
  fs::path cue_lexicon;      // optional; empty disables cue hits
  fs::path embeddings;       // empty means <run_dir>/embeddings.jsonl
  fs::path existing_lexicon; // optional OEWN-style YAML to align against
  ClusterParams cluster;
  ExampleFilter example;
  SynsetParams synset;
  std::uint64_t seed = 0;
  std::size_t demo_lemmas = 5;
  std::size_t demo_senses = 5;
  fs::path run_dir = "run";

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "corpus.paths",      "corpus.format",     "lexicon",           "cue_lexicon",
        "embeddings",        "existing_lexicon",  "cluster.threshold", "cluster.min_size",
        "cluster.linkage",   "example.min_tokens", "example.max_tokens", "synset.threshold",
        "synset.id_min",     "synset.id_max",     "seed",              "demo.lemmas",
        "demo.senses",       "run_dir"};
    return k;
  }

  fs::path embeddings_path() const {
    return embeddings.empty() ? run_dir / "embeddings.jsonl" : embeddings;
  }

  /// Sets one key from its textual value. `base` anchors relative paths.
  void set(const std::string& key, const std::string& raw, const fs::path& base = {}) {
    const std::string value(trim(raw));
    auto path = [&](const std::string& v) -> fs::path {
      if (v.empty()) return {};
      fs::path p(v);
      return p.is_absolute() || base.empty() ? p : base / p;
    };
    if (key == "corpus.paths") {
      corpus_paths.clear();
      for (const auto& part : split(value, ',')) {
        auto t = std::string(trim(part));
        if (!t.empty()) corpus_paths.push_back(path(t));
      }
    } else if (key == "corpus.format") {
      corpus_format = wrap(key, [&] { return parse_corpus_format(value); });
    } else if (key == "lexicon") {
      lexicon = path(value);
    } else if (key == "cue_lexicon") {
      cue_lexicon = path(value);
    } else if (key == "embeddings") {
      embeddings = path(value);
    } else if (key == "existing_lexicon") {
      existing_lexicon = path(value);
    } else if (key == "cluster.threshold") {
      cluster.distance_threshold = number<double>(key, value);
      if (!(cluster.distance_threshold >= 0.0 && cluster.distance_threshold <= 2.0)) {
        throw Error(ErrorCode::ConfigError, key, "must lie in [0, 2]");
      }
    } else if (key == "cluster.min_size") {
      cluster.min_cluster_size = positive(key, value);
    } else if (key == "cluster.linkage") {
      cluster.linkage = wrap(key, [&] { return parse_linkage(value); });
    } else if (key == "example.min_tokens") {
      example.min_tokens = positive(key, value);
    } else if (key == "example.max_tokens") {
      example.max_tokens = positive(key, value);
    } else if (key == "synset.threshold") {
      synset.similarity_threshold = number<double>(key, value);
      if (!(synset.similarity_threshold >= -1.0 && synset.similarity_threshold <= 1.0)) {
        throw Error(ErrorCode::ConfigError, key, "must lie in [-1, 1]");
      }
    } else if (key == "synset.id_min") {
      synset.id_range.first = number<std::uint32_t>(key, value);
    } else if (key == "synset.id_max") {
      synset.id_range.last = number<std::uint32_t>(key, value);
    } else if (key == "seed") {
      seed = number<std::uint64_t>(key, value);
    } else if (key == "demo.lemmas") {
      demo_lemmas = positive(key, value);
    } else if (key == "demo.senses") {
      demo_senses = positive(key, value);
    } else if (key == "run_dir") {
      run_dir = path(value);
    } else {
      throw Error(ErrorCode::ConfigError, key, "unknown key");
    }
  }

  /// Cross-field checks, run once after all sources are applied.
  void check() const {
    if (example.min_tokens > example.max_tokens) {
      throw Error(ErrorCode::ConfigError, "example", "min_tokens exceeds max_tokens");
    }
    if (synset.id_range.first > synset.id_range.last || synset.id_range.last > 99999999) {
      throw Error(ErrorCode::ConfigError, "synset.id_min", "id range must be ascending and 8 digits");
    }
  }

  void apply_text(std::string_view content, const fs::path& base) {
    for_each_line(content, [&](std::string_view line, std::size_t no) {
      auto hash = line.find('#');
      auto t = trim(hash == std::string_view::npos ? line : line.substr(0, hash));
      if (t.empty()) return;
      auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(no), "expected key = value");
      }
      set(std::string(trim(t.substr(0, eq))), std::string(t.substr(eq + 1)), base);
    });
  }

  void apply_file(const fs::path& file) {
    std::string content;
    try {
      content = read_file(file);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, file.string(), "cannot read config file");
    }
    apply_text(content, file.parent_path());
  }

  /// Makes run_dir absolute against $ADVLEX_RUN_ROOT when that is set.
  void resolve_run_dir() {
    if (run_dir.is_absolute()) return;
    if (const char* root = std::getenv("ADVLEX_RUN_ROOT"); root && *root) {
      run_dir = fs::path(root) / run_dir;
    }
  }

  /// Canonical form of the settings that influence stage outputs.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    std::vector<std::string> paths;
    for (const auto& p : corpus_paths) paths.push_back(p.generic_string());
    j["corpus.paths"] = paths;
    j["corpus.format"] = corpus_format == CorpusFormat::jsonl ? "jsonl" : "text";
    j["lexicon"] = lexicon.generic_string();
    j["cue_lexicon"] = cue_lexicon.generic_string();
    j["embeddings"] = embeddings.generic_string();
    j["existing_lexicon"] = existing_lexicon.generic_string();
    j["cluster.threshold"] = cluster.distance_threshold;
    j["cluster.min_size"] = cluster.min_cluster_size;
    j["cluster.linkage"] = to_string(cluster.linkage);
    j["example.min_tokens"] = example.min_tokens;
    j["example.max_tokens"] = example.max_tokens;
    j["synset.threshold"] = synset.similarity_threshold;
    j["synset.id_min"] = synset.id_range.first;
    j["synset.id_max"] = synset.id_range.last;
    j["seed"] = seed;
    j["demo.lemmas"] = demo_lemmas;
    j["demo.senses"] = demo_senses;
    return j;
  }

  std::string hash() const { return hex64(fnv1a64(to_json().dump())); }

 private:
  template <typename Fn>
  static std::invoke_result_t<Fn> wrap(const std::string& key, Fn&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, key, e.what());
    }
  }

  template <typename T>
  static T number(const std::string& key, const std::string& v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
      throw Error(ErrorCode::ConfigError, key, "not a valid number: '" + v + "'");
    }
    return out;
  }

  static std::size_t positive(const std::string& key, const std::string& v) {
    auto n = number<std::size_t>(key, v);
    if (n == 0) throw Error(ErrorCode::ConfigError, key, "must be positive");
    return n;
  }
};

/// Defaults, then the config file, then `key=value` overrides, in that order.
inline RunConfig load_config(const std::optional<fs::path>& file,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  RunConfig cfg;
  if (file) cfg.apply_file(*file);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.check();
  cfg.resolve_run_dir();
  return cfg;
}

}  // namespace advlex
