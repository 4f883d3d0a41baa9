#pragma once

// Synthetic corpus with planted senses, for exercising the pipeline without
// an embedding model. Every sentence carries exactly one adverb; each
// (lemma, sense) gets a Gaussian blob of pseudo-embeddings around its own
// axis and a known prototypical example.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/corpus.hpp"
#include "advlex/embeddings.hpp"
#include "advlex/error.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex::demo {

// std:: distributions differ between standard libraries; these do not.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gaussian(std::mt19937_64& rng) {
  double u1 = unit_double(rng);
  while (u1 <= 0.0) u1 = unit_double(rng);
  const double u2 = unit_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

struct LemmaSpec {
  std::string lemma;
  Category category;  // label of the first planted sense
  bool initial;       // "Lemma, clause." rather than "Clause lemma."
};

inline const std::vector<LemmaSpec>& lemma_pool() {
  static const std::vector<LemmaSpec> pool = {
      {"hopefully", Category::speaker_oriented, true},
      {"thus", Category::conjunctive, true},
      {"significantly", Category::degree, false},
      {"previously", Category::temporal, true},
      {"inland", Category::spatial, false},
      {"alone", Category::focus, false},
      {"semantically", Category::domain, true},
      {"biannually", Category::frequency, false},
      {"horrifyingly", Category::manner, true},
      {"superstitiously", Category::subject_oriented, true},
  };
  return pool;
}

struct Params {
  std::uint64_t seed = 7;
  std::size_t lemmas = 5;
  std::size_t senses = 5;
  std::size_t sentences_per_sense = 20;
  std::size_t dimension = 32;
  double noise = 0.05;
  std::size_t example_tokens = 12;
  std::size_t long_tokens = 24;
};

struct PlantedSentence {
  std::string text;
  std::size_t sense = 0;  // 0-based within the lemma
  double entropy = 0.0;
  Vector vector;
};

struct PlantedLemma {
  LemmaSpec spec;
  std::vector<Category> categories;  // per sense
  std::vector<std::string> examples; // per sense, the expected prototypical example
  std::vector<PlantedSentence> sentences;  // file order
};

struct Demo {
  Params params;
  std::vector<PlantedLemma> lemmas;
};

namespace detail {

inline const std::vector<std::string> kSubjects = {
    "the committee", "the engineer", "my neighbour", "the council", "our team",   "the farmer",
    "the pilot",     "the teacher",  "the captain",  "the editor",  "the students", "the doctor"};
inline const std::vector<std::string> kVerbs = {"approved", "changed",  "opened", "reviewed",
                                                "moved",    "repaired", "studied", "signed",
                                                "painted",  "measured", "sold",    "described"};
inline const std::vector<std::string> kNouns = {"plan",     "bridge", "report",  "garden",
                                                "contract", "harbour", "budget", "engine",
                                                "letter",   "map",    "fence",   "schedule"};
inline const std::vector<std::string> kAdjectives = {"new",   "old",    "small",  "large",
                                                     "green", "wooden", "local",  "second",
                                                     "final", "narrow", "public", "quiet"};
inline const std::vector<std::string> kPhrases = {
    "near the river",   "after the meeting",   "before the storm",   "in the village",
    "with the crew",    "during the festival", "across the valley",  "behind the station",
    "for the museum",   "under the stone arch",    "beyond the hills",   "at the market",
    "through the forest", "from the coast"};

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

/// A clause of exactly `words` words (at least five).
inline std::string clause(std::mt19937_64& rng, std::size_t words) {
  const std::size_t extra = words - 5;
  const std::size_t phrases = extra / 3;
  const std::size_t adjectives = extra % 3;
  std::string out = kSubjects[pick(rng, kSubjects.size())] + " " + kVerbs[pick(rng, kVerbs.size())] + " the";
  std::set<std::size_t> used;
  for (std::size_t i = 0; i < adjectives; ++i) {
    std::size_t a;
    do a = pick(rng, kAdjectives.size());
    while (!used.insert(a).second);
    out += " " + kAdjectives[a];
  }
  out += " " + kNouns[pick(rng, kNouns.size())];
  std::set<std::size_t> used_phrases;
  for (std::size_t i = 0; i < phrases; ++i) {
    std::size_t p;
    do p = pick(rng, kPhrases.size());
    while (!used_phrases.insert(p).second);
    out += " " + kPhrases[p];
  }
  return out;
}

/// A sentence of exactly `tokens` tokens containing `lemma` once.
inline std::string sentence(std::mt19937_64& rng, const LemmaSpec& spec, std::size_t tokens) {
  if (tokens == 2) return capitalize(spec.lemma) + ".";
  if (spec.initial) return capitalize(spec.lemma) + ", " + clause(rng, tokens - 3) + ".";
  return capitalize(clause(rng, tokens - 2)) + " " + spec.lemma + ".";
}

}  // namespace detail

/// Deterministic in `params`. Per sense, three planted sentences carry the
/// lowest entropies: a 2-token one, a long one, and the in-window example
/// (the expected selection), in that entropy order.
inline Demo generate(const Params& p) {
  if (p.lemmas == 0 || p.lemmas > lemma_pool().size()) {
    throw Error(ErrorCode::ConfigError, "demo.lemmas",
                "must be between 1 and " + std::to_string(lemma_pool().size()));
  }
  if (p.senses == 0 || p.senses > p.dimension || p.senses > kCategoryCount) {
    throw Error(ErrorCode::ConfigError, "demo.senses", "must be between 1 and 10");
  }
  if (p.sentences_per_sense < 4) {
    throw Error(ErrorCode::ConfigError, "demo", "need at least 4 sentences per sense");
  }
  std::mt19937_64 rng(p.seed);
  std::set<std::string> seen;
  Demo demo{p, {}};
  for (std::size_t l = 0; l < p.lemmas; ++l) {
    PlantedLemma pl;
    pl.spec = lemma_pool()[l];
    const auto base = static_cast<std::size_t>(pl.spec.category);
    for (std::size_t s = 0; s < p.senses; ++s) {
      pl.categories.push_back(kAllCategories[(base + s) % kCategoryCount]);
    }
    pl.examples.resize(p.senses);
    for (std::size_t s = 0; s < p.senses; ++s) {
      const std::size_t axis = (l * p.senses + s) % p.dimension;
      for (std::size_t i = 0; i < p.sentences_per_sense; ++i) {
        std::size_t tokens;
        double entropy;
        if (i == 0) {
          tokens = 2;
          entropy = 0.05 + 0.01 * unit_double(rng);
        } else if (i == 1) {
          tokens = p.long_tokens;
          entropy = 0.15 + 0.01 * unit_double(rng);
        } else if (i == 2) {
          tokens = p.example_tokens;
          entropy = 0.25 + 0.01 * unit_double(rng);
        } else {
          tokens = 8 + pick(rng, 13);  // 8..20
          entropy = 0.5 + 2.0 * unit_double(rng);
        }
        std::string text;
        if (tokens == 2) {
          // Bare "Lemma." repeats across senses, so vary case and terminal.
          static const char* kTerminals = ".!?";
          if (s >= 6) {
            tokens = 8 + pick(rng, 13);
            entropy = 0.5 + 2.0 * unit_double(rng);
          } else {
            text = (s < 3 ? detail::capitalize(pl.spec.lemma) : pl.spec.lemma) + kTerminals[s % 3];
          }
        }
        if (text.empty()) {
          do text = detail::sentence(rng, pl.spec, tokens);
          while (seen.count(text));
        }
        seen.insert(text);
        Vector v(p.dimension);
        for (auto& x : v) x = p.noise * gaussian(rng);
        v[axis] += 1.0;
        if (i == 2) pl.examples[s] = text;
        pl.sentences.push_back({text, s, entropy, std::move(v)});
      }
    }
    // Fisher-Yates with the portable index draw.
    for (std::size_t i = pl.sentences.size(); i > 1; --i) {
      std::swap(pl.sentences[i - 1], pl.sentences[pick(rng, i)]);
    }
    demo.lemmas.push_back(std::move(pl));
  }
  return demo;
}

inline std::string extraction_lexicon_text(const Demo& d) {
  std::string out = "# Demo extraction lexicon.\n[known]\n";
  for (const auto& l : d.lemmas) out += l.spec.lemma + "\n";
  out += "[suffixes]\nly\n";
  return out;
}

inline std::string corpus_file_name(const PlantedLemma& l) { return l.spec.lemma + ".txt"; }

inline std::string corpus_text(const PlantedLemma& l) {
  std::string out;
  for (const auto& s : l.sentences) out += s.text + "\n";
  return out;
}

inline nlohmann::ordered_json truth_json(const Demo& d) {
  nlohmann::ordered_json j;
  j["seed"] = d.params.seed;
  j["model_tag"] = "fake-gaussian";
  nlohmann::ordered_json lemmas = nlohmann::ordered_json::array();
  for (const auto& l : d.lemmas) {
    nlohmann::ordered_json lj;
    lj["lemma"] = l.spec.lemma;
    nlohmann::ordered_json senses = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < l.categories.size(); ++s) {
      std::vector<std::string> members;
      for (const auto& ps : l.sentences) {
        if (ps.sense == s) members.push_back(ps.text);
      }
      std::sort(members.begin(), members.end());
      senses.push_back({{"sense", s + 1},
                        {"category", std::string(to_string(l.categories[s]))},
                        {"example", l.examples[s]},
                        {"sentences", members}});
    }
    lj["senses"] = senses;
    lemmas.push_back(lj);
  }
  j["lemmas"] = lemmas;
  return j;
}

/// Embedding records keyed to the occurrence ids that extraction assigns
/// to the written corpus, in extraction order.
inline std::string embeddings_text(const Demo& d) {
  auto lex = ExtractionLexicon::parse(extraction_lexicon_text(d));
  std::vector<EmbeddingRecord> records;
  for (const auto& l : d.lemmas) {
    std::map<std::string, const PlantedSentence*> by_text;
    for (const auto& s : l.sentences) by_text[s.text] = &s;
    const auto name = corpus_file_name(l);
    auto doc = make_document(name, fs::path(name).stem().string(), corpus_text(l));
    for (const auto& occ : extract_adverbs(doc, lex)) {
      auto it = by_text.find(occ.sentence_text);
      if (it == by_text.end() || occ.lemma != l.spec.lemma) {
        throw Error(ErrorCode::MalformedRecord, occ.occurrence_id,
                    "demo sentence did not round-trip: " + occ.sentence_text);
      }
      records.push_back({occ.occurrence_id, it->second->vector, it->second->entropy, ""});
    }
  }
  return store_to_jsonl(d.params.dimension, "fake-gaussian", records);
}

inline std::string config_text(const Demo& d) {
  std::string out;
  out += "# Synthetic demo run. Paths are relative to this file.\n";
  out += "corpus.paths = corpus\n";
  out += "corpus.format = text\n";
  out += "lexicon = extraction_lexicon.txt\n";
  out += "embeddings = embeddings.jsonl\n";
  out += "cluster.threshold = 0.4\n";
  out += "cluster.min_size = " + std::to_string(d.params.sentences_per_sense) + "\n";
  out += "cluster.linkage = average\n";
  out += "example.min_tokens = 3\n";
  out += "example.max_tokens = 20\n";
  out += "synset.threshold = 0.8\n";
  out += "seed = " + std::to_string(d.params.seed) + "\n";
  out += "demo.lemmas = " + std::to_string(d.params.lemmas) + "\n";
  out += "demo.senses = " + std::to_string(d.params.senses) + "\n";
  out += "run_dir = .\n";
  return out;
}

/// Writes corpus/, extraction_lexicon.txt, embeddings.jsonl, truth.json and
/// demo.conf under `dir`. Returns the written paths relative to `dir`.
inline std::vector<std::string> write(const Demo& d, const fs::path& dir) {
  std::vector<std::string> written;
  auto put = [&](const std::string& rel, const std::string& content) {
    fs::create_directories((dir / rel).parent_path());
    write_file_atomic(dir / rel, content);
    written.push_back(rel);
  };
  for (const auto& l : d.lemmas) put("corpus/" + corpus_file_name(l), corpus_text(l));
  put("extraction_lexicon.txt", extraction_lexicon_text(d));
  put("embeddings.jsonl", embeddings_text(d));
  put("truth.json", truth_json(d).dump(2) + "\n");
  put("demo.conf", config_text(d));
  return written;
}

}  // namespace advlex::demo
