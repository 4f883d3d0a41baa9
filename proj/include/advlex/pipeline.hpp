#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/config.hpp"
#include "advlex/corpus.hpp"
#include "advlex/demo.hpp"
#include "advlex/embeddings.hpp"
#include "advlex/error.hpp"
#include "advlex/oewn.hpp"
#include "advlex/review.hpp"
#include "advlex/senses.hpp"
#include "advlex/synsets.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex::pipeline {

using ojson = nlohmann::ordered_json;

// Run-directory layout.
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kOccurrences = "occurrences.jsonl";
inline constexpr const char* kClusters = "clusters.jsonl";
inline constexpr const char* kResidual = "residual.jsonl";
inline constexpr const char* kDrafts = "drafts.jsonl";
inline constexpr const char* kDecisions = "review/decisions.jsonl";
inline constexpr const char* kSynsets = "synsets.json";
inline constexpr const char* kAlignment = "alignment.json";
inline constexpr const char* kAudit = "audit.jsonl";
inline constexpr const char* kLexicon = "lexicon.yaml";

/// Content hash used by the manifest. Append-only logs are hashed with
/// their timestamp fields blanked so reruns compare equal by content.
inline std::string content_hash(const fs::path& p) {
  auto text = read_file(p);
  const auto name = p.filename().string();
  if (name == "decisions.jsonl" || name == "audit.jsonl") {
    static const std::regex ts(R"("timestamp":"[^"]*")");
    text = std::regex_replace(text, ts, R"("timestamp":"")");
  }
  return hex64(fnv1a64(text));
}

/// Records, per stage, the config hash and the content hashes of every
/// input and output. Downstream stages compare their inputs against the
/// hashes their producers recorded.
class Manifest {
 public:
  explicit Manifest(fs::path run_dir) : path_(std::move(run_dir) / kManifest) {
    if (fs::exists(path_)) {
      try {
        doc_ = ojson::parse(read_file(path_));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, path_.string(), e.what());
      }
    }
    if (!doc_.is_object()) doc_ = ojson::object();
    if (!doc_.contains("stages")) doc_["stages"] = ojson::object();
  }

  const ojson& stages() const { return doc_["stages"]; }

  /// Hash a stage recorded when it wrote `name`, if any stage did.
  std::optional<std::pair<std::string, std::string>> producer_of(const std::string& name) const {
    for (const auto& [stage, rec] : doc_["stages"].items()) {
      if (rec.contains("outputs") && rec["outputs"].contains(name)) {
        return std::make_pair(stage, rec["outputs"][name].get<std::string>());
      }
    }
    return std::nullopt;
  }

  void record(const std::string& stage, ojson rec) {
    doc_["stages"][stage] = std::move(rec);
    write_file_atomic(path_, doc_.dump(2) + "\n");
  }

 private:
  fs::path path_;
  ojson doc_;
};

struct Input {
  fs::path path;
  std::string producer;  // stage that makes it; empty for user-supplied files
  bool required = true;
};

struct StageReport {
  std::string stage;
  bool dry_run = false;
  std::vector<std::string> plan;  // human-readable planned actions (dry run)
  std::vector<std::string> warnings;
  ojson counts = ojson::object();
};

struct Options {
  bool force = false;
  bool dry_run = false;
};

/// Lists regular files in a path: the file itself, or a directory's
/// non-hidden entries sorted by name.
inline std::vector<fs::path> expand_corpus(const std::vector<fs::path>& paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename().string().front() != '.') {
          files.push_back(e.path());
        }
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw Error(ErrorCode::ConfigError, "corpus.paths", "no such file or directory: " + p.string());
    }
  }
  return out;
}

/// Runs fn(i) for i in [0, n) on a small worker pool. Exceptions are
/// rethrown for the lowest failing index, so failures are deterministic.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Runner {
 public:
  Runner(RunConfig cfg, Options opts = {}) : cfg_(std::move(cfg)), opts_(opts) {}

  const RunConfig& config() const { return cfg_; }
  fs::path out(const char* name) const { return cfg_.run_dir / name; }

  /// Stage 1: corpus -> occurrences.
  StageReport extract() {
    if (cfg_.lexicon.empty()) throw Error(ErrorCode::ConfigError, "lexicon", "not set");
    if (!fs::is_regular_file(cfg_.lexicon)) {
      throw Error(ErrorCode::ConfigError, "lexicon", "file not found: " + cfg_.lexicon.string());
    }
    if (cfg_.corpus_paths.empty()) throw Error(ErrorCode::ConfigError, "corpus.paths", "not set");
    const auto files = expand_corpus(cfg_.corpus_paths);
    std::vector<Input> inputs{{cfg_.lexicon, "", true}};
    for (const auto& f : files) inputs.push_back({f, "", true});
    StageReport r{"extract"};
    if (!begin(r, inputs, {kOccurrences})) return r;

    const auto lex = ExtractionLexicon::load(cfg_.lexicon);
    std::vector<AdverbOccurrence> occs;
    std::size_t docs = 0, sentences = 0;
    ingest(files, cfg_.corpus_format, [&](CorpusDocument doc) {
      ++docs;
      sentences += doc.sentences.size();
      auto found = extract_adverbs(doc, lex);
      occs.insert(occs.end(), found.begin(), found.end());
    });
    if (files.empty() || docs == 0) r.warnings.push_back("corpus is empty; no occurrences written");
    write_file_atomic(out(kOccurrences), occurrences_to_jsonl(occs));
    r.counts["documents"] = docs;
    r.counts["sentences"] = sentences;
    r.counts["occurrences"] = occs.size();
    finish(r, inputs, {kOccurrences});
    return r;
  }

  /// Stage 2: occurrences + embeddings -> candidate sense clusters, per lemma.
  StageReport cluster() {
    std::vector<Input> inputs{{out(kOccurrences), "extract", true},
                              {cfg_.embeddings_path(), "embeddings", true}};
    StageReport r{"cluster"};
    if (!begin(r, inputs, {kClusters, kResidual})) return r;

    const auto occs = load_occurrences(out(kOccurrences));
    const auto store = load_store(cfg_.embeddings_path());
    std::map<std::string, std::vector<AdverbOccurrence>> by_lemma;
    for (const auto& o : occs) by_lemma[o.lemma].push_back(o);
    std::vector<const std::string*> lemmas;
    std::vector<const std::vector<AdverbOccurrence>*> groups;
    for (const auto& [lemma, list] : by_lemma) {
      lemmas.push_back(&lemma);
      groups.push_back(&list);
    }
    std::vector<ClusteringResult> results(lemmas.size());
    parallel_for(lemmas.size(), [&](std::size_t i) {
      results[i] = cluster_senses_with_residual(*lemmas[i], *groups[i], store, cfg_.cluster);
    });
    std::vector<SenseCluster> clusters;
    std::vector<ResidualEntry> residual;
    for (auto& res : results) {
      clusters.insert(clusters.end(), res.clusters.begin(), res.clusters.end());
      residual.insert(residual.end(), res.residual.begin(), res.residual.end());
    }
    write_file_atomic(out(kClusters), to_jsonl(clusters));
    write_file_atomic(out(kResidual), to_jsonl(residual));
    r.counts["lemmas"] = lemmas.size();
    r.counts["clusters"] = clusters.size();
    r.counts["residual"] = residual.size();
    finish(r, inputs, {kClusters, kResidual});
    return r;
  }

  /// Stage 3: clusters -> drafted sense entries with a chosen example each.
  StageReport select() {
    std::vector<Input> inputs{{out(kClusters), "cluster", true},
                              {out(kOccurrences), "extract", true},
                              {cfg_.embeddings_path(), "embeddings", true}};
    if (!cfg_.cue_lexicon.empty()) inputs.push_back({cfg_.cue_lexicon, "", true});
    StageReport r{"select"};
    if (!begin(r, inputs, {kDrafts})) return r;

    const auto clusters = parse_clusters(read_file(out(kClusters)));
    std::map<std::string, AdverbOccurrence> occs;
    for (auto& o : load_occurrences(out(kOccurrences))) occs.emplace(o.occurrence_id, o);
    const auto store = load_store(cfg_.embeddings_path());
    const auto cues = cfg_.cue_lexicon.empty() ? CueLexicon{} : CueLexicon::load(cfg_.cue_lexicon);

    std::vector<SenseEntry> drafts;
    std::map<std::string, std::size_t> rank;
    std::size_t without_example = 0;
    for (const auto& c : clusters) {
      const auto k = ++rank[c.lemma];
      auto example = select_example(c, occs, store, cfg_.example);
      if (!example) {
        ++without_example;
        r.warnings.push_back(c.cluster_id + ": no member sentence inside the example window");
      }
      const auto& sentence =
          example ? example->sentence : occs.at(c.member_ids.front()).sentence_text;
      drafts.push_back(draft_entry(c, k, example, suggest_category(c.lemma, sentence, cues)));
    }
    write_file_atomic(out(kDrafts), to_jsonl(drafts));
    r.counts["drafts"] = drafts.size();
    r.counts["without_example"] = without_example;
    finish(r, inputs, {kDrafts});
    return r;
  }

  /// Stage 4: reviewed senses -> synsets, aligned to an existing lexicon.
  StageReport synsets() {
    std::vector<Input> inputs{{out(kDrafts), "select", true}, {out(kDecisions), "review", false}};
    if (!cfg_.existing_lexicon.empty()) inputs.push_back({cfg_.existing_lexicon, "", true});
    StageReport r{"synsets"};
    if (!begin(r, inputs, {kSynsets, kAlignment, kAudit})) return r;

    const auto drafts = parse_sense_entries(read_file(out(kDrafts)));
    std::vector<review::ReviewDecision> log;
    if (fs::exists(out(kDecisions))) log = review::parse_decision_log(read_file(out(kDecisions)));
    const auto state = review::replay(drafts, log, cfg_.synset.similarity_threshold);
    const auto senses = state.validated_senses();
    if (senses.empty()) r.warnings.push_back("no human-validated senses; review the drafts first");

    Lexicon initial;
    if (!cfg_.existing_lexicon.empty()) {
      initial = Lexicon::from_file(oewn::parse_lexicon(cfg_.existing_lexicon));
    }
    fs::remove(out(kAudit));
    SynsetEditor editor(std::move(initial), out(kAudit));
    auto result = editor.form(senses, cfg_.synset, "advlex");

    ojson report;
    ojson aligned = ojson::array();
    for (const auto& a : result.report.aligned) {
      aligned.push_back({{"synset_id", a.synset_id}, {"sense_ids", a.sense_ids},
                         {"similarity", a.similarity}});
    }
    report["aligned"] = aligned;
    report["minted"] = result.report.minted;
    report["skipped_no_centroid"] = result.report.skipped_no_centroid;
    write_file_atomic(out(kSynsets), editor.lexicon().to_json().dump(2) + "\n");
    write_file_atomic(out(kAlignment), report.dump(2) + "\n");
    r.counts["validated_senses"] = senses.size();
    r.counts["synsets"] = editor.lexicon().synsets().size();
    r.counts["minted"] = result.report.minted.size();
    r.counts["aligned"] = result.report.aligned.size();
    finish(r, inputs, {kSynsets, kAlignment, kAudit});
    return r;
  }

  /// Stage 5: synsets -> canonical lexicon YAML.
  StageReport emit() {
    std::vector<Input> inputs{{out(kSynsets), "synsets", true}};
    StageReport r{"emit"};
    if (!begin(r, inputs, {kLexicon})) return r;
    const auto lex = Lexicon::from_json(nlohmann::json::parse(read_file(out(kSynsets))));
    const auto file = lex.to_file();
    oewn::emit_lexicon(file, out(kLexicon));
    const auto findings = oewn::validate_lexicon(file, cfg_.synset.id_range);
    for (const auto& f : findings) {
      r.warnings.push_back(std::string(to_string(f.kind)) + " " + f.synset_id + ": " + f.detail);
    }
    r.counts["entries"] = file.entries.size();
    r.counts["findings"] = findings.size();
    finish(r, inputs, {kLexicon});
    return r;
  }

  /// Records files produced outside the stage commands (the demo generator
  /// or an embedding adapter) so later edits to them count as stale.
  void record_external(const std::string& stage, const std::vector<std::string>& outputs) {
    if (opts_.dry_run) return;
    finish_record(stage, {}, outputs, ojson::object());
  }

 private:
  /// Name of a path inside the run directory, relative; otherwise as given.
  std::string name_of(const fs::path& p) const {
    std::error_code ec;
    auto rp = fs::weakly_canonical(p, ec);
    auto rr = fs::weakly_canonical(cfg_.run_dir, ec);
    auto rel = rp.lexically_relative(rr);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
  }

  /// Checks inputs. In a dry run, fills the plan and returns false.
  bool begin(StageReport& r, const std::vector<Input>& inputs,
             const std::vector<std::string>& outputs) {
    Manifest manifest(cfg_.run_dir);
    std::vector<std::string> problems;
    for (const auto& in : inputs) {
      const auto name = name_of(in.path);
      if (!fs::exists(in.path)) {
        if (!in.required) {
          r.plan.push_back("skip " + name + " (absent, optional)");
          continue;
        }
        if (opts_.dry_run) {
          r.plan.push_back("read " + name + " MISSING (run '" + in.producer + "' first)");
          continue;
        }
        throw Error(ErrorCode::MissingStageInput, in.producer.empty() ? r.stage : in.producer,
                    name + " does not exist");
      }
      std::string note;
      if (auto prod = manifest.producer_of(name)) {
        if (prod->second != content_hash(in.path)) {
          note = " STALE (changed since '" + prod->first + "' wrote it)";
          if (!opts_.force && !opts_.dry_run) {
            throw Error(ErrorCode::StaleInput, name,
                        "changed since stage '" + prod->first +
                            "' wrote it; rerun that stage or pass --force");
          }
          if (opts_.force) r.warnings.push_back(name + " is stale; continuing because of --force");
        }
      }
      r.plan.push_back("read " + name + note);
    }
    for (const auto& o : outputs) r.plan.push_back("write " + o);
    if (opts_.dry_run) {
      r.dry_run = true;
      return false;
    }
    fs::create_directories(cfg_.run_dir);
    return true;
  }

  void finish(StageReport& r, const std::vector<Input>& inputs,
              const std::vector<std::string>& outputs) {
    ojson in = ojson::object();
    for (const auto& i : inputs) {
      in[name_of(i.path)] = fs::exists(i.path) ? content_hash(i.path) : std::string("absent");
    }
    finish_record(r.stage, in, outputs, r.counts);
  }

  void finish_record(const std::string& stage, ojson inputs,
                     const std::vector<std::string>& outputs, const ojson& counts) {
    ojson rec;
    rec["config_hash"] = config_hash();
    rec["inputs"] = std::move(inputs);
    ojson outs = ojson::object();
    for (const auto& o : outputs) outs[o] = content_hash(cfg_.run_dir / o);
    rec["outputs"] = outs;
    rec["counts"] = counts;
    Manifest(cfg_.run_dir).record(stage, rec);
  }

  /// Config hash with run-directory paths made relative, so identical runs
  /// in different directories hash the same.
  std::string config_hash() const {
    auto j = cfg_.to_json();
    for (auto& [key, value] : j.items()) {
      if (value.is_string() && !value.get<std::string>().empty() &&
          (key == "lexicon" || key == "cue_lexicon" || key == "embeddings" ||
           key == "existing_lexicon")) {
        value = name_of(value.get<std::string>());
      }
    }
    ojson paths = ojson::array();
    for (const auto& p : cfg_.corpus_paths) paths.push_back(name_of(p));
    j["corpus.paths"] = paths;
    return hex64(fnv1a64(j.dump()));
  }

  RunConfig cfg_;
  Options opts_;
};

/// Validates a lexicon file. Parse failures are reported as a single
/// finding-like message through the thrown Error.
inline std::vector<oewn::Finding> validate_file(const fs::path& path, const oewn::IdRange& range) {
  return oewn::validate_lexicon(oewn::parse_lexicon(path), range);
}

// ---- demo ----------------------------------------------------------------

/// Maps each drafted sense back to its planted sense by majority vote over
/// the cluster's member sentences.
struct PlantedMatch {
  std::string category;
  std::string example;
};

inline std::map<std::string, PlantedMatch> match_drafts_to_truth(const fs::path& run_dir) {
  const auto truth = nlohmann::json::parse(read_file(run_dir / "truth.json"));
  std::map<std::string, std::pair<std::string, std::size_t>> sentence_sense;  // text -> (lemma, sense)
  std::map<std::pair<std::string, std::size_t>, PlantedMatch> planted;
  for (const auto& l : truth.at("lemmas")) {
    const auto lemma = l.at("lemma").get<std::string>();
    for (const auto& s : l.at("senses")) {
      const auto k = s.at("sense").get<std::size_t>();
      planted[{lemma, k}] = {s.at("category").get<std::string>(), s.at("example").get<std::string>()};
      for (const auto& t : s.at("sentences")) sentence_sense[t.get<std::string>()] = {lemma, k};
    }
  }
  std::map<std::string, std::string> text_of;
  for (const auto& o : load_occurrences(run_dir / kOccurrences)) text_of[o.occurrence_id] = o.sentence_text;
  std::map<std::string, SenseCluster> clusters;
  for (auto& c : parse_clusters(read_file(run_dir / kClusters))) clusters.emplace(c.cluster_id, c);

  std::map<std::string, PlantedMatch> out;
  for (const auto& d : parse_sense_entries(read_file(run_dir / kDrafts))) {
    std::map<std::pair<std::string, std::size_t>, std::size_t> votes;
    for (const auto& id : clusters.at(d.cluster_id).member_ids) {
      auto it = sentence_sense.find(text_of.at(id));
      if (it != sentence_sense.end()) ++votes[it->second];
    }
    if (votes.empty()) continue;
    auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    });
    out[d.sense_id] = planted.at(best->first);
  }
  return out;
}

/// Plays the annotator: classifies every draft with its planted category
/// and approves (or supplies) the example. Safe to rerun.
inline std::size_t scripted_review(const fs::path& run_dir, double merge_similarity,
                                   const std::string& actor = "demo-annotator") {
  const auto truth = match_drafts_to_truth(run_dir);
  review::Session session(run_dir, merge_similarity);
  std::size_t submitted = 0;
  auto submit = [&](std::string id, std::string task, ojson result) {
    review::ReviewDecision d{std::move(id), std::move(task), actor, "", std::move(result), "",
                             std::nullopt};
    try {
      if (!session.submit(d).duplicate) ++submitted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TaskAlreadyDone) throw;
    }
  };
  for (const auto& d : parse_sense_entries(read_file(run_dir / kDrafts))) {
    auto it = truth.find(d.sense_id);
    if (it == truth.end()) continue;
    submit("demo:classify:" + d.sense_id, "classify_sense:" + d.sense_id,
           {{"category", it->second.category}});
    if (d.example) {
      submit("demo:verify:" + d.sense_id, "verify_example:" + d.sense_id, {{"approve", true}});
    } else {
      submit("demo:verify:" + d.sense_id, "verify_example:" + d.sense_id,
             {{"replace", it->second.example}});
    }
  }
  return submitted;
}

struct DemoOptions {
  demo::Params params;
  bool full = false;  // also review, form synsets, emit and validate
  Options run;
};

struct DemoResult {
  std::vector<StageReport> stages;
  std::vector<oewn::Finding> findings;
};

/// Generates the synthetic inputs into `run_dir` and drives the pipeline.
inline DemoResult run_demo(const fs::path& run_dir, const DemoOptions& opts) {
  DemoResult result;
  const auto demo_data = demo::generate(opts.params);
  if (opts.run.dry_run) {
    StageReport plan{"demo", true};
    for (const auto& l : demo_data.lemmas) plan.plan.push_back("write corpus/" + demo::corpus_file_name(l));
    for (const char* f : {"extraction_lexicon.txt", "embeddings.jsonl", "truth.json", "demo.conf"}) {
      plan.plan.push_back(std::string("write ") + f);
    }
    result.stages.push_back(plan);
    return result;
  }
  fs::create_directories(run_dir);
  const auto written = demo::write(demo_data, run_dir);

  auto cfg = load_config(run_dir / "demo.conf");
  Runner runner(cfg, opts.run);
  runner.record_external("embeddings", {"embeddings.jsonl"});
  StageReport gen{"demo"};
  gen.counts["files"] = written.size();
  result.stages.push_back(gen);
  result.stages.push_back(runner.extract());
  result.stages.push_back(runner.cluster());
  result.stages.push_back(runner.select());
  if (!opts.full) return result;

  StageReport rev{"review"};
  rev.counts["decisions"] = scripted_review(runner.config().run_dir, cfg.synset.similarity_threshold);
  result.stages.push_back(rev);
  result.stages.push_back(runner.synsets());
  result.stages.push_back(runner.emit());
  result.findings = validate_file(runner.out(kLexicon), cfg.synset.id_range);
  return result;
}

}  // namespace advlex::pipeline
