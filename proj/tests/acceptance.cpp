// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runs only against checked-in fixtures and generated data.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "advlex/agreement.hpp"
#include "advlex/config.hpp"
#include "advlex/corpus.hpp"
#include "advlex/oewn.hpp"
#include "advlex/pipeline.hpp"
#include "advlex/senses.hpp"
#include "advlex/synsets.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace advlex;

namespace {

// Collects failures for one criterion; the first few are printed.
struct Check {
  std::vector<std::string> failures;

  bool expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
    return ok;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

// ---- 1: kappa ----

void kappa_oracle(Check& c) {
  ConfusionMatrix m;
  m.add(Category::manner, Category::manner, 45);
  m.add(Category::manner, Category::degree, 15);
  m.add(Category::degree, Category::manner, 5);
  m.add(Category::degree, Category::degree, 35);
  const double k = cohen_kappa(m);
  c.expect(std::abs(k - 0.6) <= 1e-9, "hand matrix kappa " + fmt(k));
  c.expect(std::abs(oracle::kappa({{45, 15}, {5, 35}}) - k) <= 1e-12, "oracle disagrees on hand matrix");

  const auto a = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_a_229.csv"));
  const auto b = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_b_229.csv"));
  const auto report = confusion(a, b);
  const double k229 = cohen_kappa(report.matrix);
  c.expect(report.matrix.n == 229, "fixture n = " + std::to_string(report.matrix.n));
  c.expect(std::abs(k229 - 0.67) <= 0.005, "fixture kappa " + fmt(k229));

  std::vector<std::vector<double>> dense(kCategoryCount, std::vector<double>(kCategoryCount));
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    for (std::size_t j = 0; j < kCategoryCount; ++j) dense[i][j] = static_cast<double>(report.matrix.counts[i][j]);
  }
  c.expect(std::abs(oracle::kappa(dense) - k229) <= 1e-12, "oracle disagrees on fixture");
}

// ---- 2: clustering ----

struct Instance {
  std::vector<AdverbOccurrence> occs;
  EmbeddingStore store;
};

std::string occ_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "occ%03zu", i);
  return buf;
}

Instance instance(const std::vector<Vector>& vecs, const std::vector<std::size_t>& lengths = {},
                  const std::vector<double>& entropy = {}) {
  Instance in;
  in.store = EmbeddingStore(vecs.front().size(), "acceptance");
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    AdverbOccurrence o;
    o.occurrence_id = occ_id(i);
    o.lemma = o.surface = "thus";
    o.token_count = lengths.empty() ? 8 : lengths[i];
    o.sentence_text = "sentence " + std::to_string(i);
    o.source = "acceptance";
    in.occs.push_back(o);
    in.store.insert({o.occurrence_id, vecs[i], entropy.empty() ? 1.0 : entropy[i], ""});
  }
  return in;
}

oracle::Link to_oracle(Linkage l) {
  switch (l) {
    case Linkage::average: return oracle::Link::average;
    case Linkage::complete: return oracle::Link::complete;
    case Linkage::single: return oracle::Link::single;
  }
  return oracle::Link::average;
}

void clustering_oracle(Check& c) {
  std::size_t compared = 0;
  for (auto linkage : {Linkage::average, Linkage::complete, Linkage::single}) {
    std::mt19937_64 rng(20000 + static_cast<int>(linkage));
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng() % 12;
      const std::size_t dim = 2 + rng() % 7;
      const std::size_t centers = 1 + rng() % 4;
      const double sigma = 0.05 + 0.6 * static_cast<double>(rng() % 100) / 100.0;
      const double threshold = 0.1 + 0.8 * static_cast<double>(rng() % 100) / 100.0;
      std::vector<Vector> cs(centers, Vector(dim));
      for (auto& v : cs) {
        for (auto& x : v) x = oracle::gaussian(rng);
      }
      std::vector<Vector> vecs;
      for (std::size_t i = 0; i < n; ++i) {
        Vector v = cs[rng() % centers];
        for (auto& x : v) x += sigma * oracle::gaussian(rng);
        vecs.push_back(v);
      }
      auto in = instance(vecs);
      std::vector<std::vector<std::string>> got;
      for (const auto& cl : cluster_senses("thus", in.occs, in.store, {threshold, 1, linkage})) {
        got.push_back(cl.member_ids);
      }
      std::vector<std::string> keys;
      for (std::size_t i = 0; i < n; ++i) keys.push_back(occ_id(i));
      std::vector<std::vector<std::string>> want;
      for (const auto& g : oracle::brute_agglomerate(vecs, keys, to_oracle(linkage), threshold)) {
        std::vector<std::string> ids;
        for (auto i : g) ids.push_back(keys[i]);
        want.push_back(ids);
      }
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      c.expect(got == want, std::string(to_string(linkage)) + " trial " + std::to_string(trial) +
                                ": memberships differ");
      ++compared;
    }
  }
  c.expect(compared == 300, "compared " + std::to_string(compared) + " instances");
}

// ---- 3: planted senses ----

void planted_recovery(Check& c) {
  const auto dir = testpaths::fixture("demo");
  const auto cfg = load_config(dir / "demo.conf");
  c.expect(cfg.cluster.min_cluster_size == 20, "demo min_size is not 20");
  c.expect(cfg.cluster.distance_threshold == 0.4, "demo threshold is not 0.4");

  const auto lex = ExtractionLexicon::load(cfg.lexicon);
  std::map<std::string, std::vector<AdverbOccurrence>> by_lemma;
  std::map<std::string, AdverbOccurrence> by_id;
  for (const auto& doc : ingest_all(pipeline::expand_corpus(cfg.corpus_paths), cfg.corpus_format)) {
    for (auto& o : extract_adverbs(doc, lex)) {
      by_id[o.occurrence_id] = o;
      by_lemma[o.lemma].push_back(std::move(o));
    }
  }
  const auto store = load_store(cfg.embeddings_path());
  const auto truth = nlohmann::json::parse(read_file(dir / "truth.json"));

  c.expect(truth.at("lemmas").size() == 5, "truth lemma count");
  c.expect(by_lemma.size() == truth.at("lemmas").size(), "extracted lemma count " + std::to_string(by_lemma.size()));
  std::size_t membership_errors = 0;
  for (const auto& l : truth.at("lemmas")) {
    const auto lemma = l.at("lemma").get<std::string>();
    // planted sentence set -> planted example
    std::map<std::vector<std::string>, std::string> planted;
    for (const auto& s : l.at("senses")) {
      auto sentences = s.at("sentences").get<std::vector<std::string>>();
      std::sort(sentences.begin(), sentences.end());
      planted[sentences] = s.at("example").get<std::string>();
    }
    c.expect(planted.size() == 5, lemma + ": planted sense count " + std::to_string(planted.size()));
    auto res = cluster_senses_with_residual(lemma, by_lemma[lemma], store, cfg.cluster);
    membership_errors += res.residual.size();
    if (!c.expect(res.clusters.size() == planted.size(),
                  lemma + ": " + std::to_string(res.clusters.size()) + " clusters")) {
      continue;
    }
    std::set<std::vector<std::string>> matched;
    for (const auto& cl : res.clusters) {
      std::vector<std::string> texts;
      for (const auto& id : cl.member_ids) texts.push_back(by_id.at(id).sentence_text);
      std::sort(texts.begin(), texts.end());
      auto it = planted.find(texts);
      if (it == planted.end() || !matched.insert(texts).second) {
        membership_errors += texts.size();
        c.expect(false, lemma + ": cluster " + cl.cluster_id + " matches no planted sense");
        continue;
      }
      auto ex = select_example(cl, by_id, store, cfg.example);
      c.expect(ex && ex->sentence == it->second,
               lemma + ": example '" + (ex ? ex->sentence : "<none>") + "' != '" + it->second + "'");
    }
  }
  c.expect(membership_errors == 0, std::to_string(membership_errors) + " membership errors");
}

// ---- 4: reference lexicon fixture ----

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p));
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    for (std::string col; std::getline(ls, col, '\t');) cols.push_back(col);
    rows.push_back(cols);
  }
  return rows;
}

void reference_lexicon(Check& c) {
  const auto text = read_file(testpaths::fixture("table1.yaml"));
  const auto lex = oewn::parse_lexicon_text(text);
  const oewn::IdRange reserved;
  const auto findings = oewn::validate_lexicon(lex, reserved);
  c.expect(findings.empty(), std::to_string(findings.size()) + " findings on the fixture");
  c.expect(oewn::emit_lexicon_text(lex) == text, "emit is not byte-stable on the fixture");

  const auto rows = read_tsv(testpaths::fixture("table1_usages.tsv"));
  c.expect(rows.size() == 10 && lex.entries.size() == 10, "expected 10 rows");
  std::set<std::string> categories;
  for (const auto& r : rows) {
    if (!c.expect(r.size() == 4, "malformed usage row")) continue;
    categories.insert(r[0]);
    const auto* e = lex.find(r[1]);
    if (!c.expect(e != nullptr, r[1] + " missing")) continue;
    c.expect(e->category == r[0], r[1] + ": category " + e->category);
    c.expect(e->members.size() == 1 && e->members[0].lemma == r[2], r[1] + ": member");
    c.expect(e->examples == std::vector<std::string>{r[3]}, r[1] + ": usage");
  }
  c.expect(categories.size() == kCategoryCount, "fixture does not cover every category");
  c.expect(lex.find("00043413-r") && lex.find("00061170-r"), "boundary ids missing");

  std::mt19937_64 rng(4242);
  std::size_t tried = 0;
  for (int done = 0; done < 500; ++tried) {
    auto l = gen::random_lexicon(rng);
    // Make it valid: taxonomy categories, at least one non-empty example,
    // and ids on the correct side of the reserved range for their origin.
    std::set<std::string> ids;
    for (auto& e : l.entries) {
      const auto num = oewn::synset_number(e.synset_id);
      e.synset_id = oewn::format_synset_id(e.origin == oewn::Origin::new_synset
                                               ? reserved.first + num % (reserved.last - reserved.first + 1)
                                               : num % reserved.first);
      ids.insert(e.synset_id);
      if (!try_parse_category(e.category)) e.category = std::string(to_string(kAllCategories[rng() % 10]));
      if (e.examples.empty() || e.examples.front().empty()) e.examples.insert(e.examples.begin(), "ex");
    }
    if (ids.size() != l.entries.size() || !oewn::validate_lexicon(l, reserved).empty()) continue;
    ++done;
    auto emitted = oewn::emit_lexicon_text(l);
    oewn::LexiconFile back;
    try {
      back = oewn::parse_lexicon_text(emitted);
    } catch (const std::exception& e) {
      c.expect(false, "random lexicon " + std::to_string(done) + ": " + e.what());
      continue;
    }
    std::sort(l.entries.begin(), l.entries.end(),
              [](const auto& x, const auto& y) { return x.synset_id < y.synset_id; });
    c.expect(back == l, "random lexicon " + std::to_string(done) + " did not round-trip");
    c.expect(oewn::emit_lexicon_text(back) == emitted, "random lexicon re-emit differs");
  }
  c.expect(tried < 5000, "too many generated lexicons rejected");
}

// ---- 5: example window ----

void example_window(Check& c) {
  const ExampleFilter window = RunConfig{}.example;
  c.expect(window.admits(3) && window.admits(20), "3 or 20 tokens rejected");
  c.expect(!window.admits(2) && !window.admits(21), "2 or 21 tokens admitted");

  // Out-of-window members have the lowest entropy and must be skipped.
  std::vector<Vector> vecs(4, Vector{1.0, 0.0});
  auto run = [&](std::vector<double> entropy) {
    auto in = instance(vecs, {2, 21, 3, 20}, entropy);
    SenseCluster cl;
    cl.lemma = "thus";
    for (const auto& o : in.occs) cl.member_ids.push_back(o.occurrence_id);
    std::map<std::string, AdverbOccurrence> by_id;
    for (const auto& o : in.occs) by_id[o.occurrence_id] = o;
    auto ex = select_example(cl, by_id, in.store, window);
    return ex ? ex->occurrence_id : std::string("<none>");
  };
  c.expect(run({0.1, 0.2, 0.4, 0.3}) == occ_id(3), "20-token member not chosen");
  c.expect(run({0.1, 0.2, 0.3, 0.4}) == occ_id(2), "3-token member not chosen");
  auto none = instance({{1.0, 0.0}, {0.0, 1.0}}, {2, 21});
  SenseCluster cl;
  cl.member_ids = {occ_id(0), occ_id(1)};
  std::map<std::string, AdverbOccurrence> by_id{{occ_id(0), none.occs[0]}, {occ_id(1), none.occs[1]}};
  c.expect(!select_example(cl, by_id, none.store, window), "out-of-window cluster got an example");
}

// ---- 6: synsets ----

SenseEntry validated_sense(const std::string& id, Category cat, Vector centroid) {
  SenseEntry e;
  e.sense_id = id;
  e.lemma = id.substr(0, id.find('.'));
  e.category = cat;
  e.gloss = "gloss of " + id;
  e.example = "example for " + id;
  e.example_verified = true;
  e.provenance = Provenance::human_validated;
  e.centroid = std::move(centroid);
  e.cluster_id = "c-" + id;
  return e;
}

void category_constraint(Check& c) {
  std::size_t merged = 0, refused = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::mt19937_64 rng(60000 + trial);
    const auto dir = testpaths::scratch("acceptance-audit");
    Lexicon initial;
    Synset old;
    old.synset_id = "00000100-r";
    old.category = Category::manner;
    old.members = {{"old", "old.r.01"}};
    old.gloss = "old gloss";
    old.examples = {"old example"};
    old.origin = oewn::Origin::existing;
    old.centroid = Vector{1, 0, 0, 0};
    initial.put(old);
    auto clock = [n = 0]() mutable { return "t" + std::to_string(n++); };
    SynsetEditor ed(initial, dir / "audit.jsonl", clock);

    std::map<std::string, Category> category_of{{"old.r.01", Category::manner}};
    auto homogeneous = [&] {
      for (const auto& [id, s] : ed.lexicon().synsets()) {
        for (const auto& m : s.members) {
          if (category_of.at(m.sense_id) != s.category) return false;
        }
      }
      return true;
    };

    int counter = 0;
    const std::size_t rounds = 1 + rng() % 4;
    for (std::size_t round = 0; round < rounds; ++round) {
      SynsetParams p;
      p.similarity_threshold = 0.3 + 0.6 * static_cast<double>(rng() % 100) / 100.0;
      std::vector<SenseEntry> senses;
      const std::size_t n = 1 + rng() % 12;
      for (std::size_t i = 0; i < n; ++i) {
        Vector v(4);
        for (auto& x : v) x = oracle::gaussian(rng);
        const auto cat = kAllCategories[rng() % 3];
        const auto id = "w" + std::to_string(counter++) + ".r.01";
        category_of[id] = cat;
        senses.push_back(validated_sense(id, cat, v));
      }
      ed.form(senses, p, "acceptance");
      c.expect(homogeneous(), "trial " + std::to_string(trial) + ": form_synsets mixed categories");
      for (int k = 0; k < 4; ++k) {
        const auto& all = ed.lexicon().synsets();
        if (all.size() < 2) break;
        auto a = std::next(all.begin(), static_cast<long>(rng() % all.size()))->first;
        auto b = std::next(all.begin(), static_cast<long>(rng() % all.size()))->first;
        const bool same = a != b && all.at(a).category == all.at(b).category;
        const auto before = ed.lexicon().to_json().dump();
        try {
          ed.merge(a, b, "acceptance");
          ++merged;
          c.expect(same, "trial " + std::to_string(trial) + ": merged " + a + " and " + b);
        } catch (const Error& e) {
          ++refused;
          c.expect(!same, "trial " + std::to_string(trial) + ": refused a valid merge: " + e.what());
          c.expect(ed.lexicon().to_json().dump() == before, "refused merge changed state");
        }
        c.expect(homogeneous(), "trial " + std::to_string(trial) + ": merge_synsets mixed categories");
      }
    }
    const auto replayed = SynsetEditor::replay(initial, parse_jsonl(read_file(dir / "audit.jsonl")));
    c.expect(replayed.to_json().dump() == ed.lexicon().to_json().dump(),
             "trial " + std::to_string(trial) + ": replay differs");
    fs::remove_all(dir);
  }
  c.expect(merged > 0 && refused > 0, "merges exercised: " + std::to_string(merged) + " ok, " +
                                          std::to_string(refused) + " refused");
}

// ---- 7: end-to-end determinism ----

std::map<std::string, std::string> snapshot(const fs::path& root) {
  static const std::regex stamp(R"("timestamp":"[^"]*")");
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    files[fs::relative(e.path(), root).generic_string()] =
        std::regex_replace(read_file(e.path()), stamp, R"("timestamp":"")");
  }
  return files;
}

void determinism(Check& c) {
  const auto a = testpaths::scratch("acceptance-run-a");
  const auto b = testpaths::scratch("acceptance-run-b");
  pipeline::DemoOptions opts;
  opts.full = true;
  const auto ra = pipeline::run_demo(a, opts);
  const auto rb = pipeline::run_demo(b, opts);
  c.expect(ra.findings.empty() && rb.findings.empty(), "demo lexicon has findings");
  const auto sa = snapshot(a), sb = snapshot(b);
  c.expect(sa.count("lexicon.yaml") && sa.count("audit.jsonl"), "full run is missing outputs");
  std::set<std::string> names;
  for (const auto& [n, _] : sa) names.insert(n);
  for (const auto& [n, _] : sb) names.insert(n);
  for (const auto& n : names) {
    c.expect(sa.count(n) && sb.count(n) && sa.at(n) == sb.at(n), n + " differs between runs");
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;  // 0 means unlimited
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "kappa oracle", 1, kappa_oracle},
      {2, "clustering oracle equivalence", 30, clustering_oracle},
      {3, "planted-sense recovery", 60, planted_recovery},
      {4, "reference lexicon round trip", 0, reference_lexicon},
      {5, "example-window boundaries", 0, example_window},
      {6, "category constraint and audit replay", 0, category_constraint},
      {7, "end-to-end determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_seconds > 0 && secs >= cr.limit_seconds) {
      check.failures.push_back("took " + fmt(secs) + " s, limit " + fmt(cr.limit_seconds) + " s");
    }
    const bool ok = check.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %d %s (%.3f s)\n", ok ? "PASS" : "FAIL", cr.number, cr.name, secs);
    for (std::size_t i = 0; i < check.failures.size() && i < 10; ++i) {
      std::printf("    %s\n", check.failures[i].c_str());
    }
    if (check.failures.size() > 10) std::printf("    ... %zu more\n", check.failures.size() - 10);
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
