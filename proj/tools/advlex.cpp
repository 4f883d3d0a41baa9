// advlex: command-line driver for the adverb lexicon pipeline.

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advlex/agreement.hpp"
#include "advlex/config.hpp"
#include "advlex/pipeline.hpp"
#include "advlex/service.hpp"

namespace {

using namespace advlex;

enum Exit { kOk = 0, kFindings = 1, kUsage = 2, kInternal = 3 };

struct Globals {
  std::string config;
  std::string run_dir;
  std::vector<std::string> sets;
  bool dry_run = false;
  bool force = false;
};

RunConfig resolve(const Globals& g) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, kv, "expected key=value");
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.run_dir.empty()) overrides.emplace_back("run_dir", g.run_dir);
  return load_config(g.config.empty() ? std::nullopt : std::optional<fs::path>(g.config), overrides);
}

void print(const pipeline::StageReport& r) {
  if (r.dry_run) {
    for (const auto& line : r.plan) std::cout << r.stage << ": " << line << "\n";
    return;
  }
  std::cout << r.stage << ":";
  for (const auto& [k, v] : r.counts.items()) std::cout << " " << k << "=" << v.dump();
  std::cout << "\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << r.stage << ": " << w << "\n";
}

int print_findings(const std::vector<oewn::Finding>& findings) {
  for (const auto& f : findings) {
    std::cout << to_string(f.kind) << " " << f.synset_id << ": " << f.detail << "\n";
  }
  std::cout << findings.size() << " finding(s)\n";
  return findings.empty() ? kOk : kFindings;
}

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adverb sense induction and lexicon building"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config, "Config file (key = value lines)");
  app.add_option("-r,--run-dir", g.run_dir, "Run directory (relative paths use $ADVLEX_RUN_ROOT)");
  app.add_option("-s,--set", g.sets, "Override a config key, e.g. --set cluster.threshold=0.35");
  app.add_flag("-n,--dry-run", g.dry_run, "Print planned reads and writes without running");
  app.add_flag("-f,--force", g.force, "Run even when inputs changed since their producer wrote them");
  app.fallthrough();

  int code = kOk;
  auto stage = [&](const char* name, const char* help,
                   pipeline::StageReport (pipeline::Runner::*fn)()) {
    app.add_subcommand(name, help)->callback([&, fn] {
      pipeline::Runner runner(resolve(g), {g.force, g.dry_run});
      print((runner.*fn)());
    });
  };
  stage("extract", "Corpus -> adverb occurrences", &pipeline::Runner::extract);
  stage("cluster", "Occurrences + embeddings -> candidate sense clusters", &pipeline::Runner::cluster);
  stage("select", "Clusters -> drafted senses with prototypical examples", &pipeline::Runner::select);
  stage("synsets", "Reviewed senses -> synsets", &pipeline::Runner::synsets);

  auto* emit = app.add_subcommand("emit", "Synsets -> canonical lexicon YAML");
  emit->callback([&] {
    pipeline::Runner runner(resolve(g), {g.force, g.dry_run});
    auto r = runner.emit();
    print(r);
    if (!r.dry_run && r.counts["findings"].get<std::size_t>() > 0) code = kFindings;
  });

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a lexicon file against the schema and rules");
  validate->add_option("file", validate_path, "Lexicon YAML (default: <run_dir>/lexicon.yaml)");
  validate->callback([&] {
    auto cfg = resolve(g);
    fs::path p = validate_path.empty() ? cfg.run_dir / pipeline::kLexicon : fs::path(validate_path);
    try {
      code = print_findings(pipeline::validate_file(p, cfg.synset.id_range));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnreadableFile) throw;
      std::cout << e.what() << "\n1 finding(s)\n";
      code = kFindings;
    }
  });

  std::string kappa_a, kappa_b;
  bool kappa_json = false;
  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two annotation CSV files");
  kappa->add_option("a", kappa_a, "First annotator CSV (item_id,category)")->required();
  kappa->add_option("b", kappa_b, "Second annotator CSV")->required();
  kappa->add_flag("--json", kappa_json, "Print the full report as JSON");
  kappa->callback([&] {
    auto a = AnnotationSet::load_csv(kappa_a);
    auto b = AnnotationSet::load_csv(kappa_b);
    auto report = confusion(a, b);
    const double k = cohen_kappa(report.matrix);
    if (kappa_json) {
      std::cout << kappa_report_json(report, k).dump(2) << "\n";
      return;
    }
    std::cout << "kappa = " << std::fixed << std::setprecision(6) << k << " (n = " << report.matrix.n
              << ", excluded = " << report.excluded.size() << ")\n";
  });

  std::string host = "127.0.0.1", ui;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the review HTTP service over a run directory");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--ui", ui, "Directory with a built review UI to serve at /");
  serve->callback([&] {
    auto cfg = resolve(g);
    review::Session session(cfg.run_dir, cfg.synset.similarity_threshold);
    service::Server server(session, ui.empty() ? std::nullopt : std::optional<fs::path>(ui));
    const int bound = server.bind(host, port);
    std::cout << "serving " << cfg.run_dir.string() << " on http://" << host << ":" << bound << "\n"
              << std::flush;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.run();
    g_server = nullptr;
  });

  bool full = false, generate_only = false;
  std::size_t lemmas = 5, senses = 5;
  std::uint64_t seed = 7;
  auto* demo = app.add_subcommand("demo", "Generate the synthetic planted-sense demo and run the pipeline");
  demo->add_flag("--full", full, "Also script the review, form synsets, emit and validate");
  demo->add_flag("--generate-only", generate_only, "Only write the synthetic inputs");
  demo->add_option("--lemmas", lemmas, "Number of lemmas (1-10)");
  demo->add_option("--senses", senses, "Planted senses per lemma (1-10)");
  demo->add_option("--seed", seed, "Generator seed");
  demo->callback([&] {
    auto cfg = resolve(g);
    pipeline::DemoOptions opts;
    opts.params.seed = seed;
    opts.params.lemmas = lemmas;
    opts.params.senses = senses;
    opts.full = full;
    opts.run = {g.force, g.dry_run};
    if (generate_only) {
      auto data = demo::generate(opts.params);
      for (const auto& f : demo::write(data, cfg.run_dir)) std::cout << "wrote " << f << "\n";
      return;
    }
    auto result = pipeline::run_demo(cfg.run_dir, opts);
    for (const auto& r : result.stages) print(r);
    if (full) code = print_findings(result.findings);
    std::cout << "config: " << (cfg.run_dir / "demo.conf").string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return code;
}
