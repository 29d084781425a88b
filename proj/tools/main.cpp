// fpl: generate Floquet FFO datasets, cluster them with a diffusion map,
// annotate topological invariants and export phase diagrams.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fpl/acceptance.hpp"
#include "fpl/config.hpp"
#include "fpl/error.hpp"
#include "fpl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fpl;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kAmbiguous = 3, kMismatch = 4 };

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ConfigError: return kConfig;
    case ErrorKind::AmbiguousSpectrum: return kAmbiguous;
    case ErrorKind::MethodMismatch: return kMismatch;
    default: return kOther;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fpl");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("FPL_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> threshold;
  std::optional<int> jobs;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "run configuration (YAML)");
  app->add_option("--out", c.out, "dataset / output directory");
  app->add_option("--seed", c.seed, "random sampling seed");
  app->add_option("--epsilon", c.epsilon, "kernel sharpness");
  app->add_option("--threshold", c.threshold, "eigenvalue dominance threshold");
  app->add_option("--jobs", c.jobs, "worker threads (0 = all cores)");
}

// Config from --config (or defaults when absent) with flag overrides.
std::optional<RunConfig> resolve(const Common& c) {
  std::optional<RunConfig> cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  if (!cfg) return cfg;
  if (!c.out.empty()) cfg->output.dir = c.out;
  if (c.seed) cfg->seed = *c.seed;
  if (c.epsilon) cfg->kernel.epsilon = *c.epsilon;
  if (c.threshold) cfg->kernel.threshold = *c.threshold;
  if (c.jobs) cfg->jobs = *c.jobs;
  validate(*cfg);
  return cfg;
}

fs::path dataset_dir(const Common& c, const std::optional<RunConfig>& cfg) {
  if (!c.out.empty()) return c.out;
  if (cfg) return cfg->output.dir;
  throw Error(ErrorKind::ConfigError, "--out: no dataset directory given (use --out or --config)");
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
  return nlohmann::json::parse(in);
}

int cmd_generate(const Common& c) {
  const auto cfg = resolve(c);
  if (!cfg) throw Error(ErrorKind::ConfigError, "--config: required for generate");
  const Dataset d = generate(*cfg);
  const std::string hash = write_dataset(d, cfg->output.dir);
  std::cout << "wrote " << d.samples.size() << " samples to " << cfg->output.dir.string() << " (manifest " << hash
            << ")\n";
  return kOk;
}

int cmd_cluster(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path dir = dataset_dir(c, cfg);
  const Dataset d = read_dataset(dir);
  ClusterSettings s;
  if (cfg) {
    s.epsilon = cfg->kernel.epsilon;
    s.options = {cfg->kernel.threshold, 0.9, cfg->kernel.ell, cfg->kernel.cutoff};
    s.edge_threshold = cfg->kernel.edge_threshold;
    s.jobs = cfg->jobs;
  }
  if (c.epsilon) s.epsilon = *c.epsilon;
  if (c.threshold) s.options.dominance_threshold = *c.threshold;
  if (c.jobs) s.jobs = *c.jobs;
  const ClusterReport r = cluster_dataset(d, s);
  const bool csv = !cfg || cfg->output.csv;
  write_text(dir / "cluster_report.json", report_json(r).dump(2) + "\n");
  if (csv) write_text(dir / "eigenvalues.csv", eigenvalues_csv(r));
  std::cout << "eigenvalues:";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(r.eigenvalues.size(), 10); ++i) std::cout << " " << r.eigenvalues(i);
  std::cout << "\n";
  if (!r.diffusion) {
    spdlog::error("{}", r.ambiguity);
    return kAmbiguous;
  }
  std::cout << "clusters: " << r.diffusion->n_clusters << " (oracle " << r.oracle.n_clusters << ", "
            << (r.oracle_agrees ? "same partition" : "different partition") << ")\n";
  if (!r.oracle_agrees) spdlog::warn("components oracle disagrees with the diffusion-map partition");
  return kOk;
}

int cmd_invariants(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path dir = dataset_dir(c, cfg);
  Dataset d = read_dataset(dir);
  InvariantOptions opt;
  opt.gap_tol = d.tolerances.value("gap_tol", 1e-3);
  const int jobs = c.jobs ? *c.jobs : (cfg ? cfg->jobs : 0);
  const int failed = annotate(d, jobs, opt);
  write_manifest(d, dir);
  if (!cfg || cfg->output.csv) write_text(dir / "invariants.csv", invariants_csv(d));
  if (!cfg || cfg->output.json) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : d.samples) j.push_back({{"id", s.id}, {"excluded", s.excluded}, {"invariants", s.invariants}});
    write_text(dir / "invariants.json", j.dump(2) + "\n");
  }
  std::cout << "annotated " << d.samples.size() << " samples, " << failed << " failed\n";
  bool mismatch = false;
  for (const auto& s : d.samples) {
    if (s.invariants.is_object() && s.invariants.contains("error")) {
      const std::string msg = s.invariants["error"];
      spdlog::warn("sample {}: {}", s.id, msg);
      if (msg.rfind(std::string(to_string(ErrorKind::MethodMismatch)), 0) == 0) mismatch = true;
    }
  }
  return mismatch ? kMismatch : kOk;
}

int cmd_diagram(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path dir = dataset_dir(c, cfg);
  const Dataset d = read_dataset(dir);
  const ClusterReport r = report_from_json(read_json(dir / "cluster_report.json"));
  const auto rows = merge_rows(d, r);
  if (!cfg || cfg->output.csv) write_text(dir / "diagram.csv", rows_csv(d, rows));
  if (!cfg || cfg->output.svg) write_text(dir / "diagram.svg", diagram_svg(d, rows));
  const Consistency k = check_consistency(d, rows);
  for (const auto& line : k.detail) std::cout << line << "\n";
  if (k.unannotated > 0) spdlog::warn("{} clustered samples carry no invariants (run `fpl invariants` first)", k.unannotated);
  if (k.disagreeing_clusters > 0) spdlog::warn("{} clusters mix invariant labels", k.disagreeing_clusters);
  return kOk;
}

int cmd_verify(const Common& c, const std::vector<int>& only) {
  AcceptanceOptions opt;
  opt.jobs = c.jobs.value_or(0);
  if (!c.out.empty()) opt.work_dir = c.out;
  opt.only = only;
  bool all = true;
  run_acceptance(opt, [&](const CriterionResult& r) {
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.title << "\n";
    for (const auto& line : r.detail) std::cout << "    " << line << "\n";
    std::cout.flush();
    all = all && r.pass;
  });
  return all ? kOk : kOther;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Unsupervised classification of Floquet topological phases"};
  app.require_subcommand(1);
  Common gen, clu, inv, dia, ver;
  std::vector<int> only;
  add_common(app.add_subcommand("generate", "sample parameters and write an ffo-v1 dataset"), gen);
  add_common(app.add_subcommand("cluster", "diffusion-map clustering of a dataset"), clu);
  add_common(app.add_subcommand("invariants", "annotate samples with topological invariants"), inv);
  add_common(app.add_subcommand("diagram", "phase-diagram SVG and merged CSV"), dia);
  auto* v = app.add_subcommand("verify", "run the acceptance pipeline");
  add_common(v, ver);
  v->add_option("--only", only, "criterion numbers to run");
  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen);
    if (app.got_subcommand("cluster")) return cmd_cluster(clu);
    if (app.got_subcommand("invariants")) return cmd_invariants(inv);
    if (app.got_subcommand("diagram")) return cmd_diagram(dia);
    return cmd_verify(ver, only);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
}
