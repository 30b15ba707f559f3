#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "ced/cache.hpp"
#include "ced/experiment.hpp"
#include "ced/serve.hpp"

namespace {

int cmd_validate(const ced::ExperimentConfig& config, bool verbose) {
  int failures = 0;
  for (const auto& ds : config.datasets) {
    try {
      const auto split = ced::parse_corpus(ds.path, ds.format,
                                           ced::LabelScheme::by_name(ds.scheme), ds.name);
      const auto report = ced::validate_split(split, ds.expected);
      if (report.passed()) {
        std::cout << "OK   " << ds.name << "  (" << split.pairs.size() << " pairs, ERR="
                  << report.actual.err << " NOT=" << report.actual.not_ << ")\n";
      } else {
        ++failures;
        std::cout << "FAIL " << ds.name << "\n";
        for (const auto& f : report.findings)
          std::cout << "     [" << f.kind << "] " << f.detail << "\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "FAIL " << ds.name << ": " << e.what() << "\n";
    }
  }
  if (verbose) std::cout << failures << " dataset(s) failed validation\n";
  return failures == 0 ? 0 : 1;
}

int cmd_run(const ced::ExperimentConfig& config, const std::string& out_dir,
            bool verbose) {
  const auto artifacts = ced::run_experiment(config);
  const auto files = ced::emit_report(artifacts, out_dir);
  if (verbose)
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
  int failed_cells = 0;
  for (const auto& c : artifacts.cells) {
    if (c.ok()) {
      std::cout << c.dataset << " / " << c.cell << ": MCC=" << c.metrics.mcc
                << " F1-ERR=" << c.metrics.f1_err << " F1-NOT=" << c.metrics.f1_not
                << "\n";
    } else {
      ++failed_cells;
      std::cout << c.dataset << " / " << c.cell << ": FAILED (" << c.error << ")\n";
    }
  }
  return failed_cells == 0 ? 0 : 1;
}

int cmd_report(const std::string& artifacts_dir, const std::string& out_dir) {
  const auto artifacts = ced::load_artifacts(artifacts_dir);
  const auto files = ced::emit_report(artifacts, out_dir.empty() ? artifacts_dir : out_dir);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_serve(const ced::ExperimentConfig& config, const std::string& cell_name,
              const std::string& host, int port) {
  const ced::CellSpec* cell = nullptr;
  for (const auto& c : config.cells)
    if (cell_name.empty() || c.name == cell_name) {
      cell = &c;
      break;
    }
  if (!cell) {
    std::cerr << "no cell named '" << cell_name << "' in config\n";
    return 1;
  }
  if (cell->backend.kind == "mock-oracle") {
    std::cerr << "cell '" << cell->name
              << "' uses a mock-oracle backend, which needs gold labels and cannot "
                 "serve ad-hoc pairs\n";
    return 1;
  }

  std::optional<ced::ExemplarSet> exemplars;
  if (cell->regime == ced::RegimeId::P1) {
    const auto& pool_spec = *config.exemplar_pool;
    const auto pool = ced::parse_corpus(pool_spec.path, pool_spec.format,
                                        ced::LabelScheme::by_name(pool_spec.scheme),
                                        "exemplar-pool");
    exemplars = ced::select_exemplars(pool, pool_spec.err_n, pool_spec.not_n,
                                      pool_spec.seed);
  }
  auto templates = config.templates_dir.empty()
                       ? ced::TemplateRegistry::builtin()
                       : ced::TemplateRegistry::from_directory(config.templates_dir);

  ced::ClassifyServer server(ced::build_backend(cell->backend, nullptr), *cell,
                             std::move(exemplars), std::move(templates));
  std::cout << "serving cell '" << cell->name << "' on " << host << ":" << port
            << " (POST /classify)\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical error detection harness for EN->DE translation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string cache_dir_override;
  bool verbose = false;
  app.add_option("-c,--config", config_path, "Experiment config file (JSON)");
  app.add_option("--cache-dir", cache_dir_override, "Override the configured cache dir");
  app.add_flag("-v,--verbose", verbose, "Verbose output");

  auto* validate = app.add_subcommand("validate", "Check corpora against the config");

  std::string out_dir = "run";
  auto* run = app.add_subcommand("run", "Execute the configured experiment grid");
  run->add_option("-o,--out", out_dir, "Artifacts output directory");

  std::string artifacts_dir, report_out;
  auto* report = app.add_subcommand("report", "Re-emit reports from run artifacts");
  report->add_option("artifacts", artifacts_dir, "Run artifacts directory")->required();
  report->add_option("-o,--out", report_out, "Output directory (default: in place)");

  std::string serve_cell, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Expose one cell as a classify endpoint");
  serve->add_option("--cell", serve_cell, "Cell name (default: first cell)");
  serve->add_option("--host", host, "Bind host");
  serve->add_option("--port", port, "Bind port");

  auto* cache = app.add_subcommand("cache", "Inspect or purge the response cache");
  bool purge = false;
  cache->add_flag("--purge", purge, "Remove all cache entries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return cmd_report(artifacts_dir, report_out);

    if (config_path.empty()) {
      std::cerr << "--config is required for this subcommand\n";
      return 2;
    }
    auto config = ced::load_config(config_path);
    if (!cache_dir_override.empty()) config.cache_dir = cache_dir_override;

    if (validate->parsed()) return cmd_validate(config, verbose);
    if (run->parsed()) return cmd_run(config, out_dir, verbose);
    if (serve->parsed()) return cmd_serve(config, serve_cell, host, port);
    if (cache->parsed()) {
      ced::ResponseCache rc(config.cache_dir);
      if (purge) {
        std::cout << "purged " << rc.purge() << " entries from " << config.cache_dir
                  << "\n";
      } else {
        std::cout << "cache " << config.cache_dir << ": " << rc.entry_count()
                  << " entries\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
