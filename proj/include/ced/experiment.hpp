#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ced/cache.hpp"
#include "ced/committee.hpp"
#include "ced/config.hpp"
#include "ced/scoring.hpp"

namespace ced {

struct PairRecord {
  std::string pair_id;
  std::string prompt_hash;
  std::string raw_hash;  // digest over the k completion texts
  VoteRecord votes;
  std::optional<Label> gold;
};

// One (dataset x cell) execution.
struct CellResult {
  std::string dataset;
  std::string cell;
  std::string model_id;
  std::string setting;  // regime name, or "Comm" for k>1 committees
  std::vector<PairRecord> records;
  MetricsRow metrics;
  CacheStats cache;
  std::string error;  // non-empty when the cell aborted; other cells unaffected

  bool ok() const { return error.empty(); }
};

struct RunArtifacts {
  std::vector<CellResult> cells;  // dataset-major, config order
  std::string config_snapshot;
  std::vector<std::string> report_formats;
  std::string external_results_path;
  double wall_seconds = 0.0;
};

struct RunOptions {
  // test hook: overrides backend construction per cell
  std::function<std::unique_ptr<Backend>(const CellSpec&, const DatasetSplit&)>
      backend_factory;
  bool use_cache = true;  // remote-chat completions only
};

RunArtifacts run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Precomputed metric rows (e.g. encoder baselines) merged into reports.
// CSV columns: dataset,model,setting,mcc,f1_err,f1_not
struct ExternalRow {
  std::string dataset, model, setting;
  double mcc, f1_err, f1_not;
};
std::vector<ExternalRow> load_external_results(const std::string& path);

// Tables stack datasets vertically with Model/Setting/MCC/F1-ERR/F1-NOT;
// two decimals in the text table, full precision in CSV.
std::string render_table(const RunArtifacts& artifacts);
std::string render_csv(const RunArtifacts& artifacts);
std::string render_runlog(const CellResult& cell);

// Writes the selected formats under out_dir; returns the file paths.
// Timestamps never enter these files, so re-runs are byte-identical.
std::vector<std::string> emit_report(const RunArtifacts& artifacts,
                                     const std::string& out_dir);

// Reconstructs enough of RunArtifacts from an emitted run directory to
// re-render reports (the `report` subcommand).
RunArtifacts load_artifacts(const std::string& out_dir);

}  // namespace ced
