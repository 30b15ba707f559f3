#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ced/committee.hpp"
#include "ced/corpus.hpp"
#include "ced/inference.hpp"
#include "ced/prompting.hpp"
#include "ced/scoring.hpp"

namespace ced {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string name;
  std::string path;
  std::string scheme = "identity";
  CorpusFormat format;
  std::optional<LabelTally> expected;
};

// Superset of BackendDescriptor: mock backends carry their scripting
// parameters here, never over the wire.
struct BackendSpec {
  std::string kind = "mock-oracle";  // remote-chat | mock-oracle | mock-scripted
  std::string model_id;
  std::string endpoint;
  std::string auth_ref;
  double flip_p = 0.0;      // mock-oracle
  std::uint64_t seed = 0;   // mock-oracle
  std::string script_path;  // mock-scripted, one response per line
  std::vector<std::string> responses;  // mock-scripted, inline
};

struct CellSpec {
  std::string name;
  BackendSpec backend;
  RegimeId regime = RegimeId::P0;
  CommitteeConfig committee{.k = 1, .temperature = 0.0};
  unsigned max_tokens = 0;  // 0 = regime default (8, or 512 for P4)
  ParseMode parse_mode = ParseMode::strict;
  std::string parse_scheme = "identity";
  ScoringPolicy scoring;
  unsigned max_in_flight = 8;
  bool fail_fast = false;

  unsigned effective_max_tokens() const {
    if (max_tokens > 0) return max_tokens;
    return regime == RegimeId::P4 ? 512 : 8;
  }
};

struct ExemplarPoolSpec {
  std::string path;
  std::uint64_t seed = 0;
  std::size_t err_n = 5;
  std::size_t not_n = 3;
  std::string scheme = "identity";
  CorpusFormat format;
};

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<CellSpec> cells;
  std::optional<ExemplarPoolSpec> exemplar_pool;
  std::string cache_dir = "cache";
  std::string templates_dir;          // empty = built-in templates
  std::string external_results_path;  // optional precomputed metric rows (CSV)
  std::vector<std::string> report_formats = {"table-text", "csv", "runlog"};
  std::string snapshot;  // raw config text, embedded in run artifacts
};

// Both throw ConfigError listing every problem found, one per line.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

std::unique_ptr<Backend> build_backend(const BackendSpec& spec,
                                       const DatasetSplit* golds_from);

}  // namespace ced
