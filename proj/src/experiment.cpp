#include "ced/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ced/hash.hpp"
#include "ced/verdict.hpp"

namespace ced {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// Consults the response cache around an inner backend. Only remote
// completions are worth caching; mock backends replay for free and their
// flip/seed parameters are not part of the cache key.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::unique_ptr<Backend> inner, ResponseCache* cache)
      : inner_(std::move(inner)), cache_(cache) {}

  RawCompletion complete(const RenderedPrompt& prompt,
                         const DecodingParams& params) override {
    if (cache_ && inner_->descriptor().kind == BackendKind::remote_chat) {
      const CacheKey key = CacheKey::make(inner_->descriptor(), prompt, params);
      if (auto hit = cache_->lookup(key)) {
        hit->backend = inner_->descriptor();
        return *hit;
      }
      RawCompletion fresh = inner_->complete(prompt, params);
      cache_->store(key, fresh);
      return fresh;
    }
    return inner_->complete(prompt, params);
  }

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }

 private:
  std::unique_ptr<Backend> inner_;
  ResponseCache* cache_;
};

std::string cell_setting(const CellSpec& cell) {
  return cell.committee.k > 1 ? "Comm" : regime_name(cell.regime);
}

CellResult run_cell(const CellSpec& cell, const DatasetSpec& dataset_spec,
                    const DatasetSplit& split,
                    const std::optional<ExemplarSet>& exemplars,
                    const TemplateRegistry& templates, ResponseCache* cache,
                    const RunOptions& options) {
  CellResult result;
  result.dataset = dataset_spec.name;
  result.cell = cell.name;
  result.model_id = cell.backend.model_id;
  result.setting = cell_setting(cell);

  std::unique_ptr<Backend> backend =
      options.backend_factory ? options.backend_factory(cell, split)
                              : build_backend(cell.backend, &split);
  CachingBackend cached(std::move(backend), options.use_cache ? cache : nullptr);

  PromptRegime regime{cell.regime};
  std::vector<RenderedPrompt> prompts;
  prompts.reserve(split.pairs.size());
  for (const auto& pair : split.pairs)
    prompts.push_back(render_prompt(pair, regime, exemplars, templates));

  DecodingParams params;
  params.temperature = cell.committee.temperature;
  params.max_tokens = cell.effective_max_tokens();

  // draw-major batches keep ordering per pair trivially stable
  const unsigned k = cell.committee.k;
  std::vector<BatchResult> draws;
  draws.reserve(k);
  ConcurrencyLimits limits{cell.max_in_flight, cell.fail_fast};
  for (unsigned s = 0; s < k; ++s) {
    params.sample_index = s;
    draws.push_back(run_batch(prompts, cached, params, limits));
  }

  ParsePolicy policy{cell.parse_mode, &LabelScheme::by_name(cell.parse_scheme)};
  const bool channels = regime_uses_channels(cell.regime);

  std::vector<VerdictValue> decisions;
  std::vector<std::optional<Label>> golds;
  decisions.reserve(split.pairs.size());
  for (std::size_t i = 0; i < split.pairs.size(); ++i) {
    std::vector<Verdict> verdicts;
    std::string raw_concat;
    for (unsigned s = 0; s < k; ++s) {
      const BatchItem& item = draws[s].items[i];
      if (item.ok()) {
        raw_concat += item.completion->text;
        raw_concat += '\x1e';
        verdicts.push_back(channels ? parse_channels(item.completion->text, policy)
                                    : parse_label(item.completion->text, policy));
      } else {
        raw_concat += '\x1e';
        verdicts.push_back({VerdictValue::UNPARSEABLE, item.error.substr(0, 200),
                            "draw-failed"});
      }
    }
    PairRecord record;
    record.pair_id = split.pairs[i].id;
    record.prompt_hash = prompts[i].content_hash;
    record.raw_hash = content_digest(raw_concat);
    record.votes = vote(verdicts, cell.committee, split.pairs[i].id);
    record.gold = split.pairs[i].gold;
    decisions.push_back(record.votes.decision);
    golds.push_back(record.gold);
    result.records.push_back(std::move(record));
  }

  result.metrics = score_run(decisions, golds, cell.scoring);
  return result;
}

std::string sanitize(std::string name) {
  for (char& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return name;
}

std::string runlog_filename(const std::string& dataset, const std::string& cell) {
  return "runlog_" + sanitize(dataset) + "__" + sanitize(cell) + ".jsonl";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();

  RunArtifacts artifacts;
  artifacts.config_snapshot = config.snapshot;
  artifacts.report_formats = config.report_formats;
  artifacts.external_results_path = config.external_results_path;

  const TemplateRegistry templates =
      config.templates_dir.empty() ? TemplateRegistry::builtin()
                                   : TemplateRegistry::from_directory(config.templates_dir);
  ResponseCache cache(config.cache_dir);

  std::optional<DatasetSplit> pool;
  if (config.exemplar_pool) {
    pool = parse_corpus(config.exemplar_pool->path, config.exemplar_pool->format,
                        LabelScheme::by_name(config.exemplar_pool->scheme),
                        "exemplar-pool");
  }

  for (const auto& dataset_spec : config.datasets) {
    std::optional<DatasetSplit> split;
    std::string dataset_error;
    try {
      split = parse_corpus(dataset_spec.path, dataset_spec.format,
                           LabelScheme::by_name(dataset_spec.scheme), dataset_spec.name);
      if (dataset_spec.expected) {
        const auto report = validate_split(*split, dataset_spec.expected);
        if (!report.passed()) {
          std::ostringstream msg;
          msg << "validation failed:";
          for (const auto& f : report.findings) msg << " [" << f.kind << "] " << f.detail;
          dataset_error = msg.str();
        }
      }
    } catch (const std::exception& e) {
      dataset_error = e.what();
    }

    // exemplars drawn once per dataset from the pool minus this split's ids
    std::optional<ExemplarSet> exemplars;
    const bool any_p1 = std::any_of(config.cells.begin(), config.cells.end(),
                                    [](const CellSpec& c) { return c.regime == RegimeId::P1; });
    if (any_p1 && pool && split && dataset_error.empty()) {
      DatasetSplit filtered;
      filtered.name = pool->name;
      std::unordered_set<std::string> eval_ids;
      for (const auto& p : split->pairs) eval_ids.insert(p.id);
      for (const auto& p : pool->pairs)
        if (!eval_ids.count(p.id)) filtered.pairs.push_back(p);
      filtered.counts = recount(filtered);
      exemplars = select_exemplars(filtered, config.exemplar_pool->err_n,
                                   config.exemplar_pool->not_n,
                                   config.exemplar_pool->seed);
    }

    for (const auto& cell : config.cells) {
      const auto cache_before = cache.stats();
      CellResult result;
      if (!dataset_error.empty()) {
        result.dataset = dataset_spec.name;
        result.cell = cell.name;
        result.model_id = cell.backend.model_id;
        result.setting = cell_setting(cell);
        result.error = dataset_error;
      } else {
        try {
          result = run_cell(cell, dataset_spec, *split,
                            cell.regime == RegimeId::P1 ? exemplars : std::nullopt,
                            templates, &cache, options);
        } catch (const std::exception& e) {
          // cell isolation: this cell aborts, the run continues
          result.dataset = dataset_spec.name;
          result.cell = cell.name;
          result.model_id = cell.backend.model_id;
          result.setting = cell_setting(cell);
          result.records.clear();
          result.error = e.what();
        }
      }
      const auto cache_after = cache.stats();
      result.cache.hits = cache_after.hits - cache_before.hits;
      result.cache.misses = cache_after.misses - cache_before.misses;
      result.cache.stores = cache_after.stores - cache_before.stores;
      result.cache.quarantined = cache_after.quarantined - cache_before.quarantined;
      artifacts.cells.push_back(std::move(result));
    }
  }

  artifacts.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return artifacts;
}

std::vector<ExternalRow> load_external_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open external results: " + path);
  std::vector<ExternalRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream fields(line);
    ExternalRow row;
    std::string tok;
    auto next = [&](const char* what) {
      if (!std::getline(fields, tok, ','))
        throw std::runtime_error("external results " + path + ": missing " + what);
      return tok;
    };
    row.dataset = next("dataset");
    row.model = next("model");
    row.setting = next("setting");
    row.mcc = std::stod(next("mcc"));
    row.f1_err = std::stod(next("f1_err"));
    row.f1_not = std::stod(next("f1_not"));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_table(const RunArtifacts& artifacts) {
  if (artifacts.cells.empty()) throw std::runtime_error("no cells to report");

  std::vector<ExternalRow> external;
  if (!artifacts.external_results_path.empty())
    external = load_external_results(artifacts.external_results_path);

  // preserve dataset order as configured
  std::vector<std::string> datasets;
  for (const auto& c : artifacts.cells)
    if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end())
      datasets.push_back(c.dataset);
  for (const auto& r : external)
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
      datasets.push_back(r.dataset);

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  auto row = [&out](const std::string& model, const std::string& setting, double mcc,
                    double f1e, double f1n, const std::string& note) {
    out << "  " << std::left << std::setw(24) << model << std::setw(10) << setting
        << std::right << std::setw(6) << mcc << std::setw(8) << f1e << std::setw(8)
        << f1n;
    if (!note.empty()) out << "  " << note;
    out << '\n';
  };

  bool first = true;
  for (const auto& ds : datasets) {
    if (!first) out << '\n';
    first = false;
    out << "Dataset: " << ds << '\n';
    out << "  " << std::left << std::setw(24) << "Model" << std::setw(10) << "Setting"
        << std::right << std::setw(6) << "MCC" << std::setw(8) << "F1-ERR"
        << std::setw(8) << "F1-NOT" << '\n';
    for (const auto& r : external)
      if (r.dataset == ds) row(r.model, r.setting, r.mcc, r.f1_err, r.f1_not, "(external)");
    for (const auto& c : artifacts.cells) {
      if (c.dataset != ds) continue;
      if (!c.ok()) {
        out << "  " << std::left << std::setw(24) << c.model_id << std::setw(10)
            << c.setting << std::right << "  FAILED: " << c.error << '\n';
        continue;
      }
      std::string note;
      if (c.metrics.unparseable_count > 0)
        note = "unparseable=" + std::to_string(c.metrics.unparseable_count) + " (" +
               c.metrics.policy_note + ")";
      row(c.model_id, c.setting, c.metrics.mcc, c.metrics.f1_err, c.metrics.f1_not, note);
    }
  }
  return out.str();
}

std::string render_csv(const RunArtifacts& artifacts) {
  if (artifacts.cells.empty()) throw std::runtime_error("no cells to report");
  std::ostringstream out;
  out << "dataset,cell,model,setting,mcc,f1_err,f1_not,n,unparseable,policy,error\n";
  out << std::setprecision(17);
  std::vector<ExternalRow> external;
  if (!artifacts.external_results_path.empty())
    external = load_external_results(artifacts.external_results_path);
  for (const auto& r : external)
    out << r.dataset << ",external," << r.model << ',' << r.setting << ',' << r.mcc
        << ',' << r.f1_err << ',' << r.f1_not << ",,,external,\n";
  for (const auto& c : artifacts.cells) {
    out << c.dataset << ',' << c.cell << ',' << c.model_id << ',' << c.setting << ',';
    if (c.ok())
      out << c.metrics.mcc << ',' << c.metrics.f1_err << ',' << c.metrics.f1_not << ','
          << c.metrics.n << ',' << c.metrics.unparseable_count << ','
          << c.metrics.policy_note << ',';
    else
      out << ",,,,,," << '"' << c.error << '"';
    out << '\n';
  }
  return out.str();
}

std::string render_runlog(const CellResult& cell) {
  std::ostringstream out;
  for (const auto& r : cell.records) {
    ordered_json line = {
        {"id", r.pair_id},
        {"prompt_hash", r.prompt_hash},
        {"raw_hash", r.raw_hash},
        {"verdicts", ordered_json::array()},
        {"decision", verdict_token(r.votes.decision)},
        {"vote_share", r.votes.vote_share},
        {"gold", r.gold ? label_token(*r.gold) : ""},
    };
    for (const auto& v : r.votes.verdicts)
      line["verdicts"].push_back({{"value", verdict_token(v.value)}, {"rule", v.rule}});
    out << line.dump() << '\n';
  }
  return out.str();
}

std::vector<std::string> emit_report(const RunArtifacts& artifacts,
                                     const std::string& out_dir) {
  if (artifacts.cells.empty())
    throw std::runtime_error("refusing to emit report for empty artifacts");
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(out_dir) / name;
    write_file(path, content);
    written.push_back(path.string());
  };

  emit("config_snapshot.json", artifacts.config_snapshot);

  ordered_json metrics = ordered_json::array();
  for (const auto& c : artifacts.cells) {
    ordered_json entry = {
        {"dataset", c.dataset}, {"cell", c.cell},       {"model", c.model_id},
        {"setting", c.setting}, {"error", c.error},
    };
    if (c.ok())
      entry["metrics"] = {
          {"mcc", c.metrics.mcc},
          {"f1_err", c.metrics.f1_err},
          {"f1_not", c.metrics.f1_not},
          {"n", c.metrics.n},
          {"unparseable", c.metrics.unparseable_count},
          {"policy", c.metrics.policy_note},
      };
    metrics.push_back(std::move(entry));
  }
  emit("metrics.json", metrics.dump(2) + "\n");

  const auto& formats = artifacts.report_formats;
  auto wants = [&formats](const char* f) {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  };
  if (wants("table-text")) emit("report.txt", render_table(artifacts));
  if (wants("csv")) emit("report.csv", render_csv(artifacts));
  if (wants("runlog"))
    for (const auto& c : artifacts.cells)
      if (c.ok()) emit(runlog_filename(c.dataset, c.cell), render_runlog(c));

  // timing and cache statistics live apart from the deterministic artifacts
  ordered_json stats = {{"wall_seconds", artifacts.wall_seconds},
                        {"cells", ordered_json::array()}};
  for (const auto& c : artifacts.cells)
    stats["cells"].push_back({{"dataset", c.dataset},
                              {"cell", c.cell},
                              {"cache_hits", c.cache.hits},
                              {"cache_misses", c.cache.misses},
                              {"cache_stores", c.cache.stores}});
  {
    const fs::path path = fs::path(out_dir) / "stats.json";
    write_file(path, stats.dump(2) + "\n");
  }
  return written;
}

RunArtifacts load_artifacts(const std::string& out_dir) {
  const fs::path dir(out_dir);
  RunArtifacts artifacts;
  {
    std::ifstream in(dir / "config_snapshot.json", std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      artifacts.config_snapshot = buf.str();
    }
  }
  std::ifstream min(dir / "metrics.json", std::ios::binary);
  if (!min) throw std::runtime_error("no metrics.json under " + out_dir);
  ordered_json metrics = ordered_json::parse(min);
  for (const auto& entry : metrics) {
    CellResult c;
    c.dataset = entry.value("dataset", "");
    c.cell = entry.value("cell", "");
    c.model_id = entry.value("model", "");
    c.setting = entry.value("setting", "");
    c.error = entry.value("error", "");
    if (entry.contains("metrics")) {
      const auto& m = entry["metrics"];
      c.metrics.mcc = m.value("mcc", 0.0);
      c.metrics.f1_err = m.value("f1_err", 0.0);
      c.metrics.f1_not = m.value("f1_not", 0.0);
      c.metrics.n = m.value("n", std::uint64_t{0});
      c.metrics.unparseable_count = m.value("unparseable", std::uint64_t{0});
      c.metrics.policy_note = m.value("policy", "");
    }
    artifacts.cells.push_back(std::move(c));
  }
  if (!artifacts.config_snapshot.empty()) {
    try {
      const auto cfg = parse_config(artifacts.config_snapshot, "snapshot");
      artifacts.report_formats = cfg.report_formats;
      artifacts.external_results_path = cfg.external_results_path;
    } catch (const std::exception&) {
      artifacts.report_formats = {"table-text", "csv"};
    }
  }
  return artifacts;
}

}  // namespace ced
