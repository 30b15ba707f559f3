#include "ced/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ced {

using nlohmann::json;

namespace {

struct ProblemList {
  std::vector<std::string> problems;

  void add(const std::string& p) { problems.push_back(p); }
  void raise_if_any(const std::string& origin) const {
    if (problems.empty()) return;
    std::ostringstream msg;
    msg << "invalid config " << origin << ":";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
};

CorpusFormat parse_format(const json& j) {
  CorpusFormat f;
  if (j.contains("delimiter")) {
    const std::string d = j["delimiter"].get<std::string>();
    f.delimiter = d == "\\t" || d == "tab" ? '\t' : d.at(0);
  }
  if (j.contains("columns")) {
    const auto& c = j["columns"];
    if (c.contains("id")) f.id_column = c["id"];
    if (c.contains("source")) f.source_column = c["source"];
    if (c.contains("target")) f.target_column = c["target"];
    if (c.contains("label")) f.label_column = c["label"];
  }
  if (j.contains("unlabeled") && j["unlabeled"].get<bool>()) f.label_column.clear();
  return f;
}

DatasetSpec parse_dataset(const json& j, std::size_t idx, ProblemList& problems) {
  DatasetSpec d;
  d.name = j.value("name", "");
  d.path = j.value("path", "");
  d.scheme = j.value("scheme", "identity");
  d.format = parse_format(j);
  if (d.name.empty()) problems.add("datasets[" + std::to_string(idx) + "]: missing name");
  if (d.path.empty()) problems.add("datasets[" + std::to_string(idx) + "]: missing path");
  try {
    LabelScheme::by_name(d.scheme);
  } catch (const std::exception& e) {
    problems.add("datasets[" + std::to_string(idx) + "]: " + e.what());
  }
  if (j.contains("expected_counts")) {
    LabelTally t;
    t.err = j["expected_counts"].value("ERR", 0u);
    t.not_ = j["expected_counts"].value("NOT", 0u);
    d.expected = t;
  }
  return d;
}

BackendSpec parse_backend(const json& j, const std::string& where, ProblemList& problems) {
  BackendSpec b;
  b.kind = j.value("kind", "mock-oracle");
  b.model_id = j.value("model_id", "");
  b.endpoint = j.value("endpoint", "");
  b.auth_ref = j.value("auth_ref", "");
  b.flip_p = j.value("flip_p", 0.0);
  b.seed = j.value("seed", std::uint64_t{0});
  b.script_path = j.value("script", "");
  if (j.contains("responses"))
    b.responses = j["responses"].get<std::vector<std::string>>();
  if (b.model_id.empty()) problems.add(where + ": backend missing model_id");
  if (b.kind == "remote-chat") {
    if (b.endpoint.empty()) problems.add(where + ": remote-chat backend missing endpoint");
  } else if (b.kind == "mock-scripted") {
    if (b.script_path.empty() && b.responses.empty())
      problems.add(where + ": mock-scripted backend needs 'script' or 'responses'");
  } else if (b.kind == "mock-oracle") {
    if (b.flip_p < 0.0 || b.flip_p > 1.0)
      problems.add(where + ": flip_p must be in [0,1]");
  } else {
    problems.add(where + ": unknown backend kind '" + b.kind + "'");
  }
  return b;
}

CellSpec parse_cell(const json& j, std::size_t idx, bool has_pool,
                    ProblemList& problems) {
  const std::string where = "cells[" + std::to_string(idx) + "]";
  CellSpec c;
  c.name = j.value("name", "");
  if (c.name.empty()) problems.add(where + ": missing name");
  if (j.contains("backend")) {
    c.backend = parse_backend(j["backend"], where, problems);
  } else {
    problems.add(where + ": missing backend");
  }
  try {
    c.regime = regime_from_name(j.value("regime", "P0"));
  } catch (const std::exception& e) {
    problems.add(where + ": " + e.what());
  }
  if (c.regime == RegimeId::P1 && !has_pool)
    problems.add(where + ": P1 cell but no exemplar_pool configured");
  if (j.contains("committee")) {
    const auto& cm = j["committee"];
    c.committee.k = cm.value("k", 1u);
    // single-shot default t=0.0, committee default t=0.2
    c.committee.temperature = cm.value("temperature", c.committee.k > 1 ? 0.2 : 0.0);
    try {
      c.committee.tie_policy = tie_policy_from_name(cm.value("tie_policy", "default-NOT"));
    } catch (const std::exception& e) {
      problems.add(where + ": " + e.what());
    }
    if (c.committee.k < 1) problems.add(where + ": committee k must be >= 1");
    if (c.committee.k % 2 == 0) problems.add(where + ": committee k must be odd");
  }
  if (j.contains("decoding")) c.max_tokens = j["decoding"].value("max_tokens", 0u);
  if (j.contains("parse")) {
    const std::string mode = j["parse"].value("mode", "strict");
    if (mode == "strict") c.parse_mode = ParseMode::strict;
    else if (mode == "tolerant") c.parse_mode = ParseMode::tolerant;
    else problems.add(where + ": unknown parse mode '" + mode + "'");
    c.parse_scheme = j["parse"].value("scheme", "identity");
    try {
      LabelScheme::by_name(c.parse_scheme);
    } catch (const std::exception& e) {
      problems.add(where + ": " + e.what());
    }
  }
  if (j.contains("scoring")) {
    const std::string u = j["scoring"].value("unparseable", "as-NOT");
    if (u == "as-NOT") c.scoring.unparseable = UnparseablePolicy::as_not;
    else if (u == "as-ERR") c.scoring.unparseable = UnparseablePolicy::as_err;
    else if (u == "drop") c.scoring.unparseable = UnparseablePolicy::drop;
    else problems.add(where + ": unknown unparseable policy '" + u + "'");
  }
  c.max_in_flight = j.value("max_in_flight", 8u);
  if (c.max_in_flight < 1) problems.add(where + ": max_in_flight must be >= 1");
  c.fail_fast = j.value("fail_fast", false);
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("invalid config " + origin + ": " + e.what());
  }

  ProblemList problems;
  ExperimentConfig cfg;
  cfg.snapshot = text;
  cfg.cache_dir = root.value("cache_dir", "cache");
  cfg.templates_dir = root.value("templates_dir", "");
  cfg.external_results_path = root.value("external_results", "");
  if (root.contains("reports"))
    cfg.report_formats = root["reports"].get<std::vector<std::string>>();
  for (const auto& f : cfg.report_formats)
    if (f != "table-text" && f != "csv" && f != "runlog")
      problems.add("unknown report format '" + f + "'");

  if (root.contains("exemplar_pool")) {
    const auto& p = root["exemplar_pool"];
    ExemplarPoolSpec pool;
    pool.path = p.value("path", "");
    pool.seed = p.value("seed", std::uint64_t{0});
    pool.err_n = p.value("err_n", std::size_t{5});
    pool.not_n = p.value("not_n", std::size_t{3});
    pool.scheme = p.value("scheme", "identity");
    pool.format = parse_format(p);
    if (pool.path.empty()) problems.add("exemplar_pool: missing path");
    cfg.exemplar_pool = pool;
  }

  if (!root.contains("datasets") || root["datasets"].empty()) {
    problems.add("no datasets configured");
  } else {
    for (std::size_t i = 0; i < root["datasets"].size(); ++i)
      cfg.datasets.push_back(parse_dataset(root["datasets"][i], i, problems));
  }
  if (!root.contains("cells") || root["cells"].empty()) {
    problems.add("no cells configured");
  } else {
    for (std::size_t i = 0; i < root["cells"].size(); ++i)
      cfg.cells.push_back(parse_cell(root["cells"][i], i, cfg.exemplar_pool.has_value(),
                                     problems));
  }

  // cell names must be unique; they name run-log files
  std::set<std::string> names;
  for (const auto& c : cfg.cells)
    if (!c.name.empty() && !names.insert(c.name).second)
      problems.add("duplicate cell name '" + c.name + "'");
  std::set<std::string> ds_names;
  for (const auto& d : cfg.datasets)
    if (!d.name.empty() && !ds_names.insert(d.name).second)
      problems.add("duplicate dataset name '" + d.name + "'");

  problems.raise_if_any(origin);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::unique_ptr<Backend> build_backend(const BackendSpec& spec,
                                       const DatasetSplit* golds_from) {
  if (spec.kind == "remote-chat") {
    BackendDescriptor d;
    d.kind = BackendKind::remote_chat;
    d.model_id = spec.model_id;
    d.endpoint = spec.endpoint;
    d.auth_ref = spec.auth_ref;
    return std::make_unique<RemoteChatBackend>(std::move(d));
  }
  if (spec.kind == "mock-scripted") {
    if (!spec.responses.empty())
      return std::make_unique<ScriptedMockBackend>(spec.responses, spec.model_id);
    return ScriptedMockBackend::from_file(spec.script_path, spec.model_id);
  }
  if (spec.kind == "mock-oracle") {
    if (!golds_from)
      throw ConfigError("mock-oracle backend needs a gold-labeled dataset");
    return OracleMockBackend::for_split(*golds_from, spec.flip_p, spec.seed,
                                        spec.model_id);
  }
  throw ConfigError("unknown backend kind: " + spec.kind);
}

}  // namespace ced
