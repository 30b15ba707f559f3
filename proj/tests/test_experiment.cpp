#include <doctest.h>

#include <atomic>

#include "ced/experiment.hpp"
#include "test_util.hpp"

using namespace ced;
using namespace ced::testing;

namespace {

std::string basic_config(const std::string& data_path, const std::string& cache_dir,
                         const std::string& backend_json =
                             R"({"kind":"mock-oracle","model_id":"mock","flip_p":0.0,"seed":1})") {
  return std::string(R"({
  "cache_dir": ")") + cache_dir + R"(",
  "datasets": [
    {"name": "fix", "path": ")" + data_path + R"(", "scheme": "identity"}
  ],
  "cells": [
    {"name": "cell0", "backend": )" + backend_json + R"(,
     "regime": "P0", "committee": {"k": 1}, "parse": {"mode": "strict"}}
  ]
})";
}

// fake remote: counts calls, answers from the pair gold encoded in the id
class CountingBackend : public Backend {
 public:
  CountingBackend(std::shared_ptr<std::atomic<int>> counter) : counter_(std::move(counter)) {
    descriptor_.kind = BackendKind::remote_chat;
    descriptor_.model_id = "fake-remote";
  }
  RawCompletion complete(const RenderedPrompt& prompt, const DecodingParams& params) override {
    counter_->fetch_add(1);
    RawCompletion out;
    out.text = prompt.pair_id.starts_with("e") ? "ERR" : "NOT";
    out.backend = descriptor_;
    out.params = params;
    return out;
  }
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  std::shared_ptr<std::atomic<int>> counter_;
};

}  // namespace

TEST_CASE("config validation enumerates all problems at once") {
  const std::string bad = R"({
    "datasets": [{"name": "", "path": "", "scheme": "nope"}],
    "cells": [
      {"name": "", "regime": "P9", "committee": {"k": 2}},
      {"name": "dup", "backend": {"kind": "remote-chat", "model_id": "m"}, "regime": "P1"},
      {"name": "dup", "backend": {"kind": "wat", "model_id": "m"}}
    ]
  })";
  try {
    parse_config(bad, "test");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing name") != std::string::npos);
    CHECK(msg.find("missing path") != std::string::npos);
    CHECK(msg.find("unknown label scheme") != std::string::npos);
    CHECK(msg.find("unknown regime") != std::string::npos);
    CHECK(msg.find("k must be odd") != std::string::npos);
    CHECK(msg.find("missing backend") != std::string::npos);
    CHECK(msg.find("missing endpoint") != std::string::npos);
    CHECK(msg.find("no exemplar_pool") != std::string::npos);
    CHECK(msg.find("unknown backend kind") != std::string::npos);
    CHECK(msg.find("duplicate cell name") != std::string::npos);
  }
}

TEST_CASE("config defaults: committee temperature by k, max_tokens by regime") {
  TempDir dir("cfg");
  const auto data = dir.file("d.tsv", to_tsv(make_split(2, 2)));
  auto cfg = parse_config(R"({
    "datasets": [{"name": "d", "path": ")" + data + R"("}],
    "cells": [
      {"name": "single", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P0",
       "committee": {"k": 1}},
      {"name": "comm", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P4",
       "committee": {"k": 3}}
    ]
  })", "test");
  CHECK(cfg.cells[0].committee.temperature == 0.0);
  CHECK(cfg.cells[0].effective_max_tokens() == 8);
  CHECK(cfg.cells[1].committee.temperature == 0.2);
  CHECK(cfg.cells[1].effective_max_tokens() == 512);
}

TEST_CASE("zero-noise oracle run scores perfectly") {
  TempDir dir("run");
  const auto data = dir.file("d.tsv", to_tsv(make_split(25, 25)));
  const auto cfg = parse_config(basic_config(data, dir.sub("cache")), "test");
  const auto artifacts = run_experiment(cfg);
  REQUIRE(artifacts.cells.size() == 1);
  const auto& cell = artifacts.cells[0];
  REQUIRE(cell.ok());
  CHECK(cell.metrics.mcc == 1.0);
  CHECK(cell.metrics.f1_err == 1.0);
  CHECK(cell.metrics.f1_not == 1.0);
  CHECK(cell.metrics.n == 50);
  CHECK(cell.records.size() == 50);
}

TEST_CASE("identical config and seeds give byte-identical artifacts") {
  TempDir dir("det");
  const auto data = dir.file("d.tsv", to_tsv(make_split(20, 30)));
  const std::string backend =
      R"({"kind":"mock-oracle","model_id":"mock","flip_p":0.25,"seed":7})";
  const auto cfg = parse_config(basic_config(data, dir.sub("cache"), backend), "test");

  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  CHECK(render_runlog(a.cells[0]) == render_runlog(b.cells[0]));
  CHECK(render_table(a) == render_table(b));
  CHECK(render_csv(a) == render_csv(b));

  const auto files_a = emit_report(a, dir.sub("outA"));
  const auto files_b = emit_report(b, dir.sub("outB"));
  REQUIRE(files_a.size() == files_b.size());
  for (std::size_t i = 0; i < files_a.size(); ++i)
    CHECK(slurp(files_a[i]) == slurp(files_b[i]));
}

TEST_CASE("warm cache re-run issues zero remote requests") {
  TempDir dir("cache_sound");
  const auto data = dir.file("d.tsv", to_tsv(make_split(10, 10)));
  const auto cfg = parse_config(
      basic_config(data, dir.sub("cache"),
                   R"({"kind":"remote-chat","model_id":"fake-remote","endpoint":"http://unused.invalid/v1"})"),
      "test");

  auto cold_counter = std::make_shared<std::atomic<int>>(0);
  RunOptions cold;
  cold.backend_factory = [&](const CellSpec&, const DatasetSplit&) {
    return std::make_unique<CountingBackend>(cold_counter);
  };
  const auto first = run_experiment(cfg, cold);
  REQUIRE(first.cells[0].ok());
  CHECK(cold_counter->load() == 20);
  CHECK(first.cells[0].cache.misses == 20);
  CHECK(first.cells[0].cache.stores == 20);

  auto warm_counter = std::make_shared<std::atomic<int>>(0);
  RunOptions warm;
  warm.backend_factory = [&](const CellSpec&, const DatasetSplit&) {
    return std::make_unique<CountingBackend>(warm_counter);
  };
  const auto second = run_experiment(cfg, warm);
  CHECK(warm_counter->load() == 0);
  CHECK(second.cells[0].cache.hits == 20);
  CHECK(second.cells[0].cache.misses == 0);
  CHECK(second.cells[0].metrics.mcc == first.cells[0].metrics.mcc);
  CHECK(second.cells[0].metrics.f1_err == first.cells[0].metrics.f1_err);
  CHECK(second.cells[0].metrics.f1_not == first.cells[0].metrics.f1_not);
  CHECK(render_runlog(second.cells[0]) == render_runlog(first.cells[0]));
}

TEST_CASE("cell failure never alters other cells") {
  TempDir dir("isolate");
  const auto data = dir.file("d.tsv", to_tsv(make_split(5, 5)));
  const auto cfg = parse_config(R"({
    "cache_dir": ")" + dir.sub("cache") + R"(",
    "datasets": [{"name": "fix", "path": ")" + data + R"("}],
    "cells": [
      {"name": "good", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P0"},
      {"name": "broken", "backend": {"kind": "mock-scripted", "model_id": "m",
        "script": "/nonexistent/script.txt"}, "regime": "P0"},
      {"name": "also-good", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P0"}
    ]
  })", "test");
  const auto artifacts = run_experiment(cfg);
  REQUIRE(artifacts.cells.size() == 3);
  CHECK(artifacts.cells[0].ok());
  CHECK(artifacts.cells[0].metrics.mcc == 1.0);
  CHECK_FALSE(artifacts.cells[1].ok());
  CHECK(artifacts.cells[1].error.find("script") != std::string::npos);
  CHECK(artifacts.cells[2].ok());
  CHECK(artifacts.cells[2].metrics.mcc == 1.0);
}

TEST_CASE("P1 cells draw exemplars from the pool, excluding eval ids") {
  TempDir dir("p1");
  const auto data = dir.file("d.tsv", to_tsv(make_split(6, 6)));
  // pool shares ids e0..e5/n0..n5 with the eval split plus disjoint extras
  auto pool = make_split(12, 12, "pool");
  const auto pool_path = dir.file("pool.tsv", to_tsv(pool));
  const auto cfg = parse_config(R"({
    "cache_dir": ")" + dir.sub("cache") + R"(",
    "exemplar_pool": {"path": ")" + pool_path + R"(", "seed": 3},
    "datasets": [{"name": "fix", "path": ")" + data + R"("}],
    "cells": [
      {"name": "few", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P1"}
    ]
  })", "test");
  const auto artifacts = run_experiment(cfg);
  REQUIRE(artifacts.cells[0].ok());
  CHECK(artifacts.cells[0].metrics.mcc == 1.0);
}

TEST_CASE("reports stack datasets vertically and round-trip through CSV") {
  TempDir dir("report");
  const auto d1 = dir.file("a.tsv", to_tsv(make_split(8, 2)));
  const auto d2 = dir.file("b.tsv", to_tsv(make_split(3, 7)));
  const auto cfg = parse_config(R"({
    "cache_dir": ")" + dir.sub("cache") + R"(",
    "datasets": [
      {"name": "alpha", "path": ")" + d1 + R"("},
      {"name": "beta", "path": ")" + d2 + R"("}
    ],
    "cells": [
      {"name": "noisy", "backend": {"kind": "mock-oracle", "model_id": "mock", "flip_p": 0.2, "seed": 5},
       "regime": "P0", "committee": {"k": 3, "temperature": 0.2}}
    ]
  })", "test");
  const auto artifacts = run_experiment(cfg);
  REQUIRE(artifacts.cells.size() == 2);

  const auto table = render_table(artifacts);
  CHECK(table.find("Dataset: alpha") != std::string::npos);
  CHECK(table.find("Dataset: beta") != std::string::npos);
  CHECK(table.find("Dataset: alpha") < table.find("Dataset: beta"));
  CHECK(table.find("MCC") != std::string::npos);
  CHECK(table.find("F1-ERR") != std::string::npos);
  CHECK(table.find("Comm") != std::string::npos);

  // CSV carries full precision: re-parsed values equal the run's doubles
  const auto csv = render_csv(artifacts);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  for (const auto& cell : artifacts.cells) {
    REQUIRE(std::getline(lines, line));
    std::istringstream fields(line);
    std::string tok;
    for (int skip = 0; skip < 4; ++skip) std::getline(fields, tok, ',');
    std::getline(fields, tok, ',');
    CHECK(std::stod(tok) == cell.metrics.mcc);
    std::getline(fields, tok, ',');
    CHECK(std::stod(tok) == cell.metrics.f1_err);
    std::getline(fields, tok, ',');
    CHECK(std::stod(tok) == cell.metrics.f1_not);
  }
}

TEST_CASE("emit_report refuses empty artifacts") {
  RunArtifacts empty;
  TempDir dir("empty");
  CHECK_THROWS(emit_report(empty, dir.sub("out")));
  CHECK_THROWS(render_table(empty));
}

TEST_CASE("external results merge into the table") {
  TempDir dir("ext");
  const auto data = dir.file("d.tsv", to_tsv(make_split(5, 5)));
  const auto ext = dir.file("encoders.csv",
                            "dataset,model,setting,mcc,f1_err,f1_not\n"
                            "fix,xlm-r-large,encoder,0.46,0.59,0.85\n");
  auto cfg = parse_config(basic_config(data, dir.sub("cache")), "test");
  cfg.external_results_path = ext;
  const auto artifacts = run_experiment(cfg);
  const auto table = render_table(artifacts);
  CHECK(table.find("xlm-r-large") != std::string::npos);
  CHECK(table.find("(external)") != std::string::npos);
  CHECK(table.find("0.46") != std::string::npos);
}

TEST_CASE("load_artifacts re-renders identical reports") {
  TempDir dir("reload");
  const auto data = dir.file("d.tsv", to_tsv(make_split(5, 5)));
  const auto cfg = parse_config(basic_config(data, dir.sub("cache")), "test");
  const auto artifacts = run_experiment(cfg);
  emit_report(artifacts, dir.sub("out"));

  const auto reloaded = load_artifacts(dir.sub("out"));
  CHECK(render_table(reloaded) == render_table(artifacts));
  CHECK(render_csv(reloaded) == render_csv(artifacts));
}

TEST_CASE("dataset validation failure marks its cells, run continues") {
  TempDir dir("valfail");
  const auto data = dir.file("d.tsv", to_tsv(make_split(5, 5)));
  const auto cfg = parse_config(R"({
    "cache_dir": ")" + dir.sub("cache") + R"(",
    "datasets": [
      {"name": "short", "path": ")" + data + R"(", "expected_counts": {"ERR": 6, "NOT": 5}},
      {"name": "fine", "path": ")" + data + R"("}
    ],
    "cells": [
      {"name": "c", "backend": {"kind": "mock-oracle", "model_id": "m"}, "regime": "P0"}
    ]
  })", "test");
  const auto artifacts = run_experiment(cfg);
  REQUIRE(artifacts.cells.size() == 2);
  CHECK_FALSE(artifacts.cells[0].ok());
  CHECK(artifacts.cells[0].error.find("count-mismatch") != std::string::npos);
  CHECK(artifacts.cells[1].ok());
}
