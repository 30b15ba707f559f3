#include <doctest.h>

#include <sstream>

#include "ced/corpus.hpp"
#include "test_util.hpp"

using namespace ced;
using namespace ced::testing;

namespace {

DatasetSplit parse_text(const std::string& text,
                        const CorpusFormat& fmt = CorpusFormat::canonical(),
                        const LabelScheme& scheme = LabelScheme::identity()) {
  std::istringstream in(text);
  return parse_corpus(in, fmt, scheme, "test", "<memory>");
}

}  // namespace

TEST_CASE("map_label resolves aliases case-insensitively") {
  CHECK(map_label("BAD", LabelScheme::wmt22()) == Label::ERR);
  CHECK(map_label("ok", LabelScheme::wmt22()) == Label::NOT);
  CHECK(map_label(" Ok ", LabelScheme::wmt22()) == Label::NOT);
  CHECK(map_label("ERR", LabelScheme::identity()) == Label::ERR);
  CHECK_THROWS_AS(map_label("maybe", LabelScheme::identity()), CorpusError);
}

TEST_CASE("label scheme rejects overlapping alias sets") {
  CHECK_THROWS_AS(LabelScheme("broken", {"X"}, {"x"}), CorpusError);
}

TEST_CASE("parse_corpus reads the canonical TSV") {
  const auto split = parse_text(
      "id\tsource\ttarget\tlabel\n"
      "a\thello\thallo\tERR\n"
      "b\tworld\twelt\tNOT\n");
  REQUIRE(split.pairs.size() == 2);
  CHECK(split.pairs[0].id == "a");
  CHECK(split.pairs[0].gold == Label::ERR);
  CHECK(split.counts.err == 1);
  CHECK(split.counts.not_ == 1);
}

TEST_CASE("parse_corpus maps WMT-22 BAD/OK labels") {
  auto split = make_split(951, 16329, "wmt22-dev");
  std::string tsv = to_tsv(split);
  // rewrite gold tokens as BAD/OK
  std::size_t pos = 0;
  while ((pos = tsv.find("\tERR\n", pos)) != std::string::npos) tsv.replace(pos, 5, "\tBAD\n");
  pos = 0;
  while ((pos = tsv.find("\tNOT\n", pos)) != std::string::npos) tsv.replace(pos, 5, "\tOK\n");
  const auto parsed = parse_text(tsv, CorpusFormat::canonical(), LabelScheme::wmt22());
  CHECK(parsed.counts.err == 951);
  CHECK(parsed.counts.not_ == 16329);
}

TEST_CASE("parse_corpus error paths") {
  SUBCASE("zero-row file") {
    CHECK_THROWS_WITH_AS(parse_text("id\tsource\ttarget\tlabel\n"),
                         doctest::Contains("empty corpus"), CorpusError);
  }
  SUBCASE("empty file") {
    CHECK_THROWS_AS(parse_text(""), CorpusError);
  }
  SUBCASE("missing column is named") {
    CHECK_THROWS_WITH_AS(parse_text("id\tsource\tlabel\na\tx\tERR\n"),
                         doctest::Contains("'target'"), CorpusError);
  }
  SUBCASE("unknown raw label carries the token") {
    CHECK_THROWS_WITH_AS(parse_text("id\tsource\ttarget\tlabel\na\tx\ty\tFINE\n"),
                         doctest::Contains("'FINE'"), CorpusError);
  }
  SUBCASE("empty source rejected") {
    CHECK_THROWS_WITH_AS(parse_text("id\tsource\ttarget\tlabel\na\t \ty\tERR\n"),
                         doctest::Contains("empty source or target"), CorpusError);
  }
}

TEST_CASE("adapter formats remap column names and delimiter") {
  CorpusFormat fmt;
  fmt.delimiter = ',';
  fmt.id_column = "seg_id";
  fmt.source_column = "src";
  fmt.target_column = "mt";
  fmt.label_column = "judgment";
  const auto split = parse_text("seg_id,src,mt,judgment\n7,hi,hallo,BAD\n", fmt,
                                LabelScheme::wmt22());
  REQUIRE(split.pairs.size() == 1);
  CHECK(split.pairs[0].id == "7");
  CHECK(split.pairs[0].gold == Label::ERR);
}

TEST_CASE("unlabeled corpora are legal when no label column is configured") {
  CorpusFormat fmt = CorpusFormat::canonical();
  fmt.label_column.clear();
  const auto split = parse_text("id\tsource\ttarget\na\thi\thallo\n", fmt);
  REQUIRE(split.pairs.size() == 1);
  CHECK_FALSE(split.pairs[0].gold.has_value());
  CHECK(split.counts.total() == 0);
}

TEST_CASE("canonical round-trip preserves ids, texts, labels, and order") {
  DatasetSplit split = make_split(3, 2, "rt");
  split.pairs[0].source = "tabs\tand\nnewlines\\here";
  split.pairs[1].target = "back\\slash";
  split.counts = recount(split);

  const std::string once = to_tsv(split);
  auto reparsed = parse_text(once);
  reparsed.name = split.name;
  CHECK(reparsed == split);
  CHECK(to_tsv(reparsed) == once);
}

TEST_CASE("re-parse of the same text is order-stable") {
  const std::string tsv = to_tsv(make_split(10, 10));
  const auto a = parse_text(tsv);
  const auto b = parse_text(tsv);
  CHECK(a == b);
}

TEST_CASE("count consistency holds for generated splits") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto split = make_split(rng.below(50), rng.below(50) + 1);
    CHECK(split.counts.total() == split.pairs.size());
    CHECK(recount(split) == split.counts);
  }
}

TEST_CASE("validate_split findings") {
  SUBCASE("matching expected counts pass") {
    const auto split = make_split(4000, 4000, "synced-train");
    const auto report = validate_split(split, LabelTally{4000, 4000});
    CHECK(report.passed());
  }
  SUBCASE("off-by-one is a count mismatch") {
    const auto split = make_split(3999, 4000);
    const auto report = validate_split(split, LabelTally{4000, 4000});
    REQUIRE_FALSE(report.passed());
    CHECK(report.findings[0].kind == "count-mismatch");
  }
  SUBCASE("duplicate ids are flagged") {
    auto split = make_split(2, 2);
    split.pairs[1].id = split.pairs[0].id;
    const auto report = validate_split(split);
    REQUIRE_FALSE(report.passed());
    CHECK(report.findings[0].kind == "duplicate-id");
  }
  SUBCASE("empty field is flagged") {
    auto split = make_split(1, 1);
    split.pairs[0].target = "  ";
    const auto report = validate_split(split);
    REQUIRE_FALSE(report.passed());
    CHECK(report.findings[0].kind == "empty-field");
  }
}
