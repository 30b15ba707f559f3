#include <doctest.h>

#include <cmath>

#include "ced/scoring.hpp"
#include "test_util.hpp"

using namespace ced;
using namespace ced::testing;

namespace {

// Independent recount-and-formula oracle; shared with the acceptance
// suite via duplication on purpose, so neither depends on the library.
struct OracleResult {
  double mcc, f1_err, f1_not;
};

OracleResult brute_force_metrics(const std::vector<Label>& preds,
                                 const std::vector<Label>& golds) {
  long double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == Label::ERR && golds[i] == Label::ERR) tp++;
    if (preds[i] == Label::ERR && golds[i] == Label::NOT) fp++;
    if (preds[i] == Label::NOT && golds[i] == Label::ERR) fn++;
    if (preds[i] == Label::NOT && golds[i] == Label::NOT) tn++;
  }
  auto f1_of = [](long double tp_, long double fp_, long double fn_) -> double {
    const long double prec_den = tp_ + fp_, rec_den = tp_ + fn_;
    if (prec_den == 0 || rec_den == 0) {
      // harmonic mean convention: 0 when 2tp+fp+fn == 0 or tp == 0
      return (2 * tp_ + fp_ + fn_) == 0 ? 0.0 : (tp_ == 0 ? 0.0 : 1.0);
    }
    const long double p = tp_ / prec_den, r = tp_ / rec_den;
    if (p + r == 0) return 0.0;
    return static_cast<double>(2 * p * r / (p + r));
  };
  OracleResult out;
  out.f1_err = f1_of(tp, fp, fn);
  out.f1_not = f1_of(tn, fn, fp);
  const long double d = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  out.mcc = d == 0 ? 0.0 : static_cast<double>((tp * tn - fp * fn) / std::sqrt(d));
  return out;
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, double err_share) {
  std::vector<Label> out(n);
  for (auto& l : out) l = rng.unit() < err_share ? Label::ERR : Label::NOT;
  return out;
}

}  // namespace

TEST_CASE("confusion tallies exactly") {
  CHECK(confusion({Label::ERR, Label::NOT}, {Label::ERR, Label::NOT}) ==
        ConfusionMatrix{1, 0, 0, 1});
  CHECK(confusion({Label::NOT, Label::ERR}, {Label::ERR, Label::NOT}) ==
        ConfusionMatrix{0, 1, 1, 0});
  CHECK_THROWS_AS(confusion({Label::ERR}, {}), ScoringError);
}

TEST_CASE("mcc boundary cases") {
  CHECK(mcc({5, 0, 0, 5}) == 1.0);
  CHECK(mcc({0, 5, 5, 0}) == -1.0);
  CHECK(mcc({0, 0, 5, 5}) == 0.0);   // zero tp+fp marginal
  CHECK(mcc({5, 5, 0, 0}) == 0.0);   // zero fn+tn marginal
  CHECK(mcc({0, 0, 0, 0}) == 0.0);
  // hand case: (3*4 - 1*2) / sqrt(4*5*5*6) = 10/sqrt(600)
  CHECK(mcc({3, 1, 2, 4}) == doctest::Approx(10.0 / std::sqrt(600.0)).epsilon(1e-12));
  CHECK(mcc({3, 1, 2, 4}) == doctest::Approx(0.408248).epsilon(1e-6));
}

TEST_CASE("f1 per class") {
  CHECK(f1_class({5, 0, 0, 5}, Label::ERR) == 1.0);
  CHECK(f1_class({5, 0, 0, 5}, Label::NOT) == 1.0);
  CHECK(f1_class({3, 1, 2, 4}, Label::ERR) == doctest::Approx(6.0 / 9.0).epsilon(1e-12));
  CHECK(f1_class({3, 1, 2, 4}, Label::NOT) == doctest::Approx(8.0 / 11.0).epsilon(1e-12));
  // all-NOT predictor with gold ERR present: zero recall
  CHECK(f1_class({0, 0, 5, 5}, Label::ERR) == 0.0);
  CHECK(f1_class({0, 0, 0, 0}, Label::ERR) == 0.0);
}

TEST_CASE("oracle equivalence on random vectors") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = rng.below(1000) + 1;
    const auto preds = random_labels(rng, n, 0.1 + 0.8 * rng.unit());
    const auto golds = random_labels(rng, n, 0.1 + 0.8 * rng.unit());
    const auto cm = confusion(preds, golds);
    const auto expected = brute_force_metrics(preds, golds);
    CHECK(mcc(cm) == doctest::Approx(expected.mcc).epsilon(1e-12));
    CHECK(f1_class(cm, Label::ERR) == doctest::Approx(expected.f1_err).epsilon(1e-12));
    CHECK(f1_class(cm, Label::NOT) == doctest::Approx(expected.f1_not).epsilon(1e-12));
  }
}

TEST_CASE("class-swap symmetry and boundedness") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng.below(300) + 1;
    auto preds = random_labels(rng, n, rng.unit());
    auto golds = random_labels(rng, n, rng.unit());
    const auto cm = confusion(preds, golds);
    for (auto& l : preds) l = label_opposite(l);
    for (auto& l : golds) l = label_opposite(l);
    const auto swapped = confusion(preds, golds);
    CHECK(mcc(swapped) == doctest::Approx(mcc(cm)).epsilon(1e-12));
    CHECK(f1_class(swapped, Label::ERR) ==
          doctest::Approx(f1_class(cm, Label::NOT)).epsilon(1e-12));
    CHECK(mcc(cm) >= -1.0);
    CHECK(mcc(cm) <= 1.0);
    CHECK(f1_class(cm, Label::ERR) >= 0.0);
    CHECK(f1_class(cm, Label::ERR) <= 1.0);
  }
}

TEST_CASE("permutation invariance of metrics") {
  Rng rng(123);
  const std::size_t n = 200;
  auto preds = random_labels(rng, n, 0.4);
  auto golds = random_labels(rng, n, 0.3);
  const auto before = confusion(preds, golds);
  // joint Fisher-Yates shuffle
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = rng.below(i + 1);
    std::swap(preds[i], preds[j]);
    std::swap(golds[i], golds[j]);
  }
  CHECK(confusion(preds, golds) == before);
}

TEST_CASE("score_run applies the unparseable policy") {
  std::vector<VerdictValue> decisions = {VerdictValue::ERR, VerdictValue::UNPARSEABLE,
                                         VerdictValue::NOT, VerdictValue::UNPARSEABLE};
  std::vector<std::optional<Label>> golds = {Label::ERR, Label::NOT, Label::NOT,
                                             Label::ERR};
  SUBCASE("default scores unparseable as NOT") {
    const auto row = score_run(decisions, golds);
    CHECK(row.unparseable_count == 2);
    CHECK(row.n == 4);
    CHECK(row.policy_note == "unparseable-as-NOT");
    // preds: ERR NOT NOT NOT vs golds ERR NOT NOT ERR -> tp=1 tn=2 fn=1
    CHECK(row.f1_err == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("drop policy excludes them") {
    const auto row = score_run(decisions, golds, {UnparseablePolicy::drop});
    CHECK(row.n == 2);
    CHECK(row.unparseable_count == 2);
  }
  SUBCASE("as-ERR policy") {
    const auto row = score_run(decisions, golds, {UnparseablePolicy::as_err});
    CHECK(row.n == 4);
    CHECK(row.policy_note == "unparseable-as-ERR");
  }
}

TEST_CASE("score_run rejects missing golds and length mismatch") {
  CHECK_THROWS_AS(score_run({VerdictValue::ERR}, {std::nullopt}), ScoringError);
  CHECK_THROWS_AS(score_run({VerdictValue::ERR}, {}), ScoringError);
}

TEST_CASE("degenerate all-NOT predictor on imbalanced golds") {
  std::vector<VerdictValue> decisions(95 + 1633, VerdictValue::NOT);
  std::vector<std::optional<Label>> golds;
  for (int i = 0; i < 95; ++i) golds.emplace_back(Label::ERR);
  for (int i = 0; i < 1633; ++i) golds.emplace_back(Label::NOT);
  const auto row = score_run(decisions, golds);
  CHECK(row.mcc == 0.0);
  CHECK(row.f1_err == 0.0);
  CHECK(row.f1_not > 0.9);
}
