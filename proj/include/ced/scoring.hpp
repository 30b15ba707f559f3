#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ced/corpus.hpp"
#include "ced/verdict.hpp"

namespace ced {

struct ScoringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ERR is the positive class throughout.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsRow {
  double mcc = 0.0;
  double f1_err = 0.0;
  double f1_not = 0.0;
  std::uint64_t n = 0;
  std::uint64_t unparseable_count = 0;
  std::string policy_note;
};

ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& golds);

// (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)); 0 when any
// marginal is 0. long double keeps counts up to 1e6 exact.
double mcc(const ConfusionMatrix& cm);

// Harmonic mean of precision and recall with `cls` as positive; 0 when
// the denominator vanishes.
double f1_class(const ConfusionMatrix& cm, Label cls);

// What an UNPARSEABLE decision scores as.
enum class UnparseablePolicy { as_not, as_err, drop };

struct ScoringPolicy {
  UnparseablePolicy unparseable = UnparseablePolicy::as_not;
};

const char* unparseable_policy_name(UnparseablePolicy p);

MetricsRow score_run(const std::vector<VerdictValue>& decisions,
                     const std::vector<std::optional<Label>>& golds,
                     const ScoringPolicy& policy = {});

}  // namespace ced
