#include "ced/scoring.hpp"

#include <cmath>

namespace ced {

ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& golds) {
  if (predictions.size() != golds.size())
    throw ScoringError("confusion: " + std::to_string(predictions.size()) +
                       " predictions vs " + std::to_string(golds.size()) + " golds");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_err = predictions[i] == Label::ERR;
    const bool gold_err = golds[i] == Label::ERR;
    if (pred_err && gold_err) ++cm.tp;
    else if (pred_err && !gold_err) ++cm.fp;
    else if (!pred_err && gold_err) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

double mcc(const ConfusionMatrix& cm) {
  const long double tp = cm.tp, fp = cm.fp, fn = cm.fn, tn = cm.tn;
  const long double d1 = tp + fp, d2 = tp + fn, d3 = tn + fp, d4 = tn + fn;
  if (d1 == 0 || d2 == 0 || d3 == 0 || d4 == 0) return 0.0;
  const long double num = tp * tn - fp * fn;
  return static_cast<double>(num / std::sqrt(d1 * d2 * d3 * d4));
}

double f1_class(const ConfusionMatrix& cm, Label cls) {
  // for NOT, swap tp<->tn and fp<->fn
  const long double tp = cls == Label::ERR ? cm.tp : cm.tn;
  const long double fp = cls == Label::ERR ? cm.fp : cm.fn;
  const long double fn = cls == Label::ERR ? cm.fn : cm.fp;
  const long double denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * tp / denom);
}

const char* unparseable_policy_name(UnparseablePolicy p) {
  switch (p) {
    case UnparseablePolicy::as_not: return "unparseable-as-NOT";
    case UnparseablePolicy::as_err: return "unparseable-as-ERR";
    default: return "unparseable-dropped";
  }
}

MetricsRow score_run(const std::vector<VerdictValue>& decisions,
                     const std::vector<std::optional<Label>>& golds,
                     const ScoringPolicy& policy) {
  if (decisions.size() != golds.size())
    throw ScoringError("score_run: " + std::to_string(decisions.size()) +
                       " decisions vs " + std::to_string(golds.size()) + " golds");
  std::vector<Label> preds, gold_labels;
  preds.reserve(decisions.size());
  gold_labels.reserve(golds.size());
  std::uint64_t unparseable = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!golds[i])
      throw ScoringError("score_run: missing gold label at index " + std::to_string(i));
    Label pred;
    if (decisions[i] == VerdictValue::UNPARSEABLE) {
      ++unparseable;
      if (policy.unparseable == UnparseablePolicy::drop) continue;
      pred = policy.unparseable == UnparseablePolicy::as_err ? Label::ERR : Label::NOT;
    } else {
      pred = decisions[i] == VerdictValue::ERR ? Label::ERR : Label::NOT;
    }
    preds.push_back(pred);
    gold_labels.push_back(*golds[i]);
  }
  const ConfusionMatrix cm = confusion(preds, gold_labels);
  MetricsRow row;
  row.mcc = mcc(cm);
  row.f1_err = f1_class(cm, Label::ERR);
  row.f1_not = f1_class(cm, Label::NOT);
  row.n = cm.total();
  row.unparseable_count = unparseable;
  row.policy_note = unparseable_policy_name(policy.unparseable);
  return row;
}

}  // namespace ced
