#pragma once

#include <string>

#include "ced/corpus.hpp"

namespace ced {

enum class VerdictValue { ERR, NOT, UNPARSEABLE };

inline const char* verdict_token(VerdictValue v) {
  switch (v) {
    case VerdictValue::ERR: return "ERR";
    case VerdictValue::NOT: return "NOT";
    default: return "UNPARSEABLE";
  }
}

struct Verdict {
  VerdictValue value = VerdictValue::UNPARSEABLE;
  std::string raw_excerpt;  // first 200 chars of the completion
  std::string rule;         // parse rule that fired, for run-log audit

  bool is_valid() const { return value != VerdictValue::UNPARSEABLE; }
};

enum class ParseMode { strict, tolerant };

struct ParsePolicy {
  ParseMode mode = ParseMode::strict;
  const LabelScheme* scheme = &LabelScheme::identity();
};

// Never throws; off-contract text becomes UNPARSEABLE so voting and
// scoring can proceed.
//
// strict: trimmed text must equal an uppercase alias exactly.
// tolerant: case-fold, strip surrounding punctuation per token; the first
// whitespace-delimited token must be an alias and no token elsewhere may
// name the opposite class.
Verdict parse_label(const std::string& raw, const ParsePolicy& policy);

// P4 scaffold: parses the content of the last <final>...</final> region
// in tolerant mode; without a final region, falls back to tolerant
// whole-text parsing.
Verdict parse_channels(const std::string& raw, const ParsePolicy& policy = {ParseMode::tolerant});

}  // namespace ced
