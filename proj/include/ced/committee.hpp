#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ced/inference.hpp"
#include "ced/verdict.hpp"

namespace ced {

enum class TiePolicy { default_not, default_err, abstain };

const char* tie_policy_name(TiePolicy p);
TiePolicy tie_policy_from_name(const std::string& name);

struct CommitteeConfig {
  unsigned k = 3;             // odd
  double temperature = 0.2;   // committee draws; k=1 falls back to 0.0
  TiePolicy tie_policy = TiePolicy::default_not;
};

struct VoteRecord {
  std::string pair_id;
  std::vector<Verdict> verdicts;
  VerdictValue decision = VerdictValue::UNPARSEABLE;
  double vote_share = 0.0;  // agreeing-valid / valid; 0 when no valid votes
};

// Majority over valid verdicts; exact ties among valid votes and the
// zero-valid case resolve per tie_policy.
VoteRecord vote(const std::vector<Verdict>& verdicts, const CommitteeConfig& config,
                std::string pair_id = "");

// Obtains text for one committee draw; wraps backend + cache so the
// committee stays agnostic of transport. Throws propagate as
// UNPARSEABLE verdicts in committee_run.
using DrawFn = std::function<std::string(const RenderedPrompt&, const DecodingParams&)>;

// Issues k completions at sample_index 0..k-1, parses each, votes.
// k=1 degenerates to a single draw at single-shot temperature 0.0
// unless the config overrides it.
VoteRecord committee_run(const RenderedPrompt& prompt, const DrawFn& draw,
                         const CommitteeConfig& config, const ParsePolicy& policy,
                         bool use_channels, unsigned max_tokens = 8,
                         bool single_shot_temperature_override = true);

inline VoteRecord committee_run(const RenderedPrompt& prompt, Backend& backend,
                                const CommitteeConfig& config,
                                const ParsePolicy& policy, bool use_channels = false,
                                unsigned max_tokens = 8) {
  return committee_run(
      prompt,
      [&backend](const RenderedPrompt& p, const DecodingParams& d) {
        return backend.complete(p, d).text;
      },
      config, policy, use_channels, max_tokens);
}

}  // namespace ced
