#include "ced/committee.hpp"

namespace ced {

const char* tie_policy_name(TiePolicy p) {
  switch (p) {
    case TiePolicy::default_not: return "default-NOT";
    case TiePolicy::default_err: return "default-ERR";
    default: return "abstain-as-unparseable";
  }
}

TiePolicy tie_policy_from_name(const std::string& name) {
  if (name == "default-NOT") return TiePolicy::default_not;
  if (name == "default-ERR") return TiePolicy::default_err;
  if (name == "abstain-as-unparseable") return TiePolicy::abstain;
  throw std::runtime_error("unknown tie policy: " + name);
}

VoteRecord vote(const std::vector<Verdict>& verdicts, const CommitteeConfig& config,
                std::string pair_id) {
  if (verdicts.empty()) throw std::runtime_error("vote over empty verdict list");
  std::size_t err = 0, not_ = 0;
  for (const auto& v : verdicts) {
    if (v.value == VerdictValue::ERR) ++err;
    else if (v.value == VerdictValue::NOT) ++not_;
  }
  const std::size_t valid = err + not_;

  VoteRecord record;
  record.pair_id = std::move(pair_id);
  record.verdicts = verdicts;
  if (err > not_) {
    record.decision = VerdictValue::ERR;
    record.vote_share = static_cast<double>(err) / valid;
  } else if (not_ > err) {
    record.decision = VerdictValue::NOT;
    record.vote_share = static_cast<double>(not_) / valid;
  } else {
    // exact tie, including the zero-valid case
    switch (config.tie_policy) {
      case TiePolicy::default_not: record.decision = VerdictValue::NOT; break;
      case TiePolicy::default_err: record.decision = VerdictValue::ERR; break;
      case TiePolicy::abstain: record.decision = VerdictValue::UNPARSEABLE; break;
    }
    record.vote_share = valid == 0 ? 0.0 : static_cast<double>(err) / valid;
  }
  return record;
}

VoteRecord committee_run(const RenderedPrompt& prompt, const DrawFn& draw,
                         const CommitteeConfig& config, const ParsePolicy& policy,
                         bool use_channels, unsigned max_tokens,
                         bool single_shot_temperature_override) {
  DecodingParams params;
  params.temperature = (config.k == 1 && single_shot_temperature_override)
                           ? 0.0
                           : config.temperature;
  params.max_tokens = max_tokens;

  std::vector<Verdict> verdicts;
  verdicts.reserve(config.k);
  for (unsigned i = 0; i < config.k; ++i) {
    params.sample_index = i;
    try {
      const std::string text = draw(prompt, params);
      verdicts.push_back(use_channels ? parse_channels(text, policy)
                                      : parse_label(text, policy));
    } catch (const std::exception& e) {
      // failed draw becomes an UNPARSEABLE verdict; the tie policy decides
      verdicts.push_back({VerdictValue::UNPARSEABLE,
                          std::string(e.what()).substr(0, 200), "draw-failed"});
    }
  }
  return vote(verdicts, config, prompt.pair_id);
}

}  // namespace ced
