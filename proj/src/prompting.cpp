#include "ced/prompting.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ced/hash.hpp"

namespace ced {

namespace {

const char* kP0 = R"(You are a precise translation evaluator.
Given an English sentence (EN) and its German translation (DE), respond with exactly one token:
ERR if DE has a major error (meaning shift, omission, or inaccuracy), or NOT if it is accurate or only has minor imperfections.
Do not add any explanation, punctuation, or additional text.

EN: {source}
DE: {target}
)";

const char* kP1 = R"(You are a precise translation evaluator.
Given an English sentence (EN) and its German translation (DE), respond with exactly one token:
ERR if DE has a major error (meaning shift, omission, or inaccuracy), or NOT if it is accurate or only has minor imperfections.
Do not add any explanation, punctuation, or additional text.

{exemplars}

EN: {source}
DE: {target}
)";

const char* kP2 = R"(You are a STRICT binary classifier for WMT'21 Task 3 (Critical Error Detection, EN->DE).

Goal
- Decide if the German MT contains at least one CRITICAL meaning error relative to the English source.
- Output exactly one token: ERR or NOT (UPPERCASE, no punctuation, no spaces, no explanation).

Critical errors (any ERR)
- TOX: toxicity/hate/violence/profanity introduced, deleted, mistranslated, or left untranslated.
- SAF: health/safety risk introduced, deleted, mistranslated, or left untranslated (e.g., advice flips, risky omissions).
- NAM: named entity added/removed/mistranslated/gibberish/unrecoverable transliteration.
- SEN: sentiment polarity or negation flipped or materially strengthened/weakened (e.g., "don't" -> "do").
- NUM: wrong/missing/added numbers, dates, times, units that change meaning.

Non-critical (still NOT)
Style, grammar, or lexical variants that preserve meaning; correct transfer of toxicity already in the source.

Decision policy
Mark ERR only with clear evidence of deviation in the categories above.
If uncertain, default to NOT.
Output exactly one token.

EN: {source}
DE: {target}
)";

const char* kP3 = R"(You are a STRICT binary classifier for WMT'21 Task 3 (Critical Error Detection, EN->DE).
Output exactly one token: ERR or NOT (UPPERCASE, no punctuation, no explanation).

ERR if any critical deviation exists:
- TOX: toxicity/hate/violence/profanity introduced, deleted, or mistranslated.
- SAF: health/safety risk introduced, deleted, or mistranslated.
- NAM: named entity added/removed/mistranslated or unrecoverable transliteration.
- SEN: polarity/negation flipped or materially strengthened/weakened.
- NUM: wrong/missing/added numbers, dates, times, or units.

NOT for non-critical issues such as style, casing, punctuation, or minor rewordings preserving meaning.
If uncertain, choose NOT.
Return only ERR or NOT.

EN: {source}
DE: {target}
)";

const char* kP4 = R"(You are a bilingual (EN->DE) translation safety checker for sentence-level Critical Error Detection (CED).

Task
Compare EN (source) with DE (translation) and decide if DE deviates in meaning with real-world consequences.
Use private reasoning internally, then output a single uppercase label.

How to think (channels)
Use the <analysis> channel to reason briefly.
In the <final> channel output exactly one token: ERR or NOT.

Mark ERR if any of the following categories are triggered:
- TOX - Toxicity deviation (hate/violence/profanity).
- SAF - Health/safety risk introduced or removed.
- NAM - Named entity deviation (added, removed, changed, untranslated, or nonsensical).
- SEN - Sentiment or negation flip; modal strength change.
- NUM - Numbers, units, or dates altered or dropped (unless correctly converted).

Do NOT mark ERR for non-critical issues (style, grammar, casing, locale conventions, minor paraphrases).
Choose ERR only with clear evidence in one of the categories above; otherwise NOT.
When uncertain, prefer NOT.

Answer format
<analysis>
Checklist: TOX? SAF? NAM? SEN? NUM?
Note any trigger terms/entities/numbers if present.
</analysis>
<final> ERR </final>

EN: {source}
DE: {target}
)";

// Single pass over the template; substituted values are never rescanned,
// so pair text containing a placeholder cannot trigger a second expansion.
std::string substitute(const std::string& tmpl,
                       const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    const auto close = tmpl.find('}', open);
    out.append(tmpl, pos, open - pos);
    if (close == std::string::npos) {
      out.append(tmpl, open, std::string::npos);
      break;
    }
    const std::string key = tmpl.substr(open + 1, close - open - 1);
    const auto it = values.find(key);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl, open, close - open + 1);  // unknown brace, keep verbatim
    }
    pos = close + 1;
  }
  return out;
}

std::string render_exemplars(const ExemplarSet& set) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [pair, label] : set.exemplars) {
    if (!first) out << "\n\n";
    first = false;
    out << "EN: " << pair.source << "\nDE: " << pair.target
        << "\nLabel: " << label_token(label);
  }
  return out.str();
}

// Partial Fisher-Yates with a splitmix64 stream; std::shuffle is not
// pinned across standard libraries.
std::vector<std::size_t> draw_without_replacement(std::size_t pool_size,
                                                  std::size_t n,
                                                  std::uint64_t seed) {
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  std::uint64_t state = seed;
  for (std::size_t i = 0; i < n; ++i) {
    state = splitmix64(state);
    const std::size_t j = i + static_cast<std::size_t>(state % (pool_size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

}  // namespace

const char* regime_name(RegimeId id) {
  switch (id) {
    case RegimeId::P0: return "P0";
    case RegimeId::P1: return "P1";
    case RegimeId::P2: return "P2";
    case RegimeId::P3: return "P3";
    default: return "P4";
  }
}

RegimeId regime_from_name(const std::string& name) {
  if (name == "P0" || name == "p0") return RegimeId::P0;
  if (name == "P1" || name == "p1") return RegimeId::P1;
  if (name == "P2" || name == "p2") return RegimeId::P2;
  if (name == "P3" || name == "p3") return RegimeId::P3;
  if (name == "P4" || name == "p4") return RegimeId::P4;
  throw PromptError("unknown regime: " + name);
}

ExemplarSet select_exemplars(const DatasetSplit& pool, std::size_t err_n,
                             std::size_t not_n, std::uint64_t seed) {
  std::vector<std::size_t> err_pool, not_pool;
  for (std::size_t i = 0; i < pool.pairs.size(); ++i) {
    if (!pool.pairs[i].gold) continue;
    (*pool.pairs[i].gold == Label::ERR ? err_pool : not_pool).push_back(i);
  }
  if (err_pool.size() < err_n)
    throw PromptError("exemplar pool has " + std::to_string(err_pool.size()) +
                      " ERR pairs, need " + std::to_string(err_n));
  if (not_pool.size() < not_n)
    throw PromptError("exemplar pool has " + std::to_string(not_pool.size()) +
                      " NOT pairs, need " + std::to_string(not_n));

  ExemplarSet set;
  for (std::size_t k : draw_without_replacement(err_pool.size(), err_n,
                                                splitmix64(seed ^ 0x45525221ULL)))
    set.exemplars.emplace_back(pool.pairs[err_pool[k]], Label::ERR);
  for (std::size_t k : draw_without_replacement(not_pool.size(), not_n,
                                                splitmix64(seed ^ 0x4e4f5421ULL)))
    set.exemplars.emplace_back(pool.pairs[not_pool[k]], Label::NOT);
  set.err_count = err_n;
  set.not_count = not_n;
  return set;
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry reg = [] {
    TemplateRegistry r;
    r.templates_ = {{RegimeId::P0, kP0}, {RegimeId::P1, kP1}, {RegimeId::P2, kP2},
                    {RegimeId::P3, kP3}, {RegimeId::P4, kP4}};
    return r;
  }();
  return reg;
}

TemplateRegistry TemplateRegistry::from_directory(const std::string& dir) {
  TemplateRegistry reg = builtin();
  for (auto id : {RegimeId::P0, RegimeId::P1, RegimeId::P2, RegimeId::P3, RegimeId::P4}) {
    std::string name = regime_name(id);
    name[0] = 'p';
    const auto path = std::filesystem::path(dir) / (name + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream body;
    body << in.rdbuf();
    reg.templates_[id] = body.str();
  }
  return reg;
}

const std::string& TemplateRegistry::text(RegimeId id) const {
  const auto it = templates_.find(id);
  if (it == templates_.end())
    throw PromptError(std::string("no template for regime ") + regime_name(id));
  return it->second;
}

RenderedPrompt render_prompt(const TranslationPair& pair, const PromptRegime& regime,
                             const std::optional<ExemplarSet>& exemplars,
                             const TemplateRegistry& registry) {
  if (regime.id == RegimeId::P1 && !exemplars)
    throw PromptError("P1 requires an exemplar set");
  std::map<std::string, std::string> values = {{"source", pair.source},
                                               {"target", pair.target}};
  if (exemplars) values["exemplars"] = render_exemplars(*exemplars);
  RenderedPrompt out;
  out.text = substitute(registry.text(regime.id), values);
  out.regime = regime;
  out.pair_id = pair.id;
  out.content_hash = content_digest(out.text);
  return out;
}

}  // namespace ced
