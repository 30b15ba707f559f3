#include "ced/verdict.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ced {

namespace {

std::string excerpt(const std::string& raw) { return raw.substr(0, 200); }

std::string trim_ws(const std::string& s) {
  auto b = s.begin(), e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string strip_punct(std::string t) {
  std::size_t b = 0, e = t.size();
  while (b < e && is_punct(static_cast<unsigned char>(t[b]))) ++b;
  while (e > b && is_punct(static_cast<unsigned char>(t[e - 1]))) --e;
  return t.substr(b, e - b);
}

Verdict unparseable(const std::string& raw, std::string rule) {
  std::string ex = excerpt(raw);
  if (ex.empty()) ex = "<empty>";
  return {VerdictValue::UNPARSEABLE, std::move(ex), std::move(rule)};
}

Verdict tolerant_parse(const std::string& raw, const LabelScheme& scheme,
                       const std::string& rule_prefix) {
  std::istringstream words(raw);
  std::string token;
  std::optional<Label> first;
  bool conflict = false;
  bool first_token = true;
  while (words >> token) {
    const auto label = scheme.lookup(strip_punct(token));
    if (first_token) {
      first = label;
      first_token = false;
      if (!first) break;  // first token must be an alias
    } else if (label && first && *label != *first) {
      conflict = true;
      break;
    }
  }
  if (!first) return unparseable(raw, rule_prefix + "-no-leading-alias");
  if (conflict) return unparseable(raw, rule_prefix + "-conflicting-aliases");
  return {*first == Label::ERR ? VerdictValue::ERR : VerdictValue::NOT,
          excerpt(raw), rule_prefix};
}

}  // namespace

Verdict parse_label(const std::string& raw, const ParsePolicy& policy) {
  const LabelScheme& scheme = *policy.scheme;
  if (policy.mode == ParseMode::strict) {
    const std::string token = trim_ws(raw);
    // exact uppercase token only; scheme lookup normalizes, so require
    // the trimmed text to already be uppercase
    if (!token.empty() && token == strip_punct(token) &&
        std::none_of(token.begin(), token.end(), [](unsigned char c) {
          return std::islower(c) || std::isspace(c);
        })) {
      if (auto l = scheme.lookup(token))
        return {*l == Label::ERR ? VerdictValue::ERR : VerdictValue::NOT,
                excerpt(raw), "strict-token"};
    }
    return unparseable(raw, "strict-reject");
  }
  return tolerant_parse(raw, scheme, "tolerant");
}

Verdict parse_channels(const std::string& raw, const ParsePolicy& policy) {
  static const std::string kOpen = "<final>";
  static const std::string kClose = "</final>";
  const auto open = raw.rfind(kOpen);
  if (open != std::string::npos) {
    const auto begin = open + kOpen.size();
    const auto close = raw.find(kClose, begin);
    const std::string body =
        close == std::string::npos ? raw.substr(begin) : raw.substr(begin, close - begin);
    Verdict v = tolerant_parse(body, *policy.scheme, "final-channel");
    if (!v.is_valid()) v.raw_excerpt = excerpt(raw);
    return v;
  }
  // no scaffold at all: parse the whole body tolerantly
  Verdict v = tolerant_parse(raw, *policy.scheme, "body-fallback");
  return v;
}

}  // namespace ced
