#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ced/corpus.hpp"

namespace ced {

struct PromptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RegimeId { P0, P1, P2, P3, P4 };

const char* regime_name(RegimeId id);
RegimeId regime_from_name(const std::string& name);

enum class ModelFamily { GPT, LLAMA, OSS };

struct PromptRegime {
  RegimeId id = RegimeId::P0;
  std::optional<ModelFamily> family_hint;
};

// P4 replies carry an <analysis>/<final> scaffold and need the channel parser.
inline bool regime_uses_channels(RegimeId id) { return id == RegimeId::P4; }

struct ExemplarSet {
  std::vector<std::pair<TranslationPair, Label>> exemplars;  // ERR first, then NOT
  std::size_t err_count = 0;
  std::size_t not_count = 0;
};

struct RenderedPrompt {
  std::string text;
  PromptRegime regime;
  std::string pair_id;
  std::string content_hash;  // pure function of text
};

// Deterministic per-class sampling without replacement from a labeled
// pool. Order in the result is ERR exemplars then NOT exemplars.
ExemplarSet select_exemplars(const DatasetSplit& pool, std::size_t err_n,
                             std::size_t not_n, std::uint64_t seed);

// Template text with {source} / {target} / {exemplars} placeholders.
class TemplateRegistry {
 public:
  // The five shipped templates.
  static const TemplateRegistry& builtin();
  // Override from a directory of p0.txt .. p4.txt (missing files keep
  // the built-in text).
  static TemplateRegistry from_directory(const std::string& dir);

  const std::string& text(RegimeId id) const;

 private:
  std::map<RegimeId, std::string> templates_;
};

RenderedPrompt render_prompt(const TranslationPair& pair, const PromptRegime& regime,
                             const std::optional<ExemplarSet>& exemplars = std::nullopt,
                             const TemplateRegistry& registry = TemplateRegistry::builtin());

}  // namespace ced
