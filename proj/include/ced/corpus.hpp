#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ced {

enum class Label { ERR, NOT };

inline const char* label_token(Label l) { return l == Label::ERR ? "ERR" : "NOT"; }
inline Label label_opposite(Label l) { return l == Label::ERR ? Label::NOT : Label::ERR; }

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Maps raw dataset tokens onto the binary ERR/NOT space. Lookup is
// case- and whitespace-insensitive.
class LabelScheme {
 public:
  LabelScheme(std::string name, std::set<std::string> err_aliases,
              std::set<std::string> not_aliases);

  // Built-ins: "identity" (ERR/NOT) and "wmt22" (BAD/OK -> ERR/NOT).
  static const LabelScheme& identity();
  static const LabelScheme& wmt22();
  static const LabelScheme& by_name(const std::string& name);

  const std::string& name() const { return name_; }
  std::optional<Label> lookup(const std::string& raw) const;

 private:
  std::string name_;
  std::set<std::string> err_aliases_;  // normalized: trimmed, uppercased
  std::set<std::string> not_aliases_;
};

// Throws CorpusError when raw maps to neither alias set.
Label map_label(const std::string& raw, const LabelScheme& scheme);

struct TranslationPair {
  std::string id;
  std::string source;  // English
  std::string target;  // German
  std::optional<Label> gold;

  bool operator==(const TranslationPair&) const = default;
};

struct LabelTally {
  std::size_t err = 0;
  std::size_t not_ = 0;

  std::size_t total() const { return err + not_; }
  bool operator==(const LabelTally&) const = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<TranslationPair> pairs;
  LabelTally counts;  // kept equal to a recount over pairs

  bool operator==(const DatasetSplit&) const = default;
};

LabelTally recount(const DatasetSplit& split);

// How a delimited file maps onto TranslationPair fields. The canonical
// format is TSV with header "id<TAB>source<TAB>target<TAB>label"; adapters
// override column names (and may omit the label column for unlabeled data).
struct CorpusFormat {
  char delimiter = '\t';
  std::string id_column = "id";
  std::string source_column = "source";
  std::string target_column = "target";
  std::string label_column = "label";  // empty means no gold labels

  static CorpusFormat canonical() { return {}; }
};

DatasetSplit parse_corpus(const std::string& path, const CorpusFormat& format,
                          const LabelScheme& scheme, std::string split_name = "");
DatasetSplit parse_corpus(std::istream& in, const CorpusFormat& format,
                          const LabelScheme& scheme, std::string split_name,
                          const std::string& origin);

// Canonical TSV serialization; embedded tabs/newlines/backslashes escape
// as \t, \n, \\. Round-trips through parse_corpus with canonical format.
void write_canonical(const DatasetSplit& split, std::ostream& out);
std::string escape_field(const std::string& raw);
std::string unescape_field(const std::string& field);

struct ValidationFinding {
  std::string kind;  // duplicate-id | empty-field | count-mismatch | missing-gold
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  LabelTally actual;

  bool passed() const { return findings.empty(); }
};

ValidationReport validate_split(const DatasetSplit& split,
                                const std::optional<LabelTally>& expected = std::nullopt);

}  // namespace ced
