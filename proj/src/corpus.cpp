#include "ced/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace ced {

namespace {

std::string trim(const std::string& s) {
  auto b = s.begin(), e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string normalize_token(const std::string& raw) { return upper(trim(raw)); }

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

LabelScheme::LabelScheme(std::string name, std::set<std::string> err_aliases,
                         std::set<std::string> not_aliases)
    : name_(std::move(name)) {
  for (const auto& a : err_aliases) err_aliases_.insert(normalize_token(a));
  for (const auto& a : not_aliases) not_aliases_.insert(normalize_token(a));
  for (const auto& a : err_aliases_) {
    if (not_aliases_.count(a))
      throw CorpusError("label scheme '" + name_ + "': alias '" + a +
                        "' appears in both classes");
  }
}

const LabelScheme& LabelScheme::identity() {
  static const LabelScheme s("identity", {"ERR"}, {"NOT"});
  return s;
}

const LabelScheme& LabelScheme::wmt22() {
  static const LabelScheme s("wmt22", {"BAD", "ERR"}, {"OK", "NOT"});
  return s;
}

const LabelScheme& LabelScheme::by_name(const std::string& name) {
  if (name == "identity" || name.empty()) return identity();
  if (name == "wmt22") return wmt22();
  throw CorpusError("unknown label scheme: " + name);
}

std::optional<Label> LabelScheme::lookup(const std::string& raw) const {
  const std::string t = normalize_token(raw);
  if (err_aliases_.count(t)) return Label::ERR;
  if (not_aliases_.count(t)) return Label::NOT;
  return std::nullopt;
}

Label map_label(const std::string& raw, const LabelScheme& scheme) {
  if (auto l = scheme.lookup(raw)) return *l;
  throw CorpusError("label '" + raw + "' not in scheme '" + scheme.name() + "'");
}

LabelTally recount(const DatasetSplit& split) {
  LabelTally t;
  for (const auto& p : split.pairs) {
    if (!p.gold) continue;
    (*p.gold == Label::ERR ? t.err : t.not_)++;
  }
  return t;
}

std::string escape_field(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(const std::string& field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\' || i + 1 == field.size()) {
      out += field[i];
      continue;
    }
    switch (field[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default: out += '\\'; out += field[i];
    }
  }
  return out;
}

DatasetSplit parse_corpus(const std::string& path, const CorpusFormat& format,
                          const LabelScheme& scheme, std::string split_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  if (split_name.empty()) split_name = path;
  return parse_corpus(in, format, scheme, std::move(split_name), path);
}

DatasetSplit parse_corpus(std::istream& in, const CorpusFormat& format,
                          const LabelScheme& scheme, std::string split_name,
                          const std::string& origin) {
  std::string header_line;
  if (!std::getline(in, header_line))
    throw CorpusError("empty corpus: " + origin);
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();

  const auto header = split_line(header_line, format.delimiter);
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return static_cast<int>(i);
    return -1;
  };
  const int id_col = col(format.id_column);
  const int src_col = col(format.source_column);
  const int tgt_col = col(format.target_column);
  const bool want_label = !format.label_column.empty();
  const int lbl_col = want_label ? col(format.label_column) : -1;
  const std::vector<std::pair<int, std::string>> required = {
      {id_col, format.id_column},
      {src_col, format.source_column},
      {tgt_col, format.target_column}};
  for (const auto& [idx, name] : required) {
    if (idx < 0)
      throw CorpusError("missing column '" + name + "' in header of " + origin);
  }
  if (want_label && lbl_col < 0)
    throw CorpusError("missing column '" + format.label_column + "' in header of " +
                      origin);

  DatasetSplit split;
  split.name = std::move(split_name);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line, format.delimiter);
    const int needed = std::max({id_col, src_col, tgt_col, lbl_col});
    if (static_cast<int>(fields.size()) <= needed)
      throw CorpusError("line " + std::to_string(line_no) + " of " + origin +
                        ": expected " + std::to_string(needed + 1) + " columns, got " +
                        std::to_string(fields.size()));
    TranslationPair pair;
    pair.id = trim(fields[id_col]);
    pair.source = unescape_field(fields[src_col]);
    pair.target = unescape_field(fields[tgt_col]);
    if (trim(pair.source).empty() || trim(pair.target).empty())
      throw CorpusError("line " + std::to_string(line_no) + " of " + origin +
                        ": empty source or target");
    if (want_label) {
      const std::string raw = fields[lbl_col];
      if (auto l = scheme.lookup(raw)) {
        pair.gold = *l;
      } else {
        throw CorpusError("line " + std::to_string(line_no) + " of " + origin +
                          ": label '" + trim(raw) + "' not in scheme '" +
                          scheme.name() + "'");
      }
    }
    split.pairs.push_back(std::move(pair));
  }
  if (split.pairs.empty()) throw CorpusError("empty corpus: " + origin);
  split.counts = recount(split);
  return split;
}

void write_canonical(const DatasetSplit& split, std::ostream& out) {
  out << "id\tsource\ttarget\tlabel\n";
  for (const auto& p : split.pairs) {
    out << escape_field(p.id) << '\t' << escape_field(p.source) << '\t'
        << escape_field(p.target) << '\t' << (p.gold ? label_token(*p.gold) : "")
        << '\n';
  }
}

ValidationReport validate_split(const DatasetSplit& split,
                                const std::optional<LabelTally>& expected) {
  ValidationReport report;
  std::unordered_set<std::string> seen;
  for (const auto& p : split.pairs) {
    if (!seen.insert(p.id).second)
      report.findings.push_back({"duplicate-id", "id '" + p.id + "' appears more than once"});
    if (trim(p.source).empty())
      report.findings.push_back({"empty-field", "id '" + p.id + "': empty source"});
    if (trim(p.target).empty())
      report.findings.push_back({"empty-field", "id '" + p.id + "': empty target"});
  }
  report.actual = recount(split);
  if (expected) {
    if (expected->err != report.actual.err)
      report.findings.push_back(
          {"count-mismatch", "ERR: expected " + std::to_string(expected->err) +
                                 ", got " + std::to_string(report.actual.err)});
    if (expected->not_ != report.actual.not_)
      report.findings.push_back(
          {"count-mismatch", "NOT: expected " + std::to_string(expected->not_) +
                                 ", got " + std::to_string(report.actual.not_)});
  }
  return report;
}

}  // namespace ced
