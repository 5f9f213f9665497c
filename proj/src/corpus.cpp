#include "expect/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "expect/align.hpp"
#include "expect/errors.hpp"

namespace expect {

namespace {

bool has_whitespace(const std::string& tok) {
  return std::any_of(tok.begin(), tok.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

void check_tokens(const std::vector<std::string>& toks, const char* field) {
  for (const auto& t : toks) {
    if (t.empty()) throw ValidationError(field, "empty token");
    if (has_whitespace(t)) throw ValidationError(field, "token contains whitespace: '" + t + "'");
  }
}

std::vector<std::string> read_token_array(const nlohmann::ordered_json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_string()) throw ValidationError(field, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::pair<int, int> read_span(const nlohmann::ordered_json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ValidationError(field, "expected a [start,end) integer pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::string format_issue(const LoadIssue& issue) {
  std::ostringstream os;
  if (issue.line > 0) os << "line " << issue.line << ": ";
  os << (issue.warning ? "warning: " : "error: ");
  if (!issue.field.empty()) os << issue.field << ": ";
  os << issue.message;
  return os.str();
}

void validate_instance(const AnnotatedInstance& inst) {
  if (inst.id.empty()) throw ValidationError("id", "missing or empty");
  check_tokens(inst.x_tokens, "source");
  check_tokens(inst.y_tokens, "target");

  const int n = static_cast<int>(inst.x_tokens.size());
  const int m = static_cast<int>(inst.y_tokens.size());
  const SpanEdit& e = inst.edit;
  if (e.x_begin < 0 || e.x_begin > e.x_end || e.x_end > n)
    throw ValidationError("edit", "src span out of range");
  if (e.y_begin < 0 || e.y_begin > e.y_end || e.y_end > m)
    throw ValidationError("edit", "tgt span out of range");
  if (e.x_begin == e.x_end && e.y_begin == e.y_end)
    throw ValidationError("edit", "both sides of the edit are empty");

  // Applying the edit must reproduce the corrected sentence exactly.
  try {
    if (apply_edit(inst.x_tokens, e) != inst.y_tokens)
      throw ValidationError("edit", "applying the edit does not reproduce the target");
  } catch (const InvalidEditError& ex) {
    throw ValidationError("edit", ex.what());
  }

  int prev = -1;
  for (int idx : inst.evidence) {
    if (idx < 0 || idx >= n)
      throw ValidationError("evidence",
                            "index " + std::to_string(idx) + " out of range [0," +
                                std::to_string(n) + ")");
    if (idx <= prev) throw ValidationError("evidence", "indices must be sorted and unique");
    prev = idx;
  }
}

std::vector<LoadIssue> instance_warnings(const AnnotatedInstance& inst) {
  std::vector<LoadIssue> out;
  for (int idx : inst.evidence) {
    if (idx >= inst.edit.x_begin && idx < inst.edit.x_end) {
      out.push_back({0, true, "evidence",
                     "evidence index " + std::to_string(idx) + " overlaps the edit span"});
      break;
    }
  }
  if (inst.error_type == ErrorType::Others && inst.has_evidence())
    out.push_back({0, true, "evidence", "'others' instance carries evidence words"});
  return out;
}

AnnotatedInstance instance_from_json(const nlohmann::ordered_json& record) {
  if (!record.is_object()) throw ValidationError("record", "expected a JSON object");
  for (const char* key : {"id", "source", "target", "edit", "type", "evidence"}) {
    if (!record.contains(key)) throw ValidationError(key, "missing field");
  }

  AnnotatedInstance inst;
  if (!record["id"].is_string()) throw ValidationError("id", "expected a string");
  inst.id = record["id"].get<std::string>();
  inst.x_tokens = read_token_array(record["source"], "source");
  inst.y_tokens = read_token_array(record["target"], "target");

  const auto& ej = record["edit"];
  if (!ej.is_object() || !ej.contains("src") || !ej.contains("tgt"))
    throw ValidationError("edit", "expected {\"src\":[a,b],\"tgt\":[c,d]}");
  std::tie(inst.edit.x_begin, inst.edit.x_end) = read_span(ej["src"], "edit");
  std::tie(inst.edit.y_begin, inst.edit.y_end) = read_span(ej["tgt"], "edit");

  // Slices are filled after the bounds are known to be sane.
  const int n = static_cast<int>(inst.x_tokens.size());
  const int m = static_cast<int>(inst.y_tokens.size());
  if (inst.edit.x_begin >= 0 && inst.edit.x_begin <= inst.edit.x_end && inst.edit.x_end <= n)
    inst.edit.s_x.assign(inst.x_tokens.begin() + inst.edit.x_begin,
                         inst.x_tokens.begin() + inst.edit.x_end);
  if (inst.edit.y_begin >= 0 && inst.edit.y_begin <= inst.edit.y_end && inst.edit.y_end <= m)
    inst.edit.s_y.assign(inst.y_tokens.begin() + inst.edit.y_begin,
                         inst.y_tokens.begin() + inst.edit.y_end);

  if (!record["type"].is_string()) throw ValidationError("type", "expected a string");
  const std::string type_name = record["type"].get<std::string>();
  auto t = error_type_from_string(type_name);
  if (!t) throw ValidationError("type", "unknown error type '" + type_name + "'");
  inst.error_type = *t;

  if (!record["evidence"].is_array()) throw ValidationError("evidence", "expected an array");
  for (const auto& e : record["evidence"]) {
    if (!e.is_number_integer()) throw ValidationError("evidence", "expected integer indices");
    inst.evidence.push_back(e.get<int>());
  }
  std::sort(inst.evidence.begin(), inst.evidence.end());
  inst.evidence.erase(std::unique(inst.evidence.begin(), inst.evidence.end()),
                      inst.evidence.end());

  if (record.contains("meta")) {
    if (!record["meta"].is_object()) throw ValidationError("meta", "expected an object");
    inst.meta = record["meta"];
  }

  validate_instance(inst);
  return inst;
}

nlohmann::ordered_json instance_to_json(const AnnotatedInstance& inst) {
  nlohmann::ordered_json j;
  j["id"] = inst.id;
  j["source"] = inst.x_tokens;
  j["target"] = inst.y_tokens;
  j["edit"] = {{"src", {inst.edit.x_begin, inst.edit.x_end}},
               {"tgt", {inst.edit.y_begin, inst.edit.y_end}}};
  j["type"] = std::string(to_string(inst.error_type));
  j["evidence"] = inst.evidence;
  j["meta"] = inst.meta;
  return j;
}

std::string serialize_instance(const AnnotatedInstance& inst) {
  return instance_to_json(inst).dump();
}

std::vector<AnnotatedInstance> parse_corpus(std::istream& in, std::vector<LoadIssue>* issues) {
  std::vector<AnnotatedInstance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::ordered_json record;
    try {
      record = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      if (!issues) throw ParseError("line " + std::to_string(lineno) + ": " + ex.what());
      issues->push_back({lineno, false, "", ex.what()});
      continue;
    }
    try {
      AnnotatedInstance inst = instance_from_json(record);
      if (issues) {
        for (LoadIssue w : instance_warnings(inst)) {
          w.line = lineno;
          issues->push_back(std::move(w));
        }
      }
      out.push_back(std::move(inst));
    } catch (const ValidationError& ex) {
      if (!issues)
        throw ValidationError(ex.field, "line " + std::to_string(lineno) + ": " + ex.what());
      issues->push_back({lineno, false, ex.field, ex.what()});
    }
  }
  return out;
}

std::vector<AnnotatedInstance> load_corpus(const std::string& path,
                                           std::vector<LoadIssue>* issues) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);
  return parse_corpus(in, issues);
}

void save_corpus(const std::string& path, const std::vector<AnnotatedInstance>& instances) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file: " + path);
  for (const auto& inst : instances) out << serialize_instance(inst) << '\n';
}

CorpusStats corpus_stats(const std::vector<AnnotatedInstance>& instances) {
  if (instances.empty()) throw EmptyInputError("corpus");
  CorpusStats s;
  s.n_sentences = static_cast<long long>(instances.size());
  long long with_evidence = 0;
  for (const auto& inst : instances) {
    s.n_words += static_cast<long long>(inst.x_tokens.size());
    s.total_evidence_words += static_cast<long long>(inst.evidence.size());
    if (inst.has_evidence()) ++with_evidence;
  }
  s.avg_wps = static_cast<double>(s.n_words) / static_cast<double>(s.n_sentences);
  s.with_evidence_rate = 100.0 * static_cast<double>(with_evidence) / static_cast<double>(s.n_sentences);
  s.avg_evidence_wps =
      with_evidence == 0
          ? 0.0
          : static_cast<double>(s.total_evidence_words) / static_cast<double>(with_evidence);
  return s;
}

std::map<ErrorType, double> type_histogram(const std::vector<AnnotatedInstance>& instances) {
  if (instances.empty()) throw EmptyInputError("corpus");
  std::map<ErrorType, double> hist;
  for (ErrorType t : all_error_types()) hist[t] = 0.0;
  for (const auto& inst : instances) hist[inst.error_type] += 1.0;
  for (auto& [t, v] : hist) v = 100.0 * v / static_cast<double>(instances.size());
  return hist;
}

}  // namespace expect
