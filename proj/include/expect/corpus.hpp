#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "expect/instance.hpp"

namespace expect {

/// One problem found while loading a corpus file. `line` is 1-based;
/// warnings do not reject the record.
struct LoadIssue {
  int line = 0;
  bool warning = false;
  std::string field;
  std::string message;
};

std::string format_issue(const LoadIssue& issue);

/// Throws ValidationError on the first violated invariant.
void validate_instance(const AnnotatedInstance& inst);

/// Non-fatal oddities (evidence overlapping the edit span, "others" carrying
/// evidence). The line number is left at 0.
std::vector<LoadIssue> instance_warnings(const AnnotatedInstance& inst);

AnnotatedInstance instance_from_json(const nlohmann::ordered_json& record);
nlohmann::ordered_json instance_to_json(const AnnotatedInstance& inst);

/// Canonical single-line serialization (the form save_corpus writes).
std::string serialize_instance(const AnnotatedInstance& inst);

/// Loads a JSONL corpus. With `issues == nullptr` the first error throws
/// (ParseError or ValidationError, message prefixed with the line number).
/// Otherwise errors and warnings are collected, invalid records are skipped,
/// and the valid ones are returned.
std::vector<AnnotatedInstance> load_corpus(const std::string& path,
                                           std::vector<LoadIssue>* issues = nullptr);
std::vector<AnnotatedInstance> parse_corpus(std::istream& in,
                                            std::vector<LoadIssue>* issues = nullptr);

void save_corpus(const std::string& path, const std::vector<AnnotatedInstance>& instances);

/// Corpus-level counts and averages. Evidence averages are over instances
/// with non-empty evidence. Throws EmptyInputError on an empty list.
CorpusStats corpus_stats(const std::vector<AnnotatedInstance>& instances);

/// Percent of instances per error type; values sum to 100.
std::map<ErrorType, double> type_histogram(const std::vector<AnnotatedInstance>& instances);

}  // namespace expect
