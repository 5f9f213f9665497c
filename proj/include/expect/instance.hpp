#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "expect/error_type.hpp"

namespace expect {

/// The single contiguous difference between an erroneous sentence X and its
/// correction Y. Spans are half-open token intervals; a pure insertion has an
/// empty x span, a pure deletion an empty y span.
struct SpanEdit {
  int x_begin = 0, x_end = 0;
  int y_begin = 0, y_end = 0;
  std::vector<std::string> s_x;  // X[x_begin, x_end)
  std::vector<std::string> s_y;  // Y[y_begin, y_end)

  int x_len() const { return x_end - x_begin; }
  int y_len() const { return y_end - y_begin; }
  bool pure_insertion() const { return x_begin == x_end; }
  bool pure_deletion() const { return y_begin == y_end; }
};

/// One annotated record: a sentence pair, its span edit, the error category,
/// and the evidence token indices (into x_tokens) explaining the correction.
struct AnnotatedInstance {
  std::string id;
  std::vector<std::string> x_tokens;  // erroneous sentence
  std::vector<std::string> y_tokens;  // corrected sentence
  SpanEdit edit;
  ErrorType error_type = ErrorType::Others;
  std::vector<int> evidence;  // sorted, unique, in [0, |x_tokens|)
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool has_evidence() const { return !evidence.empty(); }
};

struct CorpusStats {
  long long n_sentences = 0;
  long long n_words = 0;
  double avg_wps = 0.0;
  double with_evidence_rate = 0.0;  // percent
  long long total_evidence_words = 0;
  double avg_evidence_wps = 0.0;  // over instances with evidence
};

}  // namespace expect
