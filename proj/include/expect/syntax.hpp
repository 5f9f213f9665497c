#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "expect/instance.hpp"

namespace expect {

/// Dependency-order category of a token relative to the edit span:
/// tree distance 1 (first), 2 (second), the span itself (correction), or
/// anything farther (none).
enum class SynCategory : int { None = 0, First = 1, Second = 2, Correction = 3 };
constexpr int kNumSynCategories = 4;

using SyntacticVector = std::vector<SynCategory>;

/// A dependency tree over one sentence. heads[i] is the head token of i,
/// with the single root marked -1. Relation labels are informational.
struct DependencyParse {
  std::vector<int> heads;
  std::vector<std::string> rels;
};

/// Throws ContractError unless `heads` encodes a tree with exactly one root.
void validate_parse(const DependencyParse& parse);

/// Pairwise grid of categories over (Y positions x X positions); nonzero
/// cells live only on the edit rows and edit columns.
struct SyntacticMatrix {
  int rows = 0;  // |Y|
  int cols = 0;  // |X|
  std::vector<SynCategory> cells;

  SynCategory at(int i, int j) const { return cells[static_cast<size_t>(i) * cols + j]; }
  SynCategory& at(int i, int j) { return cells[static_cast<size_t>(i) * cols + j]; }
};

/// Source of dependency parses. Backends must return one head per input
/// token, aligned to the given tokenization; replies are validated.
class ParserBackend {
 public:
  virtual ~ParserBackend() = default;
  virtual DependencyParse parse(const std::string& id,
                                const std::vector<std::string>& tokens) = 0;
  virtual std::string name() const = 0;
};

/// Serves parses from a JSONL fixture file keyed by instance id:
/// {"id": str, "heads": [int], "rels": [str]}.
class FixtureParserBackend : public ParserBackend {
 public:
  explicit FixtureParserBackend(std::map<std::string, DependencyParse> parses)
      : parses_(std::move(parses)) {}
  static FixtureParserBackend from_file(const std::string& path);

  DependencyParse parse(const std::string& id, const std::vector<std::string>& tokens) override;
  std::string name() const override { return "fixture"; }

  const std::map<std::string, DependencyParse>& table() const { return parses_; }

 private:
  std::map<std::string, DependencyParse> parses_;
};

/// Runs an external command as `cmd < requests.jsonl > replies.jsonl`.
/// Requests are {"id","tokens"} lines; replies use the fixture schema.
class CommandParserBackend : public ParserBackend {
 public:
  explicit CommandParserBackend(std::string command) : command_(std::move(command)) {}

  DependencyParse parse(const std::string& id, const std::vector<std::string>& tokens) override;
  std::map<std::string, DependencyParse> parse_batch(
      const std::vector<std::pair<std::string, std::vector<std::string>>>& requests);
  std::string name() const override { return "command"; }

 private:
  std::string command_;
};

std::map<std::string, DependencyParse> load_parse_fixtures(const std::string& path);
void save_parse_fixtures(const std::string& path,
                         const std::map<std::string, DependencyParse>& parses);

/// Marks, for every token, its undirected tree distance (capped at 2) from
/// the span [begin, end): span tokens themselves become Correction, distance
/// 1 First, distance 2 Second, the rest None.
SyntacticVector neighborhood_orders(const DependencyParse& parse, int span_begin, int span_end);

/// Lays d_x over every Y-edit row and d_y over every X-edit column; cells on
/// both get Correction, all remaining cells None.
SyntacticMatrix build_syntactic_matrix(const SyntacticVector& d_x, const SyntacticVector& d_y,
                                       const SpanEdit& edit);

/// Per-instance categories on both sides: Y from its parse and edit span,
/// X by projecting through the word alignment. A pure deletion has no Y span
/// to expand, so only the X edit tokens are marked.
struct SyntaxFeatures {
  SyntacticVector d_x;
  SyntacticVector d_y;
};

SyntaxFeatures syntax_features(const AnnotatedInstance& inst, const DependencyParse& parse);

/// How much of the gold evidence falls inside the first/second-order
/// neighborhood of the edit, as percents over all instances.
struct CoverageReport {
  long long n_instances = 0;
  long long exist_first_count = 0, exist_second_count = 0;
  long long all_first_count = 0, all_second_count = 0;
  double exist_first = 0.0, exist_second = 0.0;  // at least one evidence word
  double all_first = 0.0, all_second = 0.0;      // every evidence word
};

/// Throws Error (keyed by instance id) when a parse is missing.
CoverageReport order_coverage_stats(const std::vector<AnnotatedInstance>& instances,
                                    const std::map<std::string, DependencyParse>& parses);

}  // namespace expect
