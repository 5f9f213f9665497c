#include "expect/syntax.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>

#include "expect/align.hpp"
#include "expect/errors.hpp"

namespace expect {

void validate_parse(const DependencyParse& parse) {
  const int n = static_cast<int>(parse.heads.size());
  if (n == 0) throw ContractError("parse has no tokens");
  if (!parse.rels.empty() && static_cast<int>(parse.rels.size()) != n)
    throw ContractError("relation labels do not match token count");

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = parse.heads[i];
    if (h == -1) {
      ++roots;
    } else if (h < 0 || h >= n || h == i) {
      throw ContractError("head index " + std::to_string(h) + " of token " + std::to_string(i) +
                          " is invalid");
    }
  }
  if (roots != 1) throw ContractError("parse must have exactly one root, found " +
                                      std::to_string(roots));

  // Walking up from every token must reach the root without revisiting.
  for (int i = 0; i < n; ++i) {
    int steps = 0;
    int cur = i;
    while (parse.heads[cur] != -1) {
      cur = parse.heads[cur];
      if (++steps > n) throw ContractError("head array contains a cycle through token " +
                                           std::to_string(i));
    }
  }
}

namespace {

DependencyParse parse_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("heads") || !j["heads"].is_array())
    throw ParseError("parse record needs a \"heads\" array");
  DependencyParse p;
  for (const auto& h : j["heads"]) {
    if (!h.is_number_integer()) throw ParseError("heads must be integers");
    p.heads.push_back(h.get<int>());
  }
  if (j.contains("rels")) {
    for (const auto& r : j["rels"]) p.rels.push_back(r.get<std::string>());
  }
  return p;
}

}  // namespace

std::map<std::string, DependencyParse> load_parse_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open parse file: " + path);
  std::map<std::string, DependencyParse> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw ParseError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (!j.contains("id") || !j["id"].is_string())
      throw ParseError("line " + std::to_string(lineno) + ": parse record needs a string id");
    DependencyParse p = parse_from_json(j);
    try {
      validate_parse(p);
    } catch (const ContractError& ex) {
      throw ContractError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    out[j["id"].get<std::string>()] = std::move(p);
  }
  return out;
}

void save_parse_fixtures(const std::string& path,
                         const std::map<std::string, DependencyParse>& parses) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write parse file: " + path);
  for (const auto& [id, p] : parses) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["heads"] = p.heads;
    j["rels"] = p.rels;
    out << j.dump() << '\n';
  }
}

FixtureParserBackend FixtureParserBackend::from_file(const std::string& path) {
  return FixtureParserBackend(load_parse_fixtures(path));
}

DependencyParse FixtureParserBackend::parse(const std::string& id,
                                            const std::vector<std::string>& tokens) {
  auto it = parses_.find(id);
  if (it == parses_.end()) throw BackendError("no fixture parse for id '" + id + "'");
  const DependencyParse& p = it->second;
  if (p.heads.size() != tokens.size())
    throw ContractError("fixture parse for '" + id + "' has " + std::to_string(p.heads.size()) +
                        " heads for " + std::to_string(tokens.size()) + " tokens");
  validate_parse(p);
  return p;
}

std::map<std::string, DependencyParse> CommandParserBackend::parse_batch(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& requests) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();
  const auto tag = std::to_string(::getpid());
  const fs::path in_path = dir / ("expect_parse_in_" + tag + ".jsonl");
  const fs::path out_path = dir / ("expect_parse_out_" + tag + ".jsonl");

  {
    std::ofstream out(in_path);
    for (const auto& [id, tokens] : requests) {
      nlohmann::ordered_json j;
      j["id"] = id;
      j["tokens"] = tokens;
      out << j.dump() << '\n';
    }
  }

  const std::string cmdline = command_ + " < " + in_path.string() + " > " + out_path.string();
  const int rc = std::system(cmdline.c_str());
  if (rc != 0) {
    std::error_code ec;
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
    throw BackendError("parser command failed with status " + std::to_string(rc) + ": " +
                       command_);
  }

  std::map<std::string, DependencyParse> replies;
  try {
    replies = load_parse_fixtures(out_path.string());
  } catch (const Error& ex) {
    std::error_code ec;
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
    throw ContractError(std::string("parser command reply: ") + ex.what());
  }
  std::error_code ec;
  fs::remove(in_path, ec);
  fs::remove(out_path, ec);

  for (const auto& [id, tokens] : requests) {
    auto it = replies.find(id);
    if (it == replies.end()) throw ContractError("parser command returned no parse for '" + id + "'");
    if (it->second.heads.size() != tokens.size())
      throw ContractError("parser command returned " + std::to_string(it->second.heads.size()) +
                          " heads for " + std::to_string(tokens.size()) + " tokens of '" + id + "'");
  }
  return replies;
}

DependencyParse CommandParserBackend::parse(const std::string& id,
                                            const std::vector<std::string>& tokens) {
  auto replies = parse_batch({{id, tokens}});
  return replies.at(id);
}

SyntacticVector neighborhood_orders(const DependencyParse& parse, int span_begin, int span_end) {
  validate_parse(parse);
  const int n = static_cast<int>(parse.heads.size());
  if (span_begin >= span_end) throw EmptyInputError("span");
  if (span_begin < 0 || span_end > n)
    throw ValidationError("span", "outside the sentence of length " + std::to_string(n));

  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    if (parse.heads[i] != -1) {
      adj[i].push_back(parse.heads[i]);
      adj[parse.heads[i]].push_back(i);
    }
  }

  // Multi-source BFS capped at distance 2.
  std::vector<int> dist(n, -1);
  std::deque<int> queue;
  for (int i = span_begin; i < span_end; ++i) {
    dist[i] = 0;
    queue.push_back(i);
  }
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    if (dist[cur] >= 2) continue;
    for (int nb : adj[cur]) {
      if (dist[nb] == -1) {
        dist[nb] = dist[cur] + 1;
        queue.push_back(nb);
      }
    }
  }

  SyntacticVector out(n, SynCategory::None);
  for (int i = 0; i < n; ++i) {
    if (dist[i] == 0)
      out[i] = SynCategory::Correction;
    else if (dist[i] == 1)
      out[i] = SynCategory::First;
    else if (dist[i] == 2)
      out[i] = SynCategory::Second;
  }
  return out;
}

SyntacticMatrix build_syntactic_matrix(const SyntacticVector& d_x, const SyntacticVector& d_y,
                                       const SpanEdit& edit) {
  const int n = static_cast<int>(d_x.size());
  const int m = static_cast<int>(d_y.size());
  if (edit.x_begin < 0 || edit.x_end > n || edit.y_begin < 0 || edit.y_end > m)
    throw DimensionError("edit spans do not fit the syntactic vectors");

  SyntacticMatrix mat;
  mat.rows = m;
  mat.cols = n;
  mat.cells.assign(static_cast<size_t>(m) * n, SynCategory::None);
  for (int i = 0; i < m; ++i) {
    const bool edit_row = i >= edit.y_begin && i < edit.y_end;
    for (int j = 0; j < n; ++j) {
      const bool edit_col = j >= edit.x_begin && j < edit.x_end;
      if (edit_row && edit_col)
        mat.at(i, j) = SynCategory::Correction;
      else if (edit_row)
        mat.at(i, j) = d_x[j];
      else if (edit_col)
        mat.at(i, j) = d_y[i];
    }
  }
  return mat;
}

SyntaxFeatures syntax_features(const AnnotatedInstance& inst, const DependencyParse& parse) {
  const int m = static_cast<int>(inst.y_tokens.size());
  if (static_cast<int>(parse.heads.size()) != m)
    throw ContractError("parse for '" + inst.id + "' has " + std::to_string(parse.heads.size()) +
                        " heads for " + std::to_string(m) + " tokens");
  SyntaxFeatures f;
  if (inst.edit.pure_deletion()) {
    // Nothing to expand on the Y side; only the deleted X tokens are marked.
    f.d_y.assign(m, SynCategory::None);
  } else {
    f.d_y = neighborhood_orders(parse, inst.edit.y_begin, inst.edit.y_end);
  }
  const WordAlignment a = build_alignment(inst.x_tokens, inst.y_tokens, inst.edit);
  f.d_x = project_vector(f.d_y, a);
  return f;
}

CoverageReport order_coverage_stats(const std::vector<AnnotatedInstance>& instances,
                                    const std::map<std::string, DependencyParse>& parses) {
  CoverageReport r;
  r.n_instances = static_cast<long long>(instances.size());
  if (instances.empty()) throw EmptyInputError("corpus");

  for (const auto& inst : instances) {
    auto it = parses.find(inst.id);
    if (it == parses.end()) throw Error("missing parse for instance '" + inst.id + "'");
    const SyntaxFeatures f = syntax_features(inst, it->second);

    if (!inst.has_evidence()) continue;
    bool any_first = false, any_second = false;
    bool all_first = true, all_second = true;
    for (int idx : inst.evidence) {
      const SynCategory c = f.d_x[idx];
      const bool in_first = c == SynCategory::First || c == SynCategory::Correction;
      const bool in_second = in_first || c == SynCategory::Second;
      any_first |= in_first;
      any_second |= in_second;
      all_first &= in_first;
      all_second &= in_second;
    }
    r.exist_first_count += any_first;
    r.exist_second_count += any_second;
    r.all_first_count += all_first;
    r.all_second_count += all_second;
  }

  const double denom = static_cast<double>(r.n_instances);
  r.exist_first = 100.0 * static_cast<double>(r.exist_first_count) / denom;
  r.exist_second = 100.0 * static_cast<double>(r.exist_second_count) / denom;
  r.all_first = 100.0 * static_cast<double>(r.all_first_count) / denom;
  r.all_second = 100.0 * static_cast<double>(r.all_second_count) / denom;
  return r;
}

}  // namespace expect
