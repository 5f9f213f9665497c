#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "expect/align.hpp"
#include "expect/corpus.hpp"
#include "expect/errors.hpp"
#include "expect/harness.hpp"
#include "expect/metrics.hpp"
#include "expect/synthesize.hpp"
#include "expect/syntax.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

const char* syn_name(expect::SynCategory c) {
  switch (c) {
    case expect::SynCategory::Correction: return "correction";
    case expect::SynCategory::First: return "first";
    case expect::SynCategory::Second: return "second";
    default: return "none";
  }
}

std::vector<std::string> names_of(const expect::SyntacticVector& v) {
  std::vector<std::string> out;
  out.reserve(v.size());
  for (auto c : v) out.emplace_back(syn_name(c));
  return out;
}

void emit_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void cmd_stats(const std::string& file, bool as_json) {
  const auto instances = expect::load_corpus(file);
  const auto st = expect::corpus_stats(instances);
  const auto hist = expect::type_histogram(instances);
  if (as_json) {
    ordered_json j;
    j["sentences"] = st.n_sentences;
    j["words"] = st.n_words;
    j["avg_words_per_sentence"] = st.avg_wps;
    j["with_evidence_pct"] = st.with_evidence_rate;
    j["evidence_words"] = st.total_evidence_words;
    j["avg_evidence_words"] = st.avg_evidence_wps;
    ordered_json h = ordered_json::object();
    for (auto t : expect::all_error_types()) {
      auto it = hist.find(t);
      h[std::string(expect::to_string(t))] = it == hist.end() ? 0.0 : it->second;
    }
    j["type_histogram_pct"] = std::move(h);
    emit_json(j);
    return;
  }
  std::printf("%-22s %lld\n", "sentences", st.n_sentences);
  std::printf("%-22s %lld\n", "words", st.n_words);
  std::printf("%-22s %s\n", "avg words/sentence", num(st.avg_wps).c_str());
  std::printf("%-22s %s\n", "with evidence", pct(st.with_evidence_rate).c_str());
  std::printf("%-22s %lld\n", "evidence words", st.total_evidence_words);
  std::printf("%-22s %s\n", "avg evidence words", num(st.avg_evidence_wps).c_str());
  std::printf("\nerror types:\n");
  std::vector<std::pair<expect::ErrorType, double>> rows(hist.begin(), hist.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [t, share] : rows)
    std::printf("  %-28s %s\n", std::string(expect::to_string(t)).c_str(), pct(share).c_str());
}

int cmd_validate(const std::string& file, bool as_json) {
  std::vector<expect::LoadIssue> issues;
  const auto instances = expect::load_corpus(file, &issues);
  long long errors = 0, warnings = 0;
  for (const auto& issue : issues) (issue.warning ? warnings : errors)++;
  if (as_json) {
    ordered_json j;
    j["instances"] = instances.size();
    j["errors"] = errors;
    j["warnings"] = warnings;
    j["issues"] = ordered_json::array();
    for (const auto& issue : issues) {
      j["issues"].push_back({{"line", issue.line},
                             {"level", issue.warning ? "warning" : "error"},
                             {"field", issue.field},
                             {"message", issue.message}});
    }
    emit_json(j);
  } else {
    for (const auto& issue : issues) std::printf("%s\n", expect::format_issue(issue).c_str());
    std::printf("%zu instances, %lld errors, %lld warnings\n", instances.size(), errors,
                warnings);
  }
  return errors > 0 ? 2 : 0;
}

/// Token array, or raw string to whitespace-split.
std::vector<std::string> pair_tokens(const ordered_json& field, const std::string& name) {
  std::vector<std::string> out;
  if (field.is_array()) {
    for (const auto& t : field) out.push_back(t.get<std::string>());
  } else if (field.is_string()) {
    std::istringstream ss(field.get<std::string>());
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  } else {
    throw expect::ValidationError(name, "expected a token array or a string");
  }
  return out;
}

int cmd_align(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw expect::Error("cannot open pairs file: " + file);
  std::string line;
  int lineno = 0;
  long long failed = 0, total = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++total;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw expect::ParseError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    const std::string id = j.value("id", "pair-" + std::to_string(lineno));
    ordered_json out;
    out["id"] = id;
    try {
      const auto x = pair_tokens(j.at("source"), "source");
      const auto y = pair_tokens(j.at("target"), "target");
      const auto edit = expect::extract_span_edit(x, y);
      out["edit"] = {{"src", {edit.x_begin, edit.x_end}}, {"tgt", {edit.y_begin, edit.y_end}}};
    } catch (const expect::Error& ex) {
      out["edit"] = nullptr;
      out["error"] = ex.what();
      ++failed;
    }
    std::cout << out.dump() << "\n";
  }
  if (failed > 0) {
    std::fprintf(stderr, "%lld of %lld pairs could not be aligned\n", failed, total);
    return 2;
  }
  return 0;
}

void cmd_parse_features(const std::string& corpus, const std::string& parses_path, bool coverage,
                        bool as_json) {
  const auto instances = expect::load_corpus(corpus);
  const auto parses = expect::load_parse_fixtures(parses_path);
  if (coverage) {
    const auto report = expect::order_coverage_stats(instances, parses);
    if (as_json) {
      ordered_json j;
      j["n_instances"] = report.n_instances;
      j["exist_first_pct"] = report.exist_first;
      j["exist_second_pct"] = report.exist_second;
      j["all_first_pct"] = report.all_first;
      j["all_second_pct"] = report.all_second;
      j["exist_first_count"] = report.exist_first_count;
      j["exist_second_count"] = report.exist_second_count;
      j["all_first_count"] = report.all_first_count;
      j["all_second_count"] = report.all_second_count;
      emit_json(j);
    } else {
      std::printf("%-14s %lld\n", "instances", report.n_instances);
      std::printf("%-14s %-8s (%lld)\n", "exist first", pct(report.exist_first).c_str(),
                  report.exist_first_count);
      std::printf("%-14s %-8s (%lld)\n", "exist second", pct(report.exist_second).c_str(),
                  report.exist_second_count);
      std::printf("%-14s %-8s (%lld)\n", "all first", pct(report.all_first).c_str(),
                  report.all_first_count);
      std::printf("%-14s %-8s (%lld)\n", "all second", pct(report.all_second).c_str(),
                  report.all_second_count);
    }
    return;
  }
  for (const auto& inst : instances) {
    const auto it = parses.find(inst.id);
    if (it == parses.end()) throw expect::Error("missing parse for instance '" + inst.id + "'");
    const auto feats = expect::syntax_features(inst, it->second);
    ordered_json j;
    j["id"] = inst.id;
    j["d_x"] = names_of(feats.d_x);
    j["d_y"] = names_of(feats.d_y);
    std::cout << j.dump() << "\n";
  }
}

std::map<expect::ErrorType, double> parse_mix(const std::string& spec) {
  std::map<expect::ErrorType, double> mix;
  if (spec.empty()) return mix;
  std::istringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw expect::ConfigError("mix entries look like type=weight, got '" + part + "'");
    const std::string name = part.substr(0, eq);
    const auto type = expect::error_type_from_string(name);
    if (!type) throw expect::ConfigError("unknown error type in mix: '" + name + "'");
    double w = 0.0;
    try {
      size_t used = 0;
      w = std::stod(part.substr(eq + 1), &used);
      if (used != part.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw expect::ConfigError("bad weight in mix entry '" + part + "'");
    }
    mix[*type] = w;
  }
  return mix;
}

void cmd_synthesize(int n, std::uint64_t seed, const std::string& mix_spec,
                    const std::string& out, const std::string& parses_out, bool as_json) {
  expect::SynthOptions options;
  options.n = n;
  options.seed = seed;
  options.mix = parse_mix(mix_spec);
  const auto result = expect::synthesize(options);
  expect::save_corpus(out, result.instances);
  if (!parses_out.empty()) expect::save_parse_fixtures(parses_out, result.parses);
  std::map<std::string, long long> by_type;
  for (const auto& inst : result.instances)
    by_type[std::string(expect::to_string(inst.error_type))]++;
  if (as_json) {
    ordered_json j;
    j["n"] = result.instances.size();
    j["out"] = out;
    j["parses"] = parses_out.empty() ? ordered_json(nullptr) : ordered_json(parses_out);
    j["types"] = by_type;
    emit_json(j);
  } else {
    std::printf("wrote %zu instances to %s\n", result.instances.size(), out.c_str());
    if (!parses_out.empty()) std::printf("wrote parses to %s\n", parses_out.c_str());
    for (const auto& [name, count] : by_type) std::printf("  %-28s %lld\n", name.c_str(), count);
  }
}

void print_run_report(const expect::RunReport& report) {
  std::printf("fingerprint  %s\n", report.fingerprint.c_str());
  for (const auto& e : report.epochs) {
    if (e.train_loss)
      std::printf("epoch %3d  loss %.4f  dev f0.5 %.4f\n", e.epoch, *e.train_loss,
                  e.dev.token.f05);
    else
      std::printf("epoch %3d  (untrained)  dev f0.5 %.4f\n", e.epoch, e.dev.token.f05);
  }
  std::printf("best epoch %d  dev f0.5 %.4f\n", report.best_epoch, report.best_dev_f05);
  std::printf("best checkpoint  %s\n", report.best_ckpt.c_str());
  std::printf("wall time  %.1fs\n", report.wall_seconds);
}

void cmd_train(const std::string& config_path, const std::string& data, const std::string& dev,
               const std::string& out_dir, bool as_json) {
  expect::RunConfig config = expect::load_run_config(config_path);
  if (!data.empty()) config.train_path = data;
  if (!dev.empty()) config.dev_path = dev;
  if (!out_dir.empty()) config.out_dir = out_dir;
  const auto report = expect::train(config);
  if (as_json)
    emit_json(expect::run_report_to_json(report));
  else
    print_run_report(report);
}

void cmd_predict(const std::string& ckpt, const std::string& data, const std::string& out,
                 const std::string& parses_path, bool as_json) {
  const auto model = expect::load_checkpoint(ckpt);
  const auto instances = expect::load_corpus_or_pairs(data);
  std::map<std::string, expect::DependencyParse> parses;
  const std::map<std::string, expect::DependencyParse>* pp = nullptr;
  if (model->config().use_syntax) {
    if (parses_path.empty())
      throw expect::ConfigError("this checkpoint uses syntax features; pass --parses");
    parses = expect::load_parse_fixtures(parses_path);
    pp = &parses;
  } else if (!parses_path.empty()) {
    parses = expect::load_parse_fixtures(parses_path);
    pp = &parses;
  }
  const auto preds = expect::predict_corpus(*model, instances, pp);
  expect::save_predictions(out, preds);
  if (as_json) {
    ordered_json j;
    j["n"] = preds.size();
    j["out"] = out;
    j["head"] = expect::to_string(model->config().head);
    j["use_syntax"] = model->config().use_syntax;
    emit_json(j);
  } else {
    std::printf("wrote %zu predictions to %s\n", preds.size(), out.c_str());
  }
}

void print_eval_report(const expect::EvalReport& report, bool per_type) {
  std::printf("%-16s %lld\n", "instances", report.n_instances);
  std::printf("%-16s %.2f\n", "precision", 100.0 * report.token.precision);
  std::printf("%-16s %.2f\n", "recall", 100.0 * report.token.recall);
  std::printf("%-16s %.2f\n", "f1", 100.0 * report.token.f1);
  std::printf("%-16s %.2f\n", "f0.5", 100.0 * report.token.f05);
  std::printf("%-16s %s\n", "exact match", pct(report.exact_match).c_str());
  std::printf("%-16s %s\n", "label accuracy", pct(report.label_accuracy).c_str());
  if (!per_type) return;
  std::printf("\nper type:\n");
  std::printf("  %-28s %7s %7s %7s %8s %9s\n", "type", "P", "R", "F0.5", "support", "type-acc");
  for (const auto& [name, row] : report.per_type) {
    const double acc =
        row.support > 0 ? 100.0 * static_cast<double>(row.correct_type) / row.support : 0.0;
    std::printf("  %-28s %7.2f %7.2f %7.2f %8lld %8.2f%%\n", name.c_str(),
                100.0 * row.token.precision, 100.0 * row.token.recall, 100.0 * row.token.f05,
                row.support, acc);
  }
}

/// Reorders predictions to match gold ids.
std::vector<expect::Prediction> match_by_id(const std::vector<expect::Prediction>& preds,
                                            const std::vector<expect::AnnotatedInstance>& golds) {
  std::map<std::string, const expect::Prediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, &p).second)
      throw expect::AlignmentError("duplicate prediction id '" + p.id + "'");
  }
  std::vector<expect::Prediction> out;
  out.reserve(golds.size());
  for (const auto& g : golds) {
    const auto it = by_id.find(g.id);
    if (it == by_id.end())
      throw expect::AlignmentError("no prediction for instance '" + g.id + "'");
    out.push_back(*it->second);
  }
  return out;
}

void cmd_evaluate(const std::string& gold, const std::string& pred, const std::string& ckpt,
                  const std::string& data, const std::string& parses_path, bool per_type,
                  bool as_json) {
  if (!pred.empty()) {
    const auto golds = expect::load_corpus(gold);
    const auto preds = match_by_id(expect::load_predictions(pred), golds);
    const auto report = expect::evaluate_predictions(preds, golds);
    if (as_json)
      emit_json(expect::report_to_json(report));
    else
      print_eval_report(report, per_type);
    return;
  }
  const auto report = expect::evaluate_run(ckpt, data, parses_path);
  if (as_json) {
    emit_json(expect::eval_run_report_to_json(report));
    return;
  }
  print_eval_report(report.overall, per_type);
  std::printf("\nby source length:\n");
  for (const auto& bucket : report.buckets) {
    if (bucket.n == 0)
      std::printf("  %-8s n=%-6lld -\n", bucket.name.c_str(), bucket.n);
    else
      std::printf("  %-8s n=%-6lld f0.5 %.2f\n", bucket.name.c_str(), bucket.n,
                  100.0 * bucket.report.token.f05);
  }
}

void cmd_ablate(const std::string& config_path, bool as_json) {
  const auto config = expect::load_run_config(config_path);
  const auto report = expect::compare_syntax_ablation(config);
  if (as_json) {
    emit_json(expect::ablation_report_to_json(report));
    return;
  }
  std::printf("with syntax     best f0.5 %.4f (epoch %d)\n", report.with_syntax.best_dev_f05,
              report.with_syntax.best_epoch);
  std::printf("without syntax  best f0.5 %.4f (epoch %d)\n", report.without_syntax.best_dev_f05,
              report.without_syntax.best_epoch);
  std::printf("overall delta   %+.4f\n", report.overall_f05_delta);
  if (!report.f05_delta.empty()) {
    std::printf("per-type f0.5 deltas:\n");
    for (const auto& [name, delta] : report.f05_delta)
      std::printf("  %-28s %+.4f\n", name.c_str(), delta);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evidence extraction and error typing for grammatical corrections"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* stats = app.add_subcommand("stats", "corpus-level counts and the error type histogram");
  auto stats_file = std::make_shared<std::string>();
  auto stats_json = std::make_shared<bool>(false);
  stats->add_option("file", *stats_file, "annotated corpus (JSONL)")->required();
  stats->add_flag("--json", *stats_json, "machine-readable output");
  stats->callback([=] { cmd_stats(*stats_file, *stats_json); });

  auto* validate = app.add_subcommand("validate", "check every record against the schema");
  auto validate_file = std::make_shared<std::string>();
  auto validate_json = std::make_shared<bool>(false);
  validate->add_option("file", *validate_file, "annotated corpus (JSONL)")->required();
  validate->add_flag("--json", *validate_json, "machine-readable output");
  validate->callback([=, &exit_code] { exit_code = cmd_validate(*validate_file, *validate_json); });

  auto* align = app.add_subcommand("align", "derive the span edit for raw source/target pairs");
  auto align_file = std::make_shared<std::string>();
  align->add_option("file", *align_file, "JSONL pairs: {\"id\", \"source\", \"target\"}")
      ->required();
  align->callback([=, &exit_code] { exit_code = cmd_align(*align_file); });

  auto* pf = app.add_subcommand("parse-features",
                                "dependency neighborhoods of the edit span per instance");
  auto pf_corpus = std::make_shared<std::string>();
  auto pf_parses = std::make_shared<std::string>();
  auto pf_coverage = std::make_shared<bool>(false);
  auto pf_json = std::make_shared<bool>(false);
  pf->add_option("corpus", *pf_corpus, "annotated corpus (JSONL)")->required();
  pf->add_option("--parses", *pf_parses, "parse fixture file (JSONL)")->required();
  pf->add_flag("--coverage", *pf_coverage, "report how much gold evidence the neighborhoods cover");
  pf->add_flag("--json", *pf_json, "machine-readable output");
  pf->callback([=] { cmd_parse_features(*pf_corpus, *pf_parses, *pf_coverage, *pf_json); });

  auto* synth = app.add_subcommand("synthesize", "generate a labeled corpus from template rules");
  auto synth_n = std::make_shared<int>(100);
  auto synth_seed = std::make_shared<std::uint64_t>(42);
  auto synth_mix = std::make_shared<std::string>();
  auto synth_out = std::make_shared<std::string>();
  auto synth_parses = std::make_shared<std::string>();
  auto synth_json = std::make_shared<bool>(false);
  synth->add_option("--n", *synth_n, "number of instances")->capture_default_str();
  synth->add_option("--seed", *synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--mix", *synth_mix, "relative type weights, e.g. 'number=2,preposition=1'");
  synth->add_option("--out", *synth_out, "corpus output path (JSONL)")->required();
  synth->add_option("--parses", *synth_parses, "also write the hand-built parses here");
  synth->add_flag("--json", *synth_json, "machine-readable output");
  synth->callback(
      [=] { cmd_synthesize(*synth_n, *synth_seed, *synth_mix, *synth_out, *synth_parses,
                           *synth_json); });

  auto* train = app.add_subcommand("train", "run the training loop from a config file");
  auto train_config = std::make_shared<std::string>();
  auto train_data = std::make_shared<std::string>();
  auto train_dev = std::make_shared<std::string>();
  auto train_out = std::make_shared<std::string>();
  auto train_json = std::make_shared<bool>(false);
  train->add_option("--config", *train_config, "key=value run config")->required();
  train->add_option("--data", *train_data, "override data.train");
  train->add_option("--dev", *train_dev, "override data.dev");
  train->add_option("--out", *train_out, "override out.dir");
  train->add_flag("--json", *train_json, "machine-readable output");
  train->callback(
      [=] { cmd_train(*train_config, *train_data, *train_dev, *train_out, *train_json); });

  auto* predict = app.add_subcommand("predict", "label a corpus with a trained checkpoint");
  auto pr_ckpt = std::make_shared<std::string>();
  auto pr_data = std::make_shared<std::string>();
  auto pr_out = std::make_shared<std::string>();
  auto pr_parses = std::make_shared<std::string>();
  auto pr_json = std::make_shared<bool>(false);
  predict->add_option("--ckpt", *pr_ckpt, "checkpoint path")->required();
  predict->add_option("--data", *pr_data, "annotated corpus or raw pairs (JSONL)")->required();
  predict->add_option("--out", *pr_out, "predictions output path (JSONL)")->required();
  predict->add_option("--parses", *pr_parses, "parse fixture file (JSONL)");
  predict->add_flag("--json", *pr_json, "machine-readable output");
  predict->callback([=] { cmd_predict(*pr_ckpt, *pr_data, *pr_out, *pr_parses, *pr_json); });

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold annotations");
  auto ev_gold = std::make_shared<std::string>();
  auto ev_pred = std::make_shared<std::string>();
  auto ev_ckpt = std::make_shared<std::string>();
  auto ev_data = std::make_shared<std::string>();
  auto ev_parses = std::make_shared<std::string>();
  auto ev_per_type = std::make_shared<bool>(false);
  auto ev_json = std::make_shared<bool>(false);
  auto* gold_opt = evaluate->add_option("--gold", *ev_gold, "gold corpus (JSONL)");
  auto* pred_opt = evaluate->add_option("--pred", *ev_pred, "prediction file (JSONL)");
  auto* ckpt_opt = evaluate->add_option("--ckpt", *ev_ckpt, "checkpoint to run instead");
  auto* data_opt = evaluate->add_option("--data", *ev_data, "corpus for --ckpt mode");
  evaluate->add_option("--parses", *ev_parses, "parse fixture file for --ckpt mode");
  evaluate->add_flag("--per-type", *ev_per_type, "include the per-type breakdown");
  evaluate->add_flag("--json", *ev_json, "machine-readable output");
  pred_opt->needs(gold_opt);
  ckpt_opt->needs(data_opt);
  pred_opt->excludes(ckpt_opt);
  evaluate->callback([=] {
    if (ev_pred->empty() && ev_ckpt->empty())
      throw expect::ConfigError("pass --gold with --pred, or --ckpt with --data");
    cmd_evaluate(*ev_gold, *ev_pred, *ev_ckpt, *ev_data, *ev_parses, *ev_per_type, *ev_json);
  });

  auto* ablate = app.add_subcommand("ablate", "train syntax on/off twins and report the deltas");
  auto ab_config = std::make_shared<std::string>();
  auto ab_json = std::make_shared<bool>(false);
  ablate->add_option("--config", *ab_config, "key=value run config")->required();
  ablate->add_flag("--json", *ab_json, "machine-readable output");
  ablate->callback([=] { cmd_ablate(*ab_config, *ab_json); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const expect::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const expect::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const expect::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
