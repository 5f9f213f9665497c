#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "expect/corpus.hpp"
#include "expect/metrics.hpp"
#include "expect/models.hpp"
#include "expect/syntax.hpp"

namespace expect {

/// One training or evaluation run, loadable from a key=value file.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string parses_train_path;
  std::string parses_dev_path;
  std::string out_dir;

  ModelConfig model;

  double lr = -1.0;     // <0 resolves to the per-head default
  int batch_size = -1;  // <0 resolves to the per-head default
  int epochs = 10;
  std::uint64_t seed = 42;
  int patience = 3;

  /// Fills lr/batch_size policies: toy encoders train at 1e-3, larger
  /// backends at 1e-5 (labeling) or 5e-5 (interaction); batches 32/16.
  void resolve();

  /// Every key with its effective value, in fixed order.
  std::vector<std::pair<std::string, std::string>> canonical() const;
  std::string fingerprint() const;
};

RunConfig run_config_from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);
RunConfig load_run_config(const std::string& path);

struct EpochRecord {
  int epoch = 0;
  std::optional<double> train_loss;  // absent for the untrained epoch 0
  EvalReport dev;
  std::string ckpt_path;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::string best_ckpt;
  double best_dev_f05 = 0.0;
  double wall_seconds = 0.0;
  std::string fingerprint;
};

nlohmann::ordered_json run_report_to_json(const RunReport& report);

/// Self-describing binary checkpoint: config header plus the flat weights.
void save_checkpoint(const std::string& path, const Model& model);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

/// True unless EXPECT_DETERMINISTIC=0: evaluation then runs sequentially
/// instead of sharded across threads (the merge is ordered either way).
bool deterministic_mode();

/// Feature-extracts and predicts the whole corpus in input order.
std::vector<Prediction> predict_corpus(const Model& model,
                                       const std::vector<AnnotatedInstance>& instances,
                                       const std::map<std::string, DependencyParse>* parses);

std::vector<ModelInput> make_inputs(const Model& model,
                                    const std::vector<AnnotatedInstance>& instances,
                                    const std::map<std::string, DependencyParse>* parses);

/// Instances from full annotation JSONL, or raw {id, source, target} pairs
/// whose edit is derived by alignment.
std::vector<AnnotatedInstance> load_corpus_or_pairs(const std::string& path);

void save_predictions(const std::string& path, const std::vector<Prediction>& preds);
std::vector<Prediction> load_predictions(const std::string& path);

/// Full training loop with per-epoch checkpoints, dev selection by F0.5
/// (ties broken by exact match), and early stopping.
RunReport train(const RunConfig& config);

struct BucketReport {
  std::string name;
  long long n = 0;
  EvalReport report;  // meaningful only when n > 0
};

struct EvalRunReport {
  EvalReport overall;
  std::vector<BucketReport> buckets;  // by source-sentence length
};

nlohmann::ordered_json eval_run_report_to_json(const EvalRunReport& report);

/// Bucket instances by |X|: <10, 10-20, 20-30, 30-40, 40-60, >60.
EvalRunReport bucketed_report(const std::vector<Prediction>& preds,
                              const std::vector<AnnotatedInstance>& golds);

EvalRunReport evaluate_run(const std::string& ckpt_path, const std::string& data_path,
                           const std::string& parses_path = "");

struct AblationReport {
  RunReport with_syntax;
  RunReport without_syntax;
  std::map<std::string, double> f05_delta;  // types present in both dev evals
  double overall_f05_delta = 0.0;
};

nlohmann::ordered_json ablation_report_to_json(const AblationReport& report);

/// Trains the pair; the two configs must be identical apart from use_syntax,
/// the output directory, and the parse paths.
AblationReport compare_syntax_ablation(const RunConfig& with_syntax,
                                       const RunConfig& without_syntax);

/// Derives the non-syntactic twin of `config` and runs the pair.
AblationReport compare_syntax_ablation(const RunConfig& config);

}  // namespace expect
