#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "expect/encoder.hpp"
#include "expect/error_type.hpp"
#include "expect/instance.hpp"
#include "expect/nn.hpp"
#include "expect/syntax.hpp"

namespace expect {

/// Token tag set: O plus B/I per evidence-bearing type ("others" excluded).
constexpr int kTagO = 0;
constexpr int kNumTags = 1 + 2 * kNumEvidenceTypes;

inline int b_tag(ErrorType t) { return 1 + 2 * type_index(t); }
inline int i_tag(ErrorType t) { return 2 + 2 * type_index(t); }
inline ErrorType tag_type(int tag) { return static_cast<ErrorType>((tag - 1) / 2); }
std::string tag_name(int tag);

/// Cell label set for the interaction grid: none plus the 14 evidence types.
constexpr int kCellNone = 0;
constexpr int kNumCellLabels = 1 + kNumEvidenceTypes;

inline int cell_label(ErrorType t) { return 1 + type_index(t); }
inline ErrorType cell_type(int label) { return static_cast<ErrorType>(label - 1); }

struct TokenLabelSequence {
  std::vector<int> tags;  // one per packed position
};

/// Evidence runs in X become B/I islands of the instance's type; everything
/// else, Y and specials included, is O.
TokenLabelSequence make_labeling_gold(const AnnotatedInstance& inst, const EncodedInput& input);

struct InteractionTarget {
  int m = 0;  // |Y| rows
  int n = 0;  // |X| columns
  std::vector<int> cells;

  int at(int i, int j) const { return cells[static_cast<size_t>(i) * n + j]; }
  int& at(int i, int j) { return cells[static_cast<size_t>(i) * n + j]; }
};

/// Rows the grid supervision and decoding pool over: the Y edit span, or for
/// a pure deletion the two Y positions flanking the deletion site.
std::vector<int> effective_edit_rows(const SpanEdit& edit, int m);

InteractionTarget make_interaction_gold(const AnnotatedInstance& inst);

struct Prediction {
  std::string id;
  std::vector<int> evidence;  // indices into X, sorted
  ErrorType error_type = ErrorType::Others;
  std::map<std::string, double> scores;
};

struct LabelScores {
  Eigen::MatrixXd logits;  // kNumTags x T
  Eigen::MatrixXd probs;
};

struct CellGrid {
  int m = 0;
  int n = 0;
  Eigen::MatrixXd logits;  // kNumCellLabels x (m*n)
  Eigen::MatrixXd probs;

  int cell(int i, int j) const { return i * n + j; }
};

/// Slot registration for the heads; `hidden` is the encoder width.
void register_labeling_head(ParameterStore& store, int hidden);
void register_type_head(ParameterStore& store, int hidden);
void register_interaction_head(ParameterStore& store, int hidden);
void register_syn_mlp(ParameterStore& store, int mlp_hidden);

/// Per-position tag distributions over every packed position.
LabelScores labeling_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden);

/// Sum of gold-tag negative log probabilities over the scored positions.
double labeling_loss(const LabelScores& scores, const TokenLabelSequence& gold,
                     const std::vector<int>& scored_positions);

/// Sentence-type distribution from the sequence-start state.
Eigen::VectorXd type_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden);

/// Bi-affine cell label distributions; adds the syntactic MLP term when a
/// matrix is given.
CellGrid interaction_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden,
                             const EncodedInput& input, const SyntacticMatrix* syn);

/// Weighted sum of gold-label negative log probabilities over all cells;
/// none cells are scaled by none_weight.
double interaction_loss(const CellGrid& grid, const InteractionTarget& gold, double none_weight);

Prediction decode_labeling(const LabelScores& scores, const EncodedInput& input,
                           const Eigen::VectorXd& type_probs, const std::string& id);

Prediction decode_interaction(const CellGrid& grid, const SpanEdit& edit,
                              const Eigen::VectorXd& type_probs, const std::string& id);

enum class HeadKind { Labeling, Interaction };
std::string to_string(HeadKind k);
HeadKind head_kind_from_string(const std::string& s);

struct ModelConfig {
  EncoderConfig encoder;
  HeadKind head = HeadKind::Labeling;
  bool use_syntax = false;
  int syn_mlp_hidden = 16;
  double none_weight = 1.0;
};

nlohmann::ordered_json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

/// Everything the model needs for one instance. The syntactic channel is
/// populated per variant: labeling feeds categories into the embeddings,
/// interaction builds the pairwise matrix.
struct ModelInput {
  EncodedInput enc;
  SpanEdit edit;
  std::optional<SyntacticMatrix> syn;
};

/// One prediction head plus the shared encoder and auxiliary sentence-type
/// classifier, with manual gradients end to end.
class Model {
 public:
  explicit Model(ModelConfig config);

  void init_params(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const EncoderBackend& encoder() const { return *backend_; }

  /// Parse is required when use_syntax is set; ConfigError otherwise.
  ModelInput make_input(const AnnotatedInstance& inst, const DependencyParse* parse) const;

  /// Joint loss (head + sentence type) for one instance.
  double loss(const AnnotatedInstance& inst, const ModelInput& input) const;

  /// Same, accumulating d(loss)/d(params) * grad_scale into the store.
  double loss_and_grad(const AnnotatedInstance& inst, const ModelInput& input,
                       double grad_scale = 1.0);

  Prediction predict(const AnnotatedInstance& inst, const ModelInput& input) const;

 private:
  double run(const AnnotatedInstance& inst, const ModelInput& input, bool with_grad,
             double grad_scale, Prediction* pred);
  void interaction_backward(const CellGrid& grid, const InteractionTarget& gold,
                            const ModelInput& input, const Eigen::MatrixXd& hidden,
                            Eigen::MatrixXd& d_hidden, double grad_scale);

  ModelConfig config_;
  std::unique_ptr<EncoderBackend> backend_;
  ParameterStore store_;
};

}  // namespace expect
