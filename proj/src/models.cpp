#include "expect/models.hpp"

#include <algorithm>
#include <cmath>

#include "expect/errors.hpp"

namespace expect {

std::string tag_name(int tag) {
  if (tag == kTagO) return "O";
  if (tag < 0 || tag >= kNumTags) throw ContractError("tag id out of range");
  const char* prefix = (tag % 2 == 1) ? "B-" : "I-";
  return prefix + to_string(tag_type(tag));
}

std::string to_string(HeadKind k) {
  return k == HeadKind::Labeling ? "labeling" : "interaction";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "labeling") return HeadKind::Labeling;
  if (s == "interaction") return HeadKind::Interaction;
  throw ConfigError("unknown model head '" + s + "' (labeling|interaction)");
}

TokenLabelSequence make_labeling_gold(const AnnotatedInstance& inst, const EncodedInput& input) {
  TokenLabelSequence gold;
  gold.tags.assign(input.length(), kTagO);
  if (inst.error_type == ErrorType::Others) return gold;
  int prev = -2;
  for (int j : inst.evidence) {
    if (j < 0 || j >= input.n)
      throw ContractError("evidence index " + std::to_string(j) + " outside the source sentence");
    gold.tags[input.x_pos(j)] = (j == prev + 1) ? i_tag(inst.error_type) : b_tag(inst.error_type);
    prev = j;
  }
  return gold;
}

std::vector<int> effective_edit_rows(const SpanEdit& edit, int m) {
  std::vector<int> rows;
  if (edit.y_begin < edit.y_end) {
    for (int i = edit.y_begin; i < edit.y_end; ++i) rows.push_back(i);
  } else {
    for (int i : {edit.y_begin - 1, edit.y_begin})
      if (i >= 0 && i < m) rows.push_back(i);
  }
  return rows;
}

InteractionTarget make_interaction_gold(const AnnotatedInstance& inst) {
  InteractionTarget t;
  t.m = static_cast<int>(inst.y_tokens.size());
  t.n = static_cast<int>(inst.x_tokens.size());
  t.cells.assign(static_cast<size_t>(t.m) * t.n, kCellNone);
  if (inst.error_type == ErrorType::Others) return t;
  const int label = cell_label(inst.error_type);
  for (int i : effective_edit_rows(inst.edit, t.m))
    for (int j : inst.evidence) {
      if (j < 0 || j >= t.n)
        throw ContractError("evidence index " + std::to_string(j) +
                            " outside the source sentence");
      t.at(i, j) = label;
    }
  return t;
}

namespace {

constexpr const char* kLabW = "lab.w";
constexpr const char* kLabB = "lab.b";
constexpr const char* kAuxW = "aux.w";
constexpr const char* kAuxB = "aux.b";
constexpr const char* kIntWq = "int.wq";
constexpr const char* kIntBq = "int.bq";
constexpr const char* kIntWk = "int.wk";
constexpr const char* kIntBk = "int.bk";
constexpr const char* kIntU = "int.u";
constexpr const char* kIntBu = "int.bu";
constexpr const char* kSynW1 = "int.syn.w1";
constexpr const char* kSynB1 = "int.syn.b1";
constexpr const char* kSynW2 = "int.syn.w2";
constexpr const char* kSynB2 = "int.syn.b2";

/// Majority vote with strength tie-break, then type order.
ErrorType majority_type(const std::vector<std::pair<ErrorType, double>>& votes) {
  int counts[kNumErrorTypes] = {};
  double strength[kNumErrorTypes] = {};
  for (const auto& [t, s] : votes) {
    ++counts[type_index(t)];
    strength[type_index(t)] += s;
  }
  int best = -1;
  for (int t = 0; t < kNumErrorTypes; ++t) {
    if (counts[t] == 0) continue;
    if (best == -1 || counts[t] > counts[best] ||
        (counts[t] == counts[best] && strength[t] > strength[best]))
      best = t;
  }
  return static_cast<ErrorType>(best);
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

/// MLP output per category, one column each: W2 relu(W1 + b1) + b2.
Eigen::MatrixXd syn_mlp_forward(const ParameterStore& store, Eigen::MatrixXd* z1_out) {
  const auto w1 = store.mat(kSynW1);
  const auto w2 = store.mat(kSynW2);
  Eigen::MatrixXd z1 = w1;
  z1.colwise() += store.vec(kSynB1);
  Eigen::MatrixXd out = w2 * z1.cwiseMax(0.0);
  out.colwise() += store.vec(kSynB2);
  if (z1_out) *z1_out = std::move(z1);
  return out;
}

}  // namespace

void register_labeling_head(ParameterStore& store, int hidden) {
  store.add(kLabW, kNumTags, hidden, InitKind::Xavier);
  store.add(kLabB, kNumTags, 1, InitKind::Zero);
}

void register_type_head(ParameterStore& store, int hidden) {
  store.add(kAuxW, kNumErrorTypes, hidden, InitKind::Xavier);
  store.add(kAuxB, kNumErrorTypes, 1, InitKind::Zero);
}

void register_interaction_head(ParameterStore& store, int hidden) {
  store.add(kIntWq, hidden, hidden, InitKind::Xavier);
  store.add(kIntBq, hidden, 1, InitKind::Zero);
  store.add(kIntWk, hidden, hidden, InitKind::Xavier);
  store.add(kIntBk, hidden, 1, InitKind::Zero);
  store.add(kIntU, hidden, hidden * kNumCellLabels, InitKind::Xavier);
  store.add(kIntBu, kNumCellLabels, 1, InitKind::Zero);
}

void register_syn_mlp(ParameterStore& store, int mlp_hidden) {
  store.add(kSynW1, mlp_hidden, kNumSynCategories, InitKind::Xavier);
  store.add(kSynB1, mlp_hidden, 1, InitKind::Zero);
  store.add(kSynW2, kNumCellLabels, mlp_hidden, InitKind::Xavier);
  store.add(kSynB2, kNumCellLabels, 1, InitKind::Zero);
}

LabelScores labeling_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden) {
  const auto w = store.mat(kLabW);
  if (w.cols() != hidden.rows()) throw ContractError("labeling head width mismatch");
  LabelScores s;
  s.logits = w * hidden;
  s.logits.colwise() += store.vec(kLabB);
  s.probs = s.logits;
  softmax_columns(s.probs);
  return s;
}

double labeling_loss(const LabelScores& scores, const TokenLabelSequence& gold,
                     const std::vector<int>& scored_positions) {
  if (scores.probs.cols() != static_cast<Eigen::Index>(gold.tags.size()))
    throw ContractError("label sequence length mismatch");
  double total = 0.0;
  for (int pos : scored_positions) total += nll(scores.probs.col(pos), gold.tags[pos]);
  return total;
}

Eigen::VectorXd type_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden) {
  const auto w = store.mat(kAuxW);
  if (w.cols() != hidden.rows()) throw ContractError("type head width mismatch");
  return softmax(w * hidden.col(0) + store.vec(kAuxB));
}

CellGrid interaction_forward(const ParameterStore& store, const Eigen::MatrixXd& hidden,
                             const EncodedInput& input, const SyntacticMatrix* syn) {
  const int n = input.n, m = input.m;
  const int H = static_cast<int>(hidden.rows());
  const auto wq = store.mat(kIntWq);
  if (wq.cols() != H) throw ContractError("interaction head width mismatch");

  Eigen::MatrixXd he(H, n), hc(H, m);
  for (int j = 0; j < n; ++j) he.col(j) = hidden.col(input.x_pos(j));
  for (int i = 0; i < m; ++i) hc.col(i) = hidden.col(input.y_pos(i));

  Eigen::MatrixXd hq = wq * he;
  hq.colwise() += store.vec(kIntBq);
  Eigen::MatrixXd hk = store.mat(kIntWk) * hc;
  hk.colwise() += store.vec(kIntBk);

  const auto u = store.mat(kIntU);
  const auto bu = store.vec(kIntBu);
  CellGrid grid;
  grid.m = m;
  grid.n = n;
  grid.logits.resize(kNumCellLabels, static_cast<Eigen::Index>(m) * n);
  for (int l = 0; l < kNumCellLabels; ++l) {
    const Eigen::MatrixXd s = hk.transpose() * u.middleCols(l * H, H) * hq;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) grid.logits(l, grid.cell(i, j)) = s(i, j) + bu[l];
  }

  if (syn) {
    if (syn->rows != m || syn->cols != n)
      throw DimensionError("syntactic matrix does not match the grid");
    const Eigen::MatrixXd syn_out = syn_mlp_forward(store, nullptr);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        grid.logits.col(grid.cell(i, j)) += syn_out.col(static_cast<int>(syn->at(i, j)));
  }

  grid.probs = grid.logits;
  softmax_columns(grid.probs);
  return grid;
}

double interaction_loss(const CellGrid& grid, const InteractionTarget& gold, double none_weight) {
  if (grid.m != gold.m || grid.n != gold.n) throw ContractError("interaction grid mismatch");
  double total = 0.0;
  for (int i = 0; i < grid.m; ++i)
    for (int j = 0; j < grid.n; ++j) {
      const int g = gold.at(i, j);
      const double w = g == kCellNone ? none_weight : 1.0;
      total += w * nll(grid.probs.col(grid.cell(i, j)), g);
    }
  return total;
}

Prediction decode_labeling(const LabelScores& scores, const EncodedInput& input,
                           const Eigen::VectorXd& type_probs, const std::string& id) {
  Prediction pred;
  pred.id = id;
  std::vector<std::pair<ErrorType, double>> votes;
  double conf_sum = 0.0;
  for (int j = 0; j < input.n; ++j) {
    const Eigen::VectorXd col = scores.probs.col(input.x_pos(j));
    const int tag = argmax(col);
    if (tag == kTagO) continue;
    pred.evidence.push_back(j);
    const ErrorType t = tag_type(tag);
    votes.emplace_back(t, col[b_tag(t)] + col[i_tag(t)]);
    conf_sum += col[tag];
  }
  if (votes.empty()) {
    pred.error_type = static_cast<ErrorType>(argmax(type_probs));
    pred.scores["type_prob"] = type_probs[type_index(pred.error_type)];
  } else {
    pred.error_type = majority_type(votes);
    pred.scores["type_prob"] = type_probs[type_index(pred.error_type)];
    pred.scores["evidence_mean_prob"] = conf_sum / static_cast<double>(votes.size());
  }
  return pred;
}

Prediction decode_interaction(const CellGrid& grid, const SpanEdit& edit,
                              const Eigen::VectorXd& type_probs, const std::string& id) {
  Prediction pred;
  pred.id = id;
  const std::vector<int> rows = effective_edit_rows(edit, grid.m);
  std::vector<std::pair<ErrorType, double>> votes;
  double conf_sum = 0.0;
  for (int j = 0; j < grid.n && !rows.empty(); ++j) {
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(kNumCellLabels);
    for (int i : rows) pooled = pooled.cwiseMax(grid.probs.col(grid.cell(i, j)));
    const int label = argmax(pooled);
    if (label == kCellNone) continue;
    pred.evidence.push_back(j);
    votes.emplace_back(cell_type(label), pooled[label]);
    conf_sum += pooled[label];
  }
  if (votes.empty()) {
    pred.error_type = static_cast<ErrorType>(argmax(type_probs));
    pred.scores["type_prob"] = type_probs[type_index(pred.error_type)];
  } else {
    pred.error_type = majority_type(votes);
    pred.scores["type_prob"] = type_probs[type_index(pred.error_type)];
    pred.scores["evidence_mean_prob"] = conf_sum / static_cast<double>(votes.size());
  }
  return pred;
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["head"] = to_string(config.head);
  j["use_syntax"] = config.use_syntax;
  j["syn_mlp_hidden"] = config.syn_mlp_hidden;
  j["none_weight"] = config.none_weight;
  j["encoder"] = {{"backend", config.encoder.backend},
                  {"hidden", config.encoder.hidden},
                  {"layers", config.encoder.layers},
                  {"heads", config.encoder.heads},
                  {"ffn", config.encoder.ffn},
                  {"vocab_size", config.encoder.vocab.size},
                  {"max_positions", config.encoder.vocab.max_positions}};
  return j;
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  try {
    c.head = head_kind_from_string(j.at("head").get<std::string>());
    c.use_syntax = j.at("use_syntax").get<bool>();
    c.syn_mlp_hidden = j.value("syn_mlp_hidden", 16);
    c.none_weight = j.value("none_weight", 1.0);
    const auto& e = j.at("encoder");
    c.encoder.backend = e.at("backend").get<std::string>();
    c.encoder.hidden = e.at("hidden").get<int>();
    c.encoder.layers = e.at("layers").get<int>();
    c.encoder.heads = e.at("heads").get<int>();
    c.encoder.ffn = e.at("ffn").get<int>();
    c.encoder.vocab.size = e.at("vocab_size").get<int>();
    c.encoder.vocab.max_positions = e.at("max_positions").get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad model config: ") + ex.what());
  }
  c.encoder.validate();
  if (c.syn_mlp_hidden <= 0) throw ConfigError("syn_mlp_hidden must be positive");
  if (c.none_weight < 0.0) throw ConfigError("none_weight must be non-negative");
  return c;
}

Model::Model(ModelConfig config)
    : config_(std::move(config)), backend_(make_encoder_backend(config_.encoder)) {
  backend_->register_params(store_);
  register_type_head(store_, config_.encoder.hidden);
  if (config_.head == HeadKind::Labeling) {
    register_labeling_head(store_, config_.encoder.hidden);
  } else {
    register_interaction_head(store_, config_.encoder.hidden);
    if (config_.use_syntax) register_syn_mlp(store_, config_.syn_mlp_hidden);
  }
}

void Model::init_params(std::uint64_t seed) { store_.finalize(seed); }

ModelInput Model::make_input(const AnnotatedInstance& inst, const DependencyParse* parse) const {
  ModelInput input;
  input.edit = inst.edit;
  if (!config_.use_syntax) {
    input.enc = build_encoded_input(inst, config_.encoder.vocab, nullptr);
    return input;
  }
  if (!parse) throw ConfigError("use_syntax requires a dependency parse for '" + inst.id + "'");
  const SyntaxFeatures f = syntax_features(inst, *parse);
  if (config_.head == HeadKind::Labeling) {
    input.enc = build_encoded_input(inst, config_.encoder.vocab, &f);
  } else {
    input.enc = build_encoded_input(inst, config_.encoder.vocab, nullptr);
    input.syn = build_syntactic_matrix(f.d_x, f.d_y, inst.edit);
  }
  return input;
}

double Model::loss(const AnnotatedInstance& inst, const ModelInput& input) const {
  return const_cast<Model*>(this)->run(inst, input, false, 0.0, nullptr);
}

double Model::loss_and_grad(const AnnotatedInstance& inst, const ModelInput& input,
                            double grad_scale) {
  return run(inst, input, true, grad_scale, nullptr);
}

Prediction Model::predict(const AnnotatedInstance& inst, const ModelInput& input) const {
  Prediction pred;
  const_cast<Model*>(this)->run(inst, input, false, 0.0, &pred);
  return pred;
}

void Model::interaction_backward(const CellGrid& grid, const InteractionTarget& gold,
                                 const ModelInput& input, const Eigen::MatrixXd& hidden,
                                 Eigen::MatrixXd& d_hidden, double grad_scale) {
  const int m = grid.m, n = grid.n;
  const int H = static_cast<int>(hidden.rows());

  Eigen::MatrixXd dlogits(kNumCellLabels, static_cast<Eigen::Index>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const int c = grid.cell(i, j);
      const int g = gold.at(i, j);
      const double w = (g == kCellNone ? config_.none_weight : 1.0) * grad_scale;
      dlogits.col(c) = grid.probs.col(c) * w;
      dlogits(g, c) -= w;
    }

  if (input.syn) {
    Eigen::MatrixXd dsyn_out = Eigen::MatrixXd::Zero(kNumCellLabels, kNumSynCategories);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        dsyn_out.col(static_cast<int>(input.syn->at(i, j))) += dlogits.col(grid.cell(i, j));
    Eigen::MatrixXd z1;
    syn_mlp_forward(store_, &z1);
    const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
    store_.grad_mat(kSynW2) += dsyn_out * a1.transpose();
    store_.grad_vec(kSynB2) += dsyn_out.rowwise().sum();
    Eigen::MatrixXd dz1 = store_.mat(kSynW2).transpose() * dsyn_out;
    dz1 = (dz1.array() * (z1.array() > 0.0).cast<double>()).matrix();
    store_.grad_mat(kSynW1) += dz1;
    store_.grad_vec(kSynB1) += dz1.rowwise().sum();
  }

  Eigen::MatrixXd he(H, n), hc(H, m);
  for (int j = 0; j < n; ++j) he.col(j) = hidden.col(input.enc.x_pos(j));
  for (int i = 0; i < m; ++i) hc.col(i) = hidden.col(input.enc.y_pos(i));
  Eigen::MatrixXd hq = store_.mat(kIntWq) * he;
  hq.colwise() += store_.vec(kIntBq);
  Eigen::MatrixXd hk = store_.mat(kIntWk) * hc;
  hk.colwise() += store_.vec(kIntBk);

  const auto u = store_.mat(kIntU);
  auto du = store_.grad_mat(kIntU);
  auto dbu = store_.grad_vec(kIntBu);
  Eigen::MatrixXd dhq = Eigen::MatrixXd::Zero(H, n);
  Eigen::MatrixXd dhk = Eigen::MatrixXd::Zero(H, m);
  Eigen::MatrixXd d(m, n);
  for (int l = 0; l < kNumCellLabels; ++l) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = dlogits(l, grid.cell(i, j));
    dbu[l] += d.sum();
    const auto ul = u.middleCols(l * H, H);
    du.middleCols(l * H, H) += hk * d * hq.transpose();
    dhk += ul * hq * d.transpose();
    dhq += ul.transpose() * hk * d;
  }

  store_.grad_mat(kIntWq) += dhq * he.transpose();
  store_.grad_vec(kIntBq) += dhq.rowwise().sum();
  store_.grad_mat(kIntWk) += dhk * hc.transpose();
  store_.grad_vec(kIntBk) += dhk.rowwise().sum();
  const Eigen::MatrixXd dhe = store_.mat(kIntWq).transpose() * dhq;
  const Eigen::MatrixXd dhc = store_.mat(kIntWk).transpose() * dhk;
  for (int j = 0; j < n; ++j) d_hidden.col(input.enc.x_pos(j)) += dhe.col(j);
  for (int i = 0; i < m; ++i) d_hidden.col(input.enc.y_pos(i)) += dhc.col(i);
}

double Model::run(const AnnotatedInstance& inst, const ModelInput& input, bool with_grad,
                  double grad_scale, Prediction* pred) {
  std::unique_ptr<EncodeTrace> trace;
  const Eigen::MatrixXd h = backend_->forward(store_, input.enc, with_grad ? &trace : nullptr);
  Eigen::MatrixXd dh;
  if (with_grad) dh = Eigen::MatrixXd::Zero(h.rows(), h.cols());

  double total = 0.0;

  const Eigen::VectorXd type_probs = type_forward(store_, h);
  const int gold_type = type_index(inst.error_type);
  total += nll(type_probs, gold_type);
  if (with_grad) {
    Eigen::VectorXd dlog = type_probs * grad_scale;
    dlog[gold_type] -= grad_scale;
    store_.grad_mat(kAuxW) += dlog * h.col(0).transpose();
    store_.grad_vec(kAuxB) += dlog;
    dh.col(0) += store_.mat(kAuxW).transpose() * dlog;
  }

  if (config_.head == HeadKind::Labeling) {
    const LabelScores scores = labeling_forward(store_, h);
    const TokenLabelSequence gold = make_labeling_gold(inst, input.enc);
    const std::vector<int> scored = input.enc.scored_positions();
    total += labeling_loss(scores, gold, scored);
    if (with_grad) {
      Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(kNumTags, h.cols());
      for (int pos : scored) {
        dlogits.col(pos) = scores.probs.col(pos) * grad_scale;
        dlogits(gold.tags[pos], pos) -= grad_scale;
      }
      store_.grad_mat(kLabW) += dlogits * h.transpose();
      store_.grad_vec(kLabB) += dlogits.rowwise().sum();
      dh += store_.mat(kLabW).transpose() * dlogits;
    }
    if (pred) *pred = decode_labeling(scores, input.enc, type_probs, inst.id);
  } else {
    const SyntacticMatrix* syn = input.syn ? &*input.syn : nullptr;
    if (config_.use_syntax && !syn)
      throw ConfigError("use_syntax requires the syntactic matrix for '" + inst.id + "'");
    const CellGrid grid = interaction_forward(store_, h, input.enc, syn);
    const InteractionTarget gold = make_interaction_gold(inst);
    total += interaction_loss(grid, gold, config_.none_weight);
    if (with_grad) interaction_backward(grid, gold, input, h, dh, grad_scale);
    if (pred) *pred = decode_interaction(grid, input.edit, type_probs, inst.id);
  }

  if (with_grad) backend_->backward(store_, input.enc, *trace, dh);
  return total;
}

}  // namespace expect
