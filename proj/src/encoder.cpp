#include "expect/encoder.hpp"

#include <cmath>

#include "expect/errors.hpp"

namespace expect {

int VocabSpec::token_id(const std::string& token) const {
  if (size <= kFirstWord) throw ConfigError("vocabulary too small for the reserved ids");
  if (token.empty()) return kUnk;
  const std::uint64_t h = fnv1a64(token);
  return kFirstWord + static_cast<int>(h % static_cast<std::uint64_t>(size - kFirstWord));
}

void EncoderConfig::validate() const {
  if (hidden <= 0 || layers < 0 || ffn <= 0) throw ConfigError("encoder sizes must be positive");
  if (heads <= 0 || hidden % heads != 0)
    throw ConfigError("hidden size " + std::to_string(hidden) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  if (vocab.size <= VocabSpec::kFirstWord) throw ConfigError("vocabulary too small");
  if (vocab.max_positions <= 0) throw ConfigError("max_positions must be positive");
}

std::vector<int> EncodedInput::scored_positions() const {
  std::vector<int> out;
  out.reserve(1 + n + m);
  out.push_back(0);
  for (int j = 0; j < n; ++j) out.push_back(x_pos(j));
  for (int i = 0; i < m; ++i) out.push_back(y_pos(i));
  return out;
}

EncodedInput build_encoded_input(const AnnotatedInstance& inst, const VocabSpec& vocab,
                                 const SyntaxFeatures* syntax) {
  EncodedInput in;
  in.n = static_cast<int>(inst.x_tokens.size());
  in.m = static_cast<int>(inst.y_tokens.size());
  const int total = in.n + in.m + 3;
  if (total > vocab.max_positions)
    throw TruncationError("sequence of " + std::to_string(total) + " positions exceeds " +
                          std::to_string(vocab.max_positions));

  in.token_ids.assign(total, VocabSpec::kSep);
  in.correction_mask.assign(total, 0);
  in.token_ids[0] = VocabSpec::kCls;
  for (int j = 0; j < in.n; ++j) {
    in.token_ids[in.x_pos(j)] = vocab.token_id(inst.x_tokens[j]);
    if (j >= inst.edit.x_begin && j < inst.edit.x_end) in.correction_mask[in.x_pos(j)] = 1;
  }
  for (int i = 0; i < in.m; ++i) {
    in.token_ids[in.y_pos(i)] = vocab.token_id(inst.y_tokens[i]);
    if (i >= inst.edit.y_begin && i < inst.edit.y_end) in.correction_mask[in.y_pos(i)] = 1;
  }

  if (syntax) {
    if (static_cast<int>(syntax->d_x.size()) != in.n ||
        static_cast<int>(syntax->d_y.size()) != in.m)
      throw DimensionError("syntactic vectors do not match the sentence pair");
    in.syn_categories.assign(total, static_cast<int>(SynCategory::None));
    for (int j = 0; j < in.n; ++j)
      in.syn_categories[in.x_pos(j)] = static_cast<int>(syntax->d_x[j]);
    for (int i = 0; i < in.m; ++i)
      in.syn_categories[in.y_pos(i)] = static_cast<int>(syntax->d_y[i]);
  }
  return in;
}

void register_embedding_tables(ParameterStore& store, const EncoderConfig& config) {
  store.add(kTokenTable, config.hidden, config.vocab.size, InitKind::Normal002);
  store.add(kPositionTable, config.hidden, config.vocab.max_positions, InitKind::Normal002);
  store.add(kCorrectionTable, config.hidden, 2, InitKind::Normal002);
  store.add(kSyntacticTable, config.hidden, kNumSynCategories, InitKind::Normal002);
}

Eigen::MatrixXd embed_input(const ParameterStore& store, const EncodedInput& input) {
  const auto tok = store.mat(kTokenTable);
  const auto pos = store.mat(kPositionTable);
  const auto corr = store.mat(kCorrectionTable);
  const int T = input.length();
  if (T == 0) throw EmptyInputError("encoder input");
  if (T > pos.cols()) throw TruncationError("input longer than the position table");
  if (static_cast<int>(input.correction_mask.size()) != T)
    throw DimensionError("correction mask length mismatch");
  if (input.has_syntax() && static_cast<int>(input.syn_categories.size()) != T)
    throw DimensionError("syntactic category length mismatch");

  Eigen::MatrixXd e(tok.rows(), T);
  for (int t = 0; t < T; ++t) {
    const int id = input.token_ids[t];
    if (id < 0 || id >= tok.cols()) throw ContractError("token id out of vocabulary");
    e.col(t) = tok.col(id) + pos.col(t) + corr.col(input.correction_mask[t]);
  }
  if (input.has_syntax()) {
    const auto syn = store.mat(kSyntacticTable);
    for (int t = 0; t < T; ++t) e.col(t) += syn.col(input.syn_categories[t]);
  }
  return e;
}

void embed_backward(ParameterStore& store, const EncodedInput& input,
                    const Eigen::MatrixXd& d_emb) {
  auto d_tok = store.grad_mat(kTokenTable);
  auto d_pos = store.grad_mat(kPositionTable);
  auto d_corr = store.grad_mat(kCorrectionTable);
  const int T = input.length();
  if (d_emb.cols() != T) throw DimensionError("embedding gradient length mismatch");
  for (int t = 0; t < T; ++t) {
    d_tok.col(input.token_ids[t]) += d_emb.col(t);
    d_pos.col(t) += d_emb.col(t);
    d_corr.col(input.correction_mask[t]) += d_emb.col(t);
  }
  if (input.has_syntax()) {
    auto d_syn = store.grad_mat(kSyntacticTable);
    for (int t = 0; t < T; ++t) d_syn.col(input.syn_categories[t]) += d_emb.col(t);
  }
}

namespace {

constexpr double kLnEps = 1e-5;

struct LnCache {
  Eigen::MatrixXd xhat;     // normalized activations
  Eigen::VectorXd inv_std;  // per position
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& bias, LnCache& cache) {
  const Eigen::Index H = x.rows(), T = x.cols();
  cache.xhat.resize(H, T);
  cache.inv_std.resize(T);
  Eigen::MatrixXd y(H, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mu = x.col(t).mean();
    const Eigen::VectorXd centered = x.col(t).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(H);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_std[t] = inv;
    cache.xhat.col(t) = centered * inv;
    y.col(t) = gain.cwiseProduct(cache.xhat.col(t)) + bias;
  }
  return y;
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::VectorXd& gain,
                                    const LnCache& cache, Eigen::Map<Eigen::VectorXd> d_gain,
                                    Eigen::Map<Eigen::VectorXd> d_bias) {
  const Eigen::Index H = dy.rows(), T = dy.cols();
  Eigen::MatrixXd dx(H, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::VectorXd dxhat = dy.col(t).cwiseProduct(gain);
    d_gain += dy.col(t).cwiseProduct(cache.xhat.col(t));
    d_bias += dy.col(t);
    const double mean_dxhat = dxhat.mean();
    const double mean_proj = dxhat.cwiseProduct(cache.xhat.col(t)).mean();
    dx.col(t) = cache.inv_std[t] *
                (dxhat.array() - mean_dxhat - cache.xhat.col(t).array() * mean_proj).matrix();
  }
  return dx;
}

struct LayerTrace {
  Eigen::MatrixXd in;                  // layer input
  Eigen::MatrixXd q, k, v;             // projected, heads stacked in rows
  std::vector<Eigen::MatrixXd> attn;   // per-head softmaxed weights, queries in rows
  Eigen::MatrixXd concat;              // re-joined head outputs
  LnCache ln1, ln2;
  Eigen::MatrixXd x1;                  // after first norm
  Eigen::MatrixXd z1;                  // ffn pre-activation
};

struct ToyTrace : EncodeTrace {
  Eigen::MatrixXd emb;
  std::vector<LayerTrace> layers;
};

std::string slot(int layer, const char* leaf) {
  return "enc.l" + std::to_string(layer) + "." + leaf;
}

}  // namespace

class ToyEncoder : public EncoderBackend {
 public:
  explicit ToyEncoder(EncoderConfig config) : config_(std::move(config)) {
    config_.validate();
  }

  void register_params(ParameterStore& store) const override {
    register_embedding_tables(store, config_);
    const int H = config_.hidden, F = config_.ffn;
    for (int l = 0; l < config_.layers; ++l) {
      store.add(slot(l, "wq"), H, H, InitKind::Xavier);
      store.add(slot(l, "bq"), H, 1, InitKind::Zero);
      store.add(slot(l, "wk"), H, H, InitKind::Xavier);
      store.add(slot(l, "bk"), H, 1, InitKind::Zero);
      store.add(slot(l, "wv"), H, H, InitKind::Xavier);
      store.add(slot(l, "bv"), H, 1, InitKind::Zero);
      store.add(slot(l, "wo"), H, H, InitKind::Xavier);
      store.add(slot(l, "bo"), H, 1, InitKind::Zero);
      store.add(slot(l, "ln1.g"), H, 1, InitKind::One);
      store.add(slot(l, "ln1.b"), H, 1, InitKind::Zero);
      store.add(slot(l, "w1"), F, H, InitKind::Xavier);
      store.add(slot(l, "b1"), F, 1, InitKind::Zero);
      store.add(slot(l, "w2"), H, F, InitKind::Xavier);
      store.add(slot(l, "b2"), H, 1, InitKind::Zero);
      store.add(slot(l, "ln2.g"), H, 1, InitKind::One);
      store.add(slot(l, "ln2.b"), H, 1, InitKind::Zero);
    }
  }

  Eigen::MatrixXd forward(const ParameterStore& store, const EncodedInput& input,
                          std::unique_ptr<EncodeTrace>* trace) const override {
    auto tr = std::make_unique<ToyTrace>();
    tr->emb = embed_input(store, input);
    if (tr->emb.rows() != config_.hidden) throw ContractError("embedding dimension mismatch");

    const int H = config_.hidden;
    const int heads = config_.heads;
    const int dk = H / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Eigen::MatrixXd x = tr->emb;
    tr->layers.resize(config_.layers);
    for (int l = 0; l < config_.layers; ++l) {
      LayerTrace& lt = tr->layers[l];
      lt.in = x;
      lt.q = (store.mat(slot(l, "wq")) * x).colwise() + store.vec(slot(l, "bq"));
      lt.k = (store.mat(slot(l, "wk")) * x).colwise() + store.vec(slot(l, "bk"));
      lt.v = (store.mat(slot(l, "wv")) * x).colwise() + store.vec(slot(l, "bv"));

      lt.concat.resize(H, x.cols());
      lt.attn.resize(heads);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lt.q.middleRows(h * dk, dk);
        const auto kh = lt.k.middleRows(h * dk, dk);
        const auto vh = lt.v.middleRows(h * dk, dk);
        Eigen::MatrixXd scores = (qh.transpose() * kh) * scale;  // queries x keys
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
          Eigen::VectorXd row = scores.row(i);
          scores.row(i) = softmax(row).transpose();
        }
        lt.attn[h] = scores;
        lt.concat.middleRows(h * dk, dk) = vh * scores.transpose();
      }
      const Eigen::MatrixXd attn_out =
          (store.mat(slot(l, "wo")) * lt.concat).colwise() + store.vec(slot(l, "bo"));

      lt.x1 = layer_norm(x + attn_out, store.vec(slot(l, "ln1.g")), store.vec(slot(l, "ln1.b")),
                         lt.ln1);

      lt.z1 = (store.mat(slot(l, "w1")) * lt.x1).colwise() + store.vec(slot(l, "b1"));
      const Eigen::MatrixXd a1 = lt.z1.cwiseMax(0.0);
      const Eigen::MatrixXd ffn_out =
          (store.mat(slot(l, "w2")) * a1).colwise() + store.vec(slot(l, "b2"));

      x = layer_norm(lt.x1 + ffn_out, store.vec(slot(l, "ln2.g")), store.vec(slot(l, "ln2.b")),
                     lt.ln2);
    }
    if (trace) *trace = std::move(tr);
    return x;
  }

  void backward(ParameterStore& store, const EncodedInput& input, const EncodeTrace& trace,
                const Eigen::MatrixXd& d_hidden) const override {
    const auto& tr = dynamic_cast<const ToyTrace&>(trace);
    const int H = config_.hidden;
    const int heads = config_.heads;
    const int dk = H / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Eigen::MatrixXd dx = d_hidden;
    for (int l = config_.layers - 1; l >= 0; --l) {
      const LayerTrace& lt = tr.layers[l];

      const Eigen::MatrixXd d_res2 =
          layer_norm_backward(dx, store.vec(slot(l, "ln2.g")), lt.ln2,
                              store.grad_vec(slot(l, "ln2.g")), store.grad_vec(slot(l, "ln2.b")));

      const Eigen::MatrixXd a1 = lt.z1.cwiseMax(0.0);
      store.grad_mat(slot(l, "w2")) += d_res2 * a1.transpose();
      store.grad_vec(slot(l, "b2")) += d_res2.rowwise().sum();
      Eigen::MatrixXd dz1 = store.mat(slot(l, "w2")).transpose() * d_res2;
      dz1 = (dz1.array() * (lt.z1.array() > 0.0).cast<double>()).matrix();
      store.grad_mat(slot(l, "w1")) += dz1 * lt.x1.transpose();
      store.grad_vec(slot(l, "b1")) += dz1.rowwise().sum();

      Eigen::MatrixXd dx1 = d_res2 + store.mat(slot(l, "w1")).transpose() * dz1;

      const Eigen::MatrixXd d_res1 =
          layer_norm_backward(dx1, store.vec(slot(l, "ln1.g")), lt.ln1,
                              store.grad_vec(slot(l, "ln1.g")), store.grad_vec(slot(l, "ln1.b")));

      store.grad_mat(slot(l, "wo")) += d_res1 * lt.concat.transpose();
      store.grad_vec(slot(l, "bo")) += d_res1.rowwise().sum();
      const Eigen::MatrixXd d_concat = store.mat(slot(l, "wo")).transpose() * d_res1;

      Eigen::MatrixXd dq(H, dx.cols()), dkm(H, dx.cols()), dv(H, dx.cols());
      for (int h = 0; h < heads; ++h) {
        const auto qh = lt.q.middleRows(h * dk, dk);
        const auto kh = lt.k.middleRows(h * dk, dk);
        const auto vh = lt.v.middleRows(h * dk, dk);
        const auto doh = d_concat.middleRows(h * dk, dk);
        const Eigen::MatrixXd& a = lt.attn[h];

        dv.middleRows(h * dk, dk) = doh * a;
        Eigen::MatrixXd da = doh.transpose() * vh;  // queries x keys
        Eigen::MatrixXd ds(a.rows(), a.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const double dot = a.row(i).dot(da.row(i));
          ds.row(i) = (a.row(i).array() * (da.row(i).array() - dot)).matrix();
        }
        ds *= scale;
        dq.middleRows(h * dk, dk) = kh * ds.transpose();
        dkm.middleRows(h * dk, dk) = qh * ds;
      }

      store.grad_mat(slot(l, "wq")) += dq * lt.in.transpose();
      store.grad_vec(slot(l, "bq")) += dq.rowwise().sum();
      store.grad_mat(slot(l, "wk")) += dkm * lt.in.transpose();
      store.grad_vec(slot(l, "bk")) += dkm.rowwise().sum();
      store.grad_mat(slot(l, "wv")) += dv * lt.in.transpose();
      store.grad_vec(slot(l, "bv")) += dv.rowwise().sum();

      dx = d_res1 + store.mat(slot(l, "wq")).transpose() * dq +
           store.mat(slot(l, "wk")).transpose() * dkm +
           store.mat(slot(l, "wv")).transpose() * dv;
    }
    embed_backward(store, input, dx);
  }

  const EncoderConfig& config() const override { return config_; }

 private:
  EncoderConfig config_;
};

std::unique_ptr<EncoderBackend> make_encoder_backend(const EncoderConfig& config) {
  if (config.backend == "toy") return std::make_unique<ToyEncoder>(config);
  throw ConfigError("unknown encoder backend '" + config.backend + "' (supported: toy)");
}

}  // namespace expect
