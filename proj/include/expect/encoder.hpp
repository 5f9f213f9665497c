#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "expect/instance.hpp"
#include "expect/nn.hpp"
#include "expect/syntax.hpp"

namespace expect {

/// Whitespace tokens are hashed into a fixed id space; the low ids are
/// reserved for specials.
struct VocabSpec {
  int size = 4096;
  int max_positions = 512;

  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kUnk = 2;
  static constexpr int kFirstWord = 3;

  int token_id(const std::string& token) const;
};

struct EncoderConfig {
  std::string backend = "toy";
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn = 128;
  VocabSpec vocab;

  void validate() const;
};

/// The packed sequence [CLS] X [SEP] Y [SEP] plus the per-position side
/// channels the embedding layer consumes.
struct EncodedInput {
  std::vector<int> token_ids;
  std::vector<int> correction_mask;
  std::vector<int> syn_categories;  // empty when the model variant is non-syntactic
  int n = 0;  // |X|
  int m = 0;  // |Y|

  int length() const { return static_cast<int>(token_ids.size()); }
  int x_pos(int j) const { return 1 + j; }
  int y_pos(int i) const { return n + 2 + i; }
  bool has_syntax() const { return !syn_categories.empty(); }

  /// CLS plus every X and Y token; the separators are not scored.
  std::vector<int> scored_positions() const;
};

/// Packs an instance. Pass syntax features to populate the category channel.
EncodedInput build_encoded_input(const AnnotatedInstance& inst, const VocabSpec& vocab,
                                 const SyntaxFeatures* syntax = nullptr);

/// Fixed slot names for the embedding tables shared by all backends.
inline constexpr const char* kTokenTable = "emb.token";
inline constexpr const char* kPositionTable = "emb.pos";
inline constexpr const char* kCorrectionTable = "emb.corr";
inline constexpr const char* kSyntacticTable = "emb.syn";

void register_embedding_tables(ParameterStore& store, const EncoderConfig& config);

/// Sum of token, position, correction and (when present) syntactic
/// embeddings, one column per position.
Eigen::MatrixXd embed_input(const ParameterStore& store, const EncodedInput& input);

/// Scatters d(embeddings) back into the table gradients.
void embed_backward(ParameterStore& store, const EncodedInput& input,
                    const Eigen::MatrixXd& d_emb);

/// Opaque forward-pass cache a backend hands to its own backward.
struct EncodeTrace {
  virtual ~EncodeTrace() = default;
};

class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual void register_params(ParameterStore& store) const = 0;
  /// Hidden states, one column per position. Fills *trace when non-null.
  virtual Eigen::MatrixXd forward(const ParameterStore& store, const EncodedInput& input,
                                  std::unique_ptr<EncodeTrace>* trace) const = 0;
  virtual void backward(ParameterStore& store, const EncodedInput& input,
                        const EncodeTrace& trace, const Eigen::MatrixXd& d_hidden) const = 0;
  virtual const EncoderConfig& config() const = 0;

  int hidden() const { return config().hidden; }
  std::string name() const { return config().backend; }
};

/// Builds the backend named by config.backend; ConfigError on unknown names.
std::unique_ptr<EncoderBackend> make_encoder_backend(const EncoderConfig& config);

}  // namespace expect
