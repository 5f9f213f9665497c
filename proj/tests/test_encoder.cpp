#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "expect/align.hpp"
#include "expect/encoder.hpp"
#include "expect/errors.hpp"
#include "test_util.hpp"

using namespace expect;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.hidden = 8;
  c.layers = 1;
  c.heads = 2;
  c.ffn = 16;
  c.vocab.size = 32;
  c.vocab.max_positions = 64;
  return c;
}

AnnotatedInstance small_instance() {
  AnnotatedInstance inst;
  inst.id = "e1";
  inst.x_tokens = testutil::split_ws("he go to school");
  inst.y_tokens = testutil::split_ws("he goes to school");
  inst.edit = extract_span_edit(inst.x_tokens, inst.y_tokens);
  inst.error_type = ErrorType::SubjectVerbAgreement;
  inst.evidence = {0};
  return inst;
}

}  // namespace

TEST_CASE("token ids stay in the word range") {
  VocabSpec vocab;
  vocab.size = 64;
  CHECK(VocabSpec::kCls == 0);
  CHECK(VocabSpec::kSep == 1);
  CHECK(VocabSpec::kUnk == 2);
  for (const char* w : {"the", "of", "unusual-token", "a", "zzz"}) {
    const int id = vocab.token_id(w);
    CHECK(id >= VocabSpec::kFirstWord);
    CHECK(id < vocab.size);
    CHECK(vocab.token_id(w) == id);
  }
  CHECK(vocab.token_id("") == VocabSpec::kUnk);
}

TEST_CASE("config validation") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.hidden = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.vocab.size = 3;  // no room for words
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("packed layout is CLS X SEP Y SEP") {
  const auto inst = small_instance();
  const auto input = build_encoded_input(inst, small_config().vocab);
  CHECK(input.n == 4);
  CHECK(input.m == 4);
  REQUIRE(input.length() == 11);
  CHECK(input.token_ids[0] == VocabSpec::kCls);
  CHECK(input.token_ids[5] == VocabSpec::kSep);
  CHECK(input.token_ids[10] == VocabSpec::kSep);
  CHECK(input.x_pos(0) == 1);
  CHECK(input.y_pos(0) == 6);
  // correction mask marks the edit span on both sides
  for (int p = 0; p < input.length(); ++p) {
    const bool expected = p == input.x_pos(1) || p == input.y_pos(1);
    CHECK(input.correction_mask[p] == (expected ? 1 : 0));
  }
  CHECK_FALSE(input.has_syntax());

  const auto scored = input.scored_positions();
  REQUIRE(static_cast<int>(scored.size()) == input.n + input.m + 1);
  CHECK(scored[0] == 0);
  for (int p : scored) {
    CHECK(p != 5);
    CHECK(p != 10);
  }
}

TEST_CASE("overlong inputs are refused") {
  auto vocab = small_config().vocab;
  vocab.max_positions = 10;  // needs 11
  CHECK_THROWS_AS(build_encoded_input(small_instance(), vocab), TruncationError);
}

TEST_CASE("syntactic categories ride along when provided") {
  const auto inst = small_instance();
  SyntaxFeatures feats;
  feats.d_x = {SynCategory::First, SynCategory::Correction, SynCategory::Second,
               SynCategory::None};
  feats.d_y = {SynCategory::First, SynCategory::Correction, SynCategory::Second,
               SynCategory::None};
  const auto input = build_encoded_input(inst, small_config().vocab, &feats);
  REQUIRE(input.has_syntax());
  CHECK(input.syn_categories[input.x_pos(1)] == static_cast<int>(SynCategory::Correction));
  CHECK(input.syn_categories[input.y_pos(2)] == static_cast<int>(SynCategory::Second));
  CHECK(input.syn_categories[0] == static_cast<int>(SynCategory::None));
}

TEST_CASE("embeddings add the per-channel table rows") {
  const auto config = small_config();
  ParameterStore store;
  register_embedding_tables(store, config);
  store.finalize(11);
  SyntaxFeatures feats;
  feats.d_x = {SynCategory::First, SynCategory::Correction, SynCategory::None,
               SynCategory::None};
  feats.d_y = feats.d_x;
  const auto input = build_encoded_input(small_instance(), config.vocab, &feats);
  const auto emb = embed_input(store, input);
  REQUIRE(emb.rows() == config.hidden);
  REQUIRE(emb.cols() == input.length());
  const auto tok = store.mat(kTokenTable);
  const auto pos = store.mat(kPositionTable);
  const auto corr = store.mat(kCorrectionTable);
  const auto syn = store.mat(kSyntacticTable);
  for (int p = 0; p < input.length(); ++p) {
    Eigen::VectorXd want = tok.col(input.token_ids[p]) + pos.col(p) +
                           corr.col(input.correction_mask[p]) +
                           syn.col(input.syn_categories[p]);
    CHECK((emb.col(p) - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  // without the syntactic channel the syn table does not contribute
  const auto plain = build_encoded_input(small_instance(), config.vocab);
  const auto emb2 = embed_input(store, plain);
  for (int p = 0; p < plain.length(); ++p) {
    Eigen::VectorXd want =
        tok.col(plain.token_ids[p]) + pos.col(p) + corr.col(plain.correction_mask[p]);
    CHECK((emb2.col(p) - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("same seed reproduces the forward pass") {
  const auto config = small_config();
  const auto backend = make_encoder_backend(config);
  ParameterStore a, b;
  backend->register_params(a);
  a.finalize(5);
  backend->register_params(b);
  b.finalize(5);
  CHECK(a.values() == b.values());
  const auto input = build_encoded_input(small_instance(), config.vocab);
  const auto ha = backend->forward(a, input, nullptr);
  const auto hb = backend->forward(b, input, nullptr);
  CHECK(ha == hb);
  REQUIRE(ha.rows() == config.hidden);
  REQUIRE(ha.cols() == input.length());
}

TEST_CASE("zeroed position table makes the encoder permutation-equivariant") {
  auto config = small_config();
  const auto backend = make_encoder_backend(config);
  ParameterStore store;
  backend->register_params(store);
  store.finalize(21);
  store.mat(kPositionTable).setZero();

  const auto input = build_encoded_input(small_instance(), config.vocab);
  const int T = input.length();
  std::vector<int> perm(T);
  for (int i = 0; i < T; ++i) perm[i] = i;
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);

  EncodedInput shuffled = input;
  for (int i = 0; i < T; ++i) {
    shuffled.token_ids[perm[i]] = input.token_ids[i];
    shuffled.correction_mask[perm[i]] = input.correction_mask[i];
  }
  const auto h = backend->forward(store, input, nullptr);
  const auto hp = backend->forward(store, shuffled, nullptr);
  for (int i = 0; i < T; ++i)
    CHECK((hp.col(perm[i]) - h.col(i)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("encoder backward matches finite differences") {
  const auto config = small_config();
  const auto backend = make_encoder_backend(config);
  ParameterStore store;
  backend->register_params(store);
  store.finalize(77);
  const auto input = build_encoded_input(small_instance(), config.vocab);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd probe(config.hidden, input.length());
  for (int r = 0; r < probe.rows(); ++r)
    for (int c = 0; c < probe.cols(); ++c) probe(r, c) = normal(rng);

  const auto loss = [&] {
    return (backend->forward(store, input, nullptr).array() * probe.array()).sum();
  };
  store.zero_grads();
  std::unique_ptr<EncodeTrace> trace;
  const auto h = backend->forward(store, input, &trace);
  (void)h;
  backend->backward(store, input, *trace, probe);
  const double worst = testutil::gradcheck(store, loss, store.grads(), 1);
  CHECK(worst < 1e-4);
}

TEST_CASE("unknown backends are refused") {
  auto config = small_config();
  config.backend = "bert-large";
  CHECK_THROWS_AS(make_encoder_backend(config), ConfigError);
}
