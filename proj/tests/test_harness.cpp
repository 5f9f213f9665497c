#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "expect/corpus.hpp"
#include "expect/errors.hpp"
#include "expect/harness.hpp"
#include "expect/synthesize.hpp"
#include "test_util.hpp"

using namespace expect;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(const std::string& out_dir) {
  RunConfig c;
  c.out_dir = out_dir;
  c.model.head = HeadKind::Labeling;
  c.model.encoder.backend = "toy";
  c.model.encoder.hidden = 8;
  c.model.encoder.layers = 1;
  c.model.encoder.heads = 2;
  c.model.encoder.ffn = 16;
  c.model.encoder.vocab.size = 64;
  c.model.encoder.vocab.max_positions = 64;
  c.epochs = 2;
  c.patience = 5;
  c.seed = 3;
  return c;
}

/// Writes a small synthetic corpus plus its parse fixtures; returns the paths.
std::pair<std::string, std::string> synth_files(int n, std::uint64_t seed) {
  SynthOptions opts;
  opts.n = n;
  opts.seed = seed;
  const auto out = synthesize(opts);
  const std::string corpus = testutil::tmp_path("corpus.jsonl");
  const std::string parses = testutil::tmp_path("parses.jsonl");
  save_corpus(corpus, out.instances);
  save_parse_fixtures(parses, out.parses);
  return {corpus, parses};
}

nlohmann::ordered_json strip_volatile(const RunReport& r) {
  auto j = run_report_to_json(r);
  j.erase("wall_seconds");
  for (auto& e : j["epochs"]) e.erase("ckpt");
  j.erase("best_ckpt");
  return j;
}

AnnotatedInstance gold_of_length(const std::string& id, int len) {
  AnnotatedInstance g;
  g.id = id;
  for (int j = 0; j < len; ++j) g.x_tokens.push_back("w" + std::to_string(j));
  g.y_tokens = g.x_tokens;
  g.y_tokens[0] = "ww";
  g.edit = extract_span_edit(g.x_tokens, g.y_tokens);
  g.error_type = ErrorType::Number;
  g.evidence = {1};
  return g;
}

}  // namespace

TEST_CASE("resolve fills per-head defaults") {
  RunConfig c = tiny_run("unused");
  c.resolve();
  CHECK(c.lr == doctest::Approx(1e-3));
  CHECK(c.batch_size == 32);

  RunConfig i = tiny_run("unused");
  i.model.head = HeadKind::Interaction;
  i.resolve();
  CHECK(i.lr == doctest::Approx(1e-3));  // toy backend overrides the head
  CHECK(i.batch_size == 16);

  RunConfig big = tiny_run("unused");
  big.model.encoder.backend = "fixture:enc.jsonl";
  big.resolve();
  CHECK(big.lr == doctest::Approx(1e-5));
  RunConfig big_i = big;
  big_i.model.head = HeadKind::Interaction;
  big_i.lr = -1.0;
  big_i.resolve();
  CHECK(big_i.lr == doctest::Approx(5e-5));

  RunConfig bad = tiny_run("unused");
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
  bad = tiny_run("unused");
  bad.epochs = -1;
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
  bad = tiny_run("unused");
  bad.patience = 0;
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
}

TEST_CASE("canonical lists every key and the fingerprint tracks it") {
  RunConfig c = tiny_run("out");
  const auto pairs = c.canonical();
  CHECK(pairs.size() == 21);
  const std::vector<std::string> expected = {
      "data.train",      "data.dev",          "data.parses_train", "data.parses_dev",
      "out.dir",         "model.head",        "model.use_syntax",  "model.none_weight",
      "model.syn_mlp_hidden", "encoder.backend", "encoder.hidden",  "encoder.layers",
      "encoder.heads",   "encoder.ffn",       "encoder.vocab",     "encoder.max_positions",
      "train.lr",        "train.batch_size",  "train.epochs",      "train.seed",
      "train.patience"};
  REQUIRE(expected.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].first == expected[i]);

  const std::string fp = c.fingerprint();
  CHECK(fp.size() == 16);
  CHECK(fp == c.fingerprint());
  RunConfig d = c;
  d.seed = 4;
  CHECK(d.fingerprint() != fp);

  // round trip through the parser reproduces the fingerprint
  const auto back = run_config_from_pairs(pairs);
  CHECK(back.fingerprint() == fp);
}

TEST_CASE("config parsing") {
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(run_config_from_pairs({{"train.momentum", "0.9"}}), ConfigError);
  }
  SUBCASE("bad values name the key") {
    CHECK_THROWS_WITH_AS(run_config_from_pairs({{"train.lr", "fast"}}),
                         "key 'train.lr' needs a number, got 'fast'", ConfigError);
    CHECK_THROWS_AS(run_config_from_pairs({{"encoder.hidden", "8.5"}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_pairs({{"model.use_syntax", "maybe"}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_pairs({{"train.seed", "-"}}), ConfigError);
  }
  SUBCASE("file form supports comments and blank lines") {
    const std::string path = testutil::tmp_path("run.cfg");
    testutil::write_file(path,
                         "# experiment\n"
                         "model.head = interaction\n"
                         "\n"
                         "encoder.hidden = 24  # narrow\n"
                         "train.lr = 0.01\n");
    const RunConfig c = load_run_config(path);
    CHECK(c.model.head == HeadKind::Interaction);
    CHECK(c.model.encoder.hidden == 24);
    CHECK(c.lr == doctest::Approx(0.01));
  }
  SUBCASE("missing separator reports the line") {
    const std::string path = testutil::tmp_path("bad.cfg");
    testutil::write_file(path, "model.head labeling\n");
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_run_config(testutil::tmp_path("nope.cfg")), ConfigError);
  }
}

TEST_CASE("checkpoints restore the exact model") {
  auto cfg = tiny_run("unused").model;
  Model model(cfg);
  model.init_params(3);
  const std::string path = testutil::tmp_path("model.ckpt");
  save_checkpoint(path, model);

  const auto back = load_checkpoint(path);
  CHECK(back->config().head == cfg.head);
  CHECK(back->config().encoder.hidden == cfg.encoder.hidden);
  CHECK(back->store().size() == model.store().size());
  CHECK((back->store().values() - model.store().values()).cwiseAbs().maxCoeff() == 0.0);

  const auto inst = gold_of_length("ck-1", 6);
  const auto a = model.predict(inst, model.make_input(inst, nullptr));
  const auto b = back->predict(inst, back->make_input(inst, nullptr));
  CHECK(a.evidence == b.evidence);
  CHECK(a.error_type == b.error_type);
  CHECK(a.scores == b.scores);

  SUBCASE("corrupt files are refused") {
    const std::string junk = testutil::tmp_path("junk.ckpt");
    testutil::write_file(junk, "not a checkpoint at all");
    CHECK_THROWS_AS(load_checkpoint(junk), FormatError);

    auto bytes = testutil::read_file(path);
    bytes[4] = 9;  // version field
    const std::string versioned = testutil::tmp_path("ver.ckpt");
    testutil::write_file(versioned, bytes);
    CHECK_THROWS_AS(load_checkpoint(versioned), FormatError);

    const std::string cut = testutil::tmp_path("cut.ckpt");
    testutil::write_file(cut, testutil::read_file(path).substr(0, 60));
    CHECK_THROWS_AS(load_checkpoint(cut), FormatError);

    const std::string short_weights = testutil::tmp_path("short.ckpt");
    const auto full = testutil::read_file(path);
    testutil::write_file(short_weights, full.substr(0, full.size() - 16));
    CHECK_THROWS_AS(load_checkpoint(short_weights), FormatError);
  }
}

TEST_CASE("load_corpus_or_pairs") {
  SUBCASE("annotated files keep their labels") {
    const auto [corpus, parses] = synth_files(5, 77);
    const auto insts = load_corpus_or_pairs(corpus);
    CHECK(insts.size() == 5);
    CHECK(insts[0].id == "synth-000000");
  }
  SUBCASE("raw pairs derive the edit") {
    const std::string path = testutil::tmp_path("pairs.jsonl");
    testutil::write_file(path,
                         "{\"id\": \"p1\", \"source\": \"he go to school\", "
                         "\"target\": \"he goes to school\"}\n"
                         "{\"source\": [\"a\", \"cat\"], \"target\": [\"the\", \"cat\"]}\n");
    const auto insts = load_corpus_or_pairs(path);
    REQUIRE(insts.size() == 2);
    CHECK(insts[0].id == "p1");
    CHECK(insts[0].x_tokens.size() == 4);
    CHECK(insts[0].edit.x_begin == 1);
    CHECK(insts[0].edit.x_end == 2);
    CHECK(insts[0].error_type == ErrorType::Others);
    CHECK(insts[0].evidence.empty());
    CHECK(insts[1].id == "pair-2");
    CHECK(insts[1].edit.x_begin == 0);
  }
  SUBCASE("empty pair files are rejected") {
    const std::string path = testutil::tmp_path("none.jsonl");
    testutil::write_file(path, "");
    CHECK_THROWS_AS(load_corpus_or_pairs(path), EmptyInputError);
  }
}

TEST_CASE("prediction files round trip") {
  Prediction a;
  a.id = "p1";
  a.evidence = {4, 1};  // deliberately unsorted
  a.error_type = ErrorType::Collocation;
  a.scores = {{"type_prob", 0.75}, {"evidence_mean_prob", 0.5}};
  Prediction b;
  b.id = "p2";
  b.error_type = ErrorType::Others;

  const std::string path = testutil::tmp_path("preds.jsonl");
  save_predictions(path, {a, b});
  const auto back = load_predictions(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "p1");
  CHECK(back[0].evidence == std::vector<int>{1, 4});
  CHECK(back[0].error_type == ErrorType::Collocation);
  CHECK(back[0].scores.at("type_prob") == doctest::Approx(0.75));
  CHECK(back[1].evidence.empty());
  CHECK(back[1].scores.empty());

  SUBCASE("unknown types are named") {
    testutil::write_file(path, "{\"id\": \"x\", \"evidence\": [], \"type\": \"typo\"}\n");
    CHECK_THROWS_AS(load_predictions(path), ValidationError);
  }
  SUBCASE("bad json reports the line") {
    testutil::write_file(path, "{\"id\": \"x\", \"evidence\": [], \"type\": \"others\"}\n{oops\n");
    CHECK_THROWS_AS(load_predictions(path), ParseError);
  }
}

TEST_CASE("train validates its inputs") {
  RunConfig c = tiny_run(testutil::tmp_path("run"));
  CHECK_THROWS_AS(train(c), ConfigError);  // no data.train

  const auto [corpus, parses] = synth_files(6, 5);
  c.train_path = corpus;
  c.out_dir = "";
  CHECK_THROWS_AS(train(c), ConfigError);  // no out.dir

  c.out_dir = testutil::tmp_path("run");
  c.model.use_syntax = true;
  CHECK_THROWS_AS(train(c), ConfigError);  // syntax without parses

  c.parses_train_path = parses;
  c.dev_path = corpus;
  CHECK_THROWS_AS(train(c), ConfigError);  // dev set without dev parses
}

TEST_CASE("zero epochs trains nothing but still reports") {
  const auto [corpus, parses] = synth_files(8, 21);
  RunConfig c = tiny_run(testutil::tmp_path("run0"));
  c.train_path = corpus;
  c.epochs = 0;
  const RunReport r = train(c);
  REQUIRE(r.epochs.size() == 1);
  CHECK(r.epochs[0].epoch == 0);
  CHECK_FALSE(r.epochs[0].train_loss.has_value());
  CHECK(r.best_epoch == 0);
  CHECK(r.best_dev_f05 == doctest::Approx(r.epochs[0].dev.token.f05));
  CHECK(fs::exists(r.best_ckpt));
  CHECK(fs::exists(fs::path(c.out_dir) / "report.json"));
  CHECK(r.fingerprint == c.fingerprint());

  const auto j = run_report_to_json(r);
  CHECK(j.at("epochs").at(0).at("train_loss").is_null());
}

TEST_CASE("training is reproducible") {
  const auto [corpus, parses] = synth_files(24, 9);
  RunConfig c = tiny_run(testutil::tmp_path("repro"));
  c.train_path = corpus;
  c.epochs = 2;
  const RunReport a = train(c);
  const RunReport b = train(c);
  CHECK(strip_volatile(a) == strip_volatile(b));
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (size_t i = 1; i < a.epochs.size(); ++i)
    CHECK(*a.epochs[i].train_loss == doctest::Approx(*b.epochs[i].train_loss).epsilon(1e-15));
}

TEST_CASE("length buckets use half-open edges") {
  std::vector<AnnotatedInstance> golds = {
      gold_of_length("b1", 9),  gold_of_length("b2", 10), gold_of_length("b3", 20),
      gold_of_length("b4", 35), gold_of_length("b5", 60), gold_of_length("b6", 60)};
  std::vector<Prediction> preds;
  for (const auto& g : golds) {
    Prediction p;
    p.id = g.id;
    p.error_type = g.error_type;
    p.evidence = g.evidence;
    preds.push_back(std::move(p));
  }
  const EvalRunReport r = bucketed_report(preds, golds);
  REQUIRE(r.buckets.size() == 6);
  CHECK(r.buckets[0].name == "<10");
  CHECK(r.buckets[0].n == 1);
  CHECK(r.buckets[1].name == "10-20");
  CHECK(r.buckets[1].n == 1);
  CHECK(r.buckets[2].name == "20-30");
  CHECK(r.buckets[2].n == 1);
  CHECK(r.buckets[3].name == "30-40");
  CHECK(r.buckets[3].n == 1);
  CHECK(r.buckets[4].name == "40-60");
  CHECK(r.buckets[4].n == 0);
  CHECK(r.buckets[5].name == ">60");
  CHECK(r.buckets[5].n == 2);
  long long total = 0;
  for (const auto& b : r.buckets) total += b.n;
  CHECK(total == r.overall.n_instances);

  const auto j = eval_run_report_to_json(r);
  CHECK(j.at("buckets").at(4).at("report").is_null());
  CHECK(j.at("buckets").at(5).at("report").at("exact_match").get<double>() ==
        doctest::Approx(100.0));
}

TEST_CASE("evaluate_run matches a direct prediction pass") {
  const auto [corpus, parses] = synth_files(20, 33);
  RunConfig c = tiny_run(testutil::tmp_path("eval"));
  c.train_path = corpus;
  c.epochs = 1;
  const RunReport r = train(c);

  const auto run = evaluate_run(r.best_ckpt, corpus);
  const auto model = load_checkpoint(r.best_ckpt);
  const auto golds = load_corpus(corpus);
  const auto preds = predict_corpus(*model, golds, nullptr);
  const auto direct = bucketed_report(preds, golds);
  CHECK(eval_run_report_to_json(run) == eval_run_report_to_json(direct));

  SUBCASE("syntax checkpoints demand parses") {
    RunConfig s = tiny_run(testutil::tmp_path("eval-syn"));
    s.train_path = corpus;
    s.parses_train_path = parses;
    s.model.use_syntax = true;
    s.epochs = 0;
    const RunReport sr = train(s);
    CHECK_THROWS_AS(evaluate_run(sr.best_ckpt, corpus), ConfigError);
    CHECK_NOTHROW(evaluate_run(sr.best_ckpt, corpus, parses));
  }
}

TEST_CASE("ablation pairs must differ only in the syntax flag") {
  const auto [corpus, parses] = synth_files(12, 41);
  RunConfig syn = tiny_run(testutil::tmp_path("abl-syn"));
  syn.train_path = corpus;
  syn.parses_train_path = parses;
  syn.model.use_syntax = true;
  RunConfig plain = syn;
  plain.out_dir = testutil::tmp_path("abl-plain");
  plain.model.use_syntax = false;

  RunConfig same = plain;
  CHECK_THROWS_AS(compare_syntax_ablation(plain, same), ConfigError);

  RunConfig drifted = plain;
  drifted.seed = 99;
  CHECK_THROWS_WITH_AS(compare_syntax_ablation(syn, drifted),
                       "ablation configs differ beyond the syntax flag", ConfigError);
}

TEST_CASE("the single-config ablation trains both arms") {
  const auto [corpus, parses] = synth_files(16, 55);
  RunConfig c = tiny_run(testutil::tmp_path("abl"));
  c.train_path = corpus;
  c.parses_train_path = parses;
  c.epochs = 1;
  const AblationReport r = compare_syntax_ablation(c);
  CHECK(r.with_syntax.epochs.size() == r.without_syntax.epochs.size());

  const EvalReport& es = r.with_syntax.epochs[r.with_syntax.best_epoch].dev;
  const EvalReport& ep = r.without_syntax.epochs[r.without_syntax.best_epoch].dev;
  CHECK(r.overall_f05_delta == doctest::Approx(es.token.f05 - ep.token.f05));
  for (const auto& [type, delta] : r.f05_delta) {
    REQUIRE(es.per_type.count(type) == 1);
    REQUIRE(ep.per_type.count(type) == 1);
    CHECK(delta ==
          doctest::Approx(es.per_type.at(type).token.f05 - ep.per_type.at(type).token.f05));
  }

  const auto j = ablation_report_to_json(r);
  CHECK(j.contains("with_syntax"));
  CHECK(j.contains("without_syntax"));
  CHECK(j.contains("overall_f05_delta"));
  CHECK(j.contains("f05_delta"));
}

TEST_CASE("deterministic mode reads the environment") {
  unsetenv("EXPECT_DETERMINISTIC");
  CHECK(deterministic_mode());
  setenv("EXPECT_DETERMINISTIC", "1", 1);
  CHECK(deterministic_mode());
  setenv("EXPECT_DETERMINISTIC", "0", 1);
  CHECK_FALSE(deterministic_mode());
  unsetenv("EXPECT_DETERMINISTIC");
}

TEST_CASE("parallel prediction matches the sequential order") {
  const auto [corpus, parses] = synth_files(80, 61);
  const auto golds = load_corpus(corpus);
  Model model(tiny_run("unused").model);
  model.init_params(13);

  unsetenv("EXPECT_DETERMINISTIC");
  const auto seq = predict_corpus(model, golds, nullptr);
  setenv("EXPECT_DETERMINISTIC", "0", 1);
  const auto par = predict_corpus(model, golds, nullptr);
  unsetenv("EXPECT_DETERMINISTIC");

  REQUIRE(seq.size() == par.size());
  for (size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].id == par[i].id);
    CHECK(seq[i].evidence == par[i].evidence);
    CHECK(seq[i].error_type == par[i].error_type);
    CHECK(seq[i].scores == par[i].scores);
  }
}
