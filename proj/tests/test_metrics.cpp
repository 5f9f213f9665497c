#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "expect/errors.hpp"
#include "expect/metrics.hpp"
#include "test_util.hpp"

using namespace expect;

namespace {

Prediction pred_of(const AnnotatedInstance& gold) {
  Prediction p;
  p.id = gold.id;
  p.error_type = gold.error_type;
  p.evidence = gold.evidence;
  return p;
}

AnnotatedInstance tiny_gold(const std::string& id, int n_tokens, ErrorType type,
                            std::vector<int> evidence) {
  AnnotatedInstance g;
  g.id = id;
  for (int j = 0; j < n_tokens; ++j) g.x_tokens.push_back("w" + std::to_string(j));
  g.y_tokens = g.x_tokens;
  g.y_tokens[0] = "ww";
  g.edit = extract_span_edit(g.x_tokens, g.y_tokens);
  g.error_type = type;
  g.evidence = std::move(evidence);
  return g;
}

}  // namespace

TEST_CASE("f_beta spot values and zero conventions") {
  CHECK(f_beta(0.5, 1.0, 0.5) == doctest::Approx(0.5556).epsilon(1e-3));
  CHECK(f_beta(0.5, 1.0, 0.5) == doctest::Approx(0.625 / 1.125).epsilon(1e-12));
  CHECK(f_beta(0.5, 1.0, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(f_beta(1.0, 1.0, 0.5) == doctest::Approx(1.0));
  CHECK(f_beta(0.0, 0.0, 0.5) == 0.0);
  CHECK(f_beta(0.0, 0.0, 1.0) == 0.0);
  CHECK(f_beta(0.0, 1.0, 0.5) == 0.0);
  CHECK(f_beta(1.0, 0.0, 0.5) == 0.0);
}

TEST_CASE("prf_from_counts handles empty counts") {
  const Prf z = prf_from_counts({0, 0, 0});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(z.f05 == 0.0);

  const Prf p = prf_from_counts({2, 2, 0});
  CHECK(p.precision == doctest::Approx(0.5));
  CHECK(p.recall == doctest::Approx(1.0));
  CHECK(p.f05 == doctest::Approx(0.5556).epsilon(1e-3));
}

TEST_CASE("token_prf on a hand-worked pair") {
  const auto gold = tiny_gold("h1", 8, ErrorType::Preposition, {1, 2});
  auto pred = pred_of(gold);
  pred.evidence = {1, 2, 3, 4};
  PrfCounts counts;
  const Prf prf = token_prf({pred}, {gold}, &counts);
  CHECK(counts.tp == 2);
  CHECK(counts.fp == 2);
  CHECK(counts.fn == 0);
  CHECK(prf.precision == doctest::Approx(0.5));
  CHECK(prf.recall == doctest::Approx(1.0));
  CHECK(prf.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(prf.f05 == doctest::Approx(0.5556).epsilon(1e-3));
}

TEST_CASE("f05 is nondecreasing in tp for fixed fp and fn") {
  double prev = -1.0;
  for (long long tp = 0; tp <= 20; ++tp) {
    const Prf prf = prf_from_counts({tp, 3, 2});
    CHECK(prf.f05 >= prev);
    prev = prf.f05;
  }
}

TEST_CASE("pearson") {
  SUBCASE("frozen spot value") {
    const double r = pearson({1, 2, 3, 4}, {2, 4, 5, 4});
    CHECK(r == doctest::Approx(3.5 / std::sqrt(23.75)).epsilon(1e-12));
    CHECK(r == doctest::Approx(0.7182).epsilon(1e-3));
  }
  SUBCASE("perfect correlation") {
    CHECK(pearson({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {-2, -4, -6}) == doctest::Approx(-1.0));
  }
  SUBCASE("affine invariance") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> a(20), b(20), a2(20);
    for (int i = 0; i < 20; ++i) {
      a[i] = d(rng);
      b[i] = d(rng);
      a2[i] = 2.0 * a[i] + 3.0;
    }
    CHECK(pearson(a, b) == doctest::Approx(pearson(a2, b)).epsilon(1e-12));
  }
  SUBCASE("undefined cases") {
    CHECK_THROWS_AS(pearson({}, {}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson({1.0}, {2.0}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson({1, 2, 3}, {5, 5, 5}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), DimensionError);
  }
}

TEST_CASE("metrics match a brute-force oracle on random corpora") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AnnotatedInstance> golds;
    std::vector<Prediction> preds;
    testutil::random_eval_corpus(rng, &golds, &preds);
    const auto brute = testutil::brute_metrics(preds, golds);

    PrfCounts counts;
    const Prf prf = token_prf(preds, golds, &counts);
    CHECK(counts.tp == brute.tp);
    CHECK(counts.fp == brute.fp);
    CHECK(counts.fn == brute.fn);
    CHECK(prf.precision == doctest::Approx(brute.precision).epsilon(1e-9));
    CHECK(prf.recall == doctest::Approx(brute.recall).epsilon(1e-9));
    CHECK(prf.f1 == doctest::Approx(brute.f1).epsilon(1e-9));
    CHECK(prf.f05 == doctest::Approx(brute.f05).epsilon(1e-9));

    const double em = exact_match(preds, golds);
    const double la = label_accuracy(preds, golds);
    CHECK(em == doctest::Approx(brute.exact_match).epsilon(1e-9));
    CHECK(la == doctest::Approx(brute.label_accuracy).epsilon(1e-9));
    CHECK(em <= la + 1e-12);
  }
}

TEST_CASE("evaluate_predictions breaks results down by gold type") {
  const std::vector<AnnotatedInstance> golds = {
      tiny_gold("e1", 6, ErrorType::Preposition, {1, 2}),
      tiny_gold("e2", 6, ErrorType::Preposition, {0}),
      tiny_gold("e3", 6, ErrorType::Gerund, {3}),
      tiny_gold("e4", 6, ErrorType::Others, {}),
  };
  std::vector<Prediction> preds;
  for (const auto& g : golds) preds.push_back(pred_of(g));
  preds[1].evidence = {0, 4};                       // one extra token
  preds[2].error_type = ErrorType::Preposition;     // wrong type, right evidence
  preds[3].error_type = ErrorType::Preposition;     // wrong type on empty evidence

  const EvalReport r = evaluate_predictions(preds, golds);
  CHECK(r.n_instances == 4);
  CHECK(r.counts.tp == 4);
  CHECK(r.counts.fp == 1);
  CHECK(r.counts.fn == 0);
  CHECK(r.exact_match == doctest::Approx(25.0));
  CHECK(r.label_accuracy == doctest::Approx(50.0));

  REQUIRE(r.per_type.count("preposition") == 1);
  REQUIRE(r.per_type.count("gerund") == 1);
  REQUIRE(r.per_type.count("others") == 1);
  CHECK(r.per_type.size() == 3);

  const auto& prep = r.per_type.at("preposition");
  CHECK(prep.support == 2);
  CHECK(prep.correct_type == 2);
  CHECK(prep.counts.tp == 3);
  CHECK(prep.counts.fp == 1);
  CHECK(prep.token.precision == doctest::Approx(0.75));
  CHECK(prep.token.recall == doctest::Approx(1.0));

  const auto& ger = r.per_type.at("gerund");
  CHECK(ger.support == 1);
  CHECK(ger.correct_type == 0);
  CHECK(ger.counts.tp == 1);

  long long support_sum = 0, tp_sum = 0, fp_sum = 0, fn_sum = 0, correct_sum = 0;
  for (const auto& [name, tb] : r.per_type) {
    support_sum += tb.support;
    tp_sum += tb.counts.tp;
    fp_sum += tb.counts.fp;
    fn_sum += tb.counts.fn;
    correct_sum += tb.correct_type;
  }
  CHECK(support_sum == r.n_instances);
  CHECK(tp_sum == r.counts.tp);
  CHECK(fp_sum == r.counts.fp);
  CHECK(fn_sum == r.counts.fn);
  CHECK(100.0 * correct_sum / r.n_instances == doctest::Approx(r.label_accuracy));
}

TEST_CASE("misaligned inputs are rejected") {
  const auto gold = tiny_gold("a1", 5, ErrorType::Article, {1});
  auto ok = pred_of(gold);
  CHECK_THROWS_AS(token_prf({ok, ok}, {gold}), AlignmentError);
  auto bad = ok;
  bad.id = "other";
  CHECK_THROWS_AS(token_prf({bad}, {gold}), AlignmentError);
  CHECK_THROWS_AS(exact_match({bad}, {gold}), AlignmentError);
  CHECK_THROWS_AS(evaluate_predictions({bad}, {gold}), AlignmentError);
  CHECK_THROWS_AS(evaluate_predictions({}, {}), EmptyInputError);
  CHECK_THROWS_AS(exact_match({}, {}), EmptyInputError);
  CHECK_THROWS_AS(label_accuracy({}, {}), EmptyInputError);
}

TEST_CASE("report serialization keeps fractions and percents apart") {
  const std::vector<AnnotatedInstance> golds = {tiny_gold("j1", 6, ErrorType::Number, {1, 2})};
  auto pred = pred_of(golds[0]);
  pred.evidence = {1, 2, 3, 4};
  const auto j = report_to_json(evaluate_predictions({pred}, golds));

  CHECK(j.at("precision").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("recall").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("f1").get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(j.at("f05").get<double>() == doctest::Approx(0.5556).epsilon(1e-3));
  CHECK(j.at("exact_match").get<double>() == doctest::Approx(0.0));
  CHECK(j.at("label_accuracy").get<double>() == doctest::Approx(100.0));
  CHECK(j.at("n_instances").get<long long>() == 1);
  CHECK(j.at("counts").at("tp").get<long long>() == 2);
  CHECK(j.at("counts").at("fp").get<long long>() == 2);
  CHECK(j.at("counts").at("fn").get<long long>() == 0);
  REQUIRE(j.at("per_type").contains("number"));
  const auto& tb = j.at("per_type").at("number");
  for (const char* key :
       {"precision", "recall", "f05", "support", "correct_type", "tp", "fp", "fn"})
    CHECK(tb.contains(key));
  CHECK(tb.at("support").get<long long>() == 1);
  CHECK(tb.at("correct_type").get<long long>() == 1);
}
