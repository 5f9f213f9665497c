#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "expect/align.hpp"
#include "expect/corpus.hpp"
#include "expect/errors.hpp"
#include "test_util.hpp"

using namespace expect;

namespace {

AnnotatedInstance fixture() {
  AnnotatedInstance inst;
  inst.id = "fx-1";
  inst.x_tokens = testutil::split_ws("As a result , I enjoy study accounting .");
  inst.y_tokens = testutil::split_ws("As a result , I enjoy studying accounting .");
  inst.edit = extract_span_edit(inst.x_tokens, inst.y_tokens);
  inst.error_type = ErrorType::Gerund;
  inst.evidence = {5};
  return inst;
}

}  // namespace

TEST_CASE("error type table") {
  CHECK(all_error_types().size() == 15);
  CHECK(to_string(ErrorType::SubjectVerbAgreement) == "subject-verb-agreement");
  CHECK(to_string(ErrorType::Others) == "others");
  CHECK(error_type_from_string("preposition") == ErrorType::Preposition);
  CHECK(error_type_from_string("nope") == std::nullopt);
  for (auto t : all_error_types()) CHECK(error_type_from_string(to_string(t)) == t);
}

TEST_CASE("single record file round trip") {
  const auto path = testutil::tmp_path("corpus.jsonl");
  testutil::write_file(path, serialize_instance(fixture()) + "\n");
  const auto loaded = load_corpus(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == "fx-1");
  CHECK(loaded[0].x_tokens == fixture().x_tokens);
  CHECK(loaded[0].edit.x_begin == 6);
  CHECK(loaded[0].edit.x_end == 7);
  CHECK(loaded[0].evidence == std::vector<int>{5});
  std::filesystem::remove(path);
}

TEST_CASE("canonical files reserialize byte-identically") {
  std::vector<AnnotatedInstance> insts;
  auto a = fixture();
  a.meta["note"] = "kept";
  insts.push_back(a);
  auto b = fixture();
  b.id = "fx-2";
  b.error_type = ErrorType::Others;
  b.evidence.clear();
  insts.push_back(b);
  const auto path = testutil::tmp_path("canon.jsonl");
  save_corpus(path, insts);
  const std::string first = testutil::read_file(path);
  save_corpus(path, load_corpus(path));
  CHECK(testutil::read_file(path) == first);
  std::filesystem::remove(path);
}

TEST_CASE("evidence index at sentence length is rejected") {
  auto inst = fixture();
  inst.evidence = {static_cast<int>(inst.x_tokens.size())};
  CHECK_THROWS_AS(validate_instance(inst), ValidationError);
  try {
    validate_instance(inst);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("evidence") != std::string::npos);
  }
}

TEST_CASE("edit that does not reproduce the target names the edit field") {
  auto inst = fixture();
  inst.edit.x_begin = 2;
  inst.edit.x_end = 3;
  inst.edit.s_x = {inst.x_tokens[2]};
  try {
    validate_instance(inst);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("edit") != std::string::npos);
  }
}

TEST_CASE("loader reports line numbers and keeps valid records") {
  const auto path = testutil::tmp_path("mixed.jsonl");
  auto bad = fixture();
  bad.id = "fx-bad";
  bad.evidence = {99};
  testutil::write_file(path, serialize_instance(fixture()) + "\n" + "{broken\n" +
                                serialize_instance(bad) + "\n");
  std::vector<LoadIssue> issues;
  const auto loaded = load_corpus(path, &issues);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == "fx-1");
  REQUIRE(issues.size() == 2);
  CHECK(issues[0].line == 2);
  CHECK_FALSE(issues[0].warning);
  CHECK(issues[1].line == 3);
  CHECK(issues[1].field == "evidence");
  // strict mode throws on the first problem instead
  CHECK_THROWS_AS(load_corpus(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("warnings flag odd but legal records") {
  auto overlap = fixture();
  overlap.evidence = {6};  // inside the edit span
  auto warned = instance_warnings(overlap);
  REQUIRE(warned.size() == 1);
  CHECK(warned[0].warning);

  auto others = fixture();
  others.error_type = ErrorType::Others;
  others.evidence = {1};
  warned = instance_warnings(others);
  REQUIRE(warned.size() == 1);
  CHECK(warned[0].warning);

  CHECK(instance_warnings(fixture()).empty());
}

TEST_CASE("corpus stats single instance") {
  AnnotatedInstance inst;
  inst.id = "s";
  for (int i = 0; i < 10; ++i) inst.x_tokens.push_back("t" + std::to_string(i));
  inst.y_tokens = inst.x_tokens;
  inst.y_tokens[3] = "changed";
  inst.edit = extract_span_edit(inst.x_tokens, inst.y_tokens);
  inst.error_type = ErrorType::Collocation;
  inst.evidence = {1, 5};
  const auto st = corpus_stats({inst});
  CHECK(st.n_sentences == 1);
  CHECK(st.n_words == 10);
  CHECK(st.avg_wps == doctest::Approx(10.0));
  CHECK(st.with_evidence_rate == doctest::Approx(100.0));
  CHECK(st.total_evidence_words == 2);
  CHECK(st.avg_evidence_wps == doctest::Approx(2.0));
}

TEST_CASE("evidence averages skip no-evidence instances") {
  auto a = fixture();
  a.evidence = {1, 3, 5};
  auto b = fixture();
  b.id = "fx-2";
  b.error_type = ErrorType::Others;
  b.evidence.clear();
  const auto st = corpus_stats({a, b});
  CHECK(st.with_evidence_rate == doctest::Approx(50.0));
  CHECK(st.avg_evidence_wps == doctest::Approx(3.0));
  CHECK(st.avg_wps == doctest::Approx(9.0));
}

TEST_CASE("stats and histogram reject empty input") {
  CHECK_THROWS_AS(corpus_stats({}), EmptyInputError);
  CHECK_THROWS_AS(type_histogram({}), EmptyInputError);
}

TEST_CASE("type histogram") {
  auto a = fixture();
  SUBCASE("single type is 100 percent, absent types are zero") {
    const auto hist = type_histogram({a, a, a});
    CHECK(hist.size() == static_cast<std::size_t>(kNumErrorTypes));
    CHECK(hist.at(ErrorType::Gerund) == doctest::Approx(100.0));
    CHECK(hist.at(ErrorType::Preposition) == doctest::Approx(0.0));
  }
  SUBCASE("two types split evenly") {
    auto b = fixture();
    b.error_type = ErrorType::Preposition;
    const auto hist = type_histogram({a, b});
    CHECK(hist.at(ErrorType::Gerund) == doctest::Approx(50.0));
    CHECK(hist.at(ErrorType::Preposition) == doctest::Approx(50.0));
  }
  SUBCASE("percentages sum to 100 on random corpora") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> type_pick(0, kNumErrorTypes - 1);
    std::uniform_int_distribution<int> n_pick(1, 60);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<AnnotatedInstance> insts;
      const int n = n_pick(rng);
      for (int i = 0; i < n; ++i) {
        auto inst = fixture();
        inst.error_type = static_cast<ErrorType>(type_pick(rng));
        if (inst.error_type == ErrorType::Others) inst.evidence.clear();
        insts.push_back(inst);
      }
      double total = 0.0;
      for (const auto& [t, pct] : type_histogram(insts)) total += pct;
      CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("missing required fields are named") {
  auto j = instance_to_json(fixture());
  j.erase("type");
  CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  auto j2 = instance_to_json(fixture());
  j2["type"] = "not-a-type";
  try {
    instance_from_json(j2);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("type") != std::string::npos);
  }
}
