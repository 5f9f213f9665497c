#include "expect/error_type.hpp"

namespace expect {

namespace {
constexpr std::array<std::string_view, kNumErrorTypes> kNames = {
    "infinitives",
    "gerund",
    "participle",
    "subject-verb-agreement",
    "auxiliary-verb",
    "verb-tense",
    "pronoun-antecedent-agreement",
    "possessive",
    "collocation",
    "preposition",
    "pos-confusion",
    "article",
    "number",
    "transitive-verb",
    "others",
};
}  // namespace

const std::array<ErrorType, kNumErrorTypes>& all_error_types() {
  static const std::array<ErrorType, kNumErrorTypes> types = [] {
    std::array<ErrorType, kNumErrorTypes> a{};
    for (int i = 0; i < kNumErrorTypes; ++i) a[i] = static_cast<ErrorType>(i);
    return a;
  }();
  return types;
}

std::string to_string(ErrorType t) { return std::string(kNames[static_cast<int>(t)]); }

std::optional<ErrorType> error_type_from_string(std::string_view name) {
  for (int i = 0; i < kNumErrorTypes; ++i) {
    if (kNames[i] == name) return static_cast<ErrorType>(i);
  }
  return std::nullopt;
}

}  // namespace expect
