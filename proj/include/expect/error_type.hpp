#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace expect {

/// The 15 grammatical error categories. "others" groups the phenomena that
/// carry no evidence words (spelling, punctuation, word order, ...).
enum class ErrorType : int {
  Infinitives = 0,
  Gerund,
  Participle,
  SubjectVerbAgreement,
  AuxiliaryVerb,
  VerbTense,
  PronounAntecedentAgreement,
  Possessive,
  Collocation,
  Preposition,
  PosConfusion,
  Article,
  Number,
  TransitiveVerb,
  Others,
};

constexpr int kNumErrorTypes = 15;
// Every category except "others" can carry evidence tags.
constexpr int kNumEvidenceTypes = 14;

const std::array<ErrorType, kNumErrorTypes>& all_error_types();

std::string to_string(ErrorType t);
std::optional<ErrorType> error_type_from_string(std::string_view name);

inline int type_index(ErrorType t) { return static_cast<int>(t); }

}  // namespace expect
