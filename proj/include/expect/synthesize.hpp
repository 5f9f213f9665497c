#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "expect/error_type.hpp"
#include "expect/instance.hpp"
#include "expect/syntax.hpp"

namespace expect {

/// Every instance is drawn independently from a seed derived from (seed,
/// index), so corpora are reproducible and order-independent.
struct SynthOptions {
  int n = 100;
  std::uint64_t seed = 42;
  /// Relative weights per error type; empty selects the default five-type
  /// mix (subject-verb-agreement, number, preposition, gerund, others).
  std::map<ErrorType, double> mix;
};

struct SynthOutput {
  std::vector<AnnotatedInstance> instances;
  std::map<std::string, DependencyParse> parses;  // hand-built trees over Y
};

/// Types the generator has rules for.
const std::vector<ErrorType>& supported_synth_types();

SynthOutput synthesize(const SynthOptions& options);

}  // namespace expect
