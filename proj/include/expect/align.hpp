#pragma once

#include <optional>
#include <string>
#include <vector>

#include "expect/instance.hpp"
#include "expect/syntax.hpp"

namespace expect {

/// Replaces X[x_span] by s_y. Throws InvalidEditError when the edit does not
/// fit the sequence.
std::vector<std::string> apply_edit(const std::vector<std::string>& x_tokens,
                                    const SpanEdit& edit);

/// Minimal contiguous token-level diff between X and Y. Ties are broken by
/// leftmost start, then shortest x span. Throws NoEditError on identical
/// sequences.
SpanEdit extract_span_edit(const std::vector<std::string>& x_tokens,
                           const std::vector<std::string>& y_tokens);

/// Monotone bijection between the tokens outside the edit spans. Positions
/// before the edit map to themselves, positions after shift by |s_y| - |s_x|.
struct WordAlignment {
  int x_len = 0, y_len = 0;
  int x_begin = 0, x_end = 0;  // excluded X positions
  int y_begin = 0, y_end = 0;  // excluded Y positions
  std::vector<std::pair<int, int>> pairs;

  std::optional<int> x_to_y(int x_index) const;
  std::optional<int> y_to_x(int y_index) const;
};

/// Throws InvalidEditError when the edit is inconsistent with the pair.
WordAlignment build_alignment(const std::vector<std::string>& x_tokens,
                              const std::vector<std::string>& y_tokens, const SpanEdit& edit);

/// Maps Y-side categories onto X through the alignment; X tokens inside the
/// edit span (which have no aligned partner) become Correction.
SyntacticVector project_vector(const SyntacticVector& d_y, const WordAlignment& alignment);

}  // namespace expect
