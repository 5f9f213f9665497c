#include "expect/align.hpp"

#include <algorithm>

#include "expect/errors.hpp"

namespace expect {

std::vector<std::string> apply_edit(const std::vector<std::string>& x_tokens,
                                    const SpanEdit& edit) {
  const int n = static_cast<int>(x_tokens.size());
  if (edit.x_begin < 0 || edit.x_begin > edit.x_end || edit.x_end > n)
    throw InvalidEditError("edit span [" + std::to_string(edit.x_begin) + "," +
                           std::to_string(edit.x_end) + ") out of range for " +
                           std::to_string(n) + " tokens");
  if (!edit.s_x.empty()) {
    if (static_cast<int>(edit.s_x.size()) != edit.x_len() ||
        !std::equal(edit.s_x.begin(), edit.s_x.end(), x_tokens.begin() + edit.x_begin))
      throw InvalidEditError("edit s_x does not match the source tokens");
  }
  std::vector<std::string> y;
  y.reserve(x_tokens.size() - edit.x_len() + edit.s_y.size());
  y.insert(y.end(), x_tokens.begin(), x_tokens.begin() + edit.x_begin);
  y.insert(y.end(), edit.s_y.begin(), edit.s_y.end());
  y.insert(y.end(), x_tokens.begin() + edit.x_end, x_tokens.end());
  return y;
}

SpanEdit extract_span_edit(const std::vector<std::string>& x_tokens,
                           const std::vector<std::string>& y_tokens) {
  if (x_tokens == y_tokens) throw NoEditError("sequences are identical, nothing to extract");
  const int n = static_cast<int>(x_tokens.size());
  const int m = static_cast<int>(y_tokens.size());

  int prefix = 0;
  while (prefix < n && prefix < m && x_tokens[prefix] == y_tokens[prefix]) ++prefix;
  int suffix = 0;
  while (suffix < n && suffix < m && x_tokens[n - 1 - suffix] == y_tokens[m - 1 - suffix])
    ++suffix;

  // The spans are minimal when prefix + suffix is as large as possible; among
  // the minimal candidates the smallest prefix gives the leftmost start.
  const int total = std::min({prefix + suffix, n, m});
  const int p = std::max(0, total - suffix);
  const int s = total - p;

  SpanEdit edit;
  edit.x_begin = p;
  edit.x_end = n - s;
  edit.y_begin = p;
  edit.y_end = m - s;
  edit.s_x.assign(x_tokens.begin() + edit.x_begin, x_tokens.begin() + edit.x_end);
  edit.s_y.assign(y_tokens.begin() + edit.y_begin, y_tokens.begin() + edit.y_end);
  return edit;
}

std::optional<int> WordAlignment::x_to_y(int x_index) const {
  if (x_index < 0 || x_index >= x_len) return std::nullopt;
  if (x_index < x_begin) return x_index;
  if (x_index >= x_end) return x_index + (y_end - x_end);
  return std::nullopt;
}

std::optional<int> WordAlignment::y_to_x(int y_index) const {
  if (y_index < 0 || y_index >= y_len) return std::nullopt;
  if (y_index < y_begin) return y_index;
  if (y_index >= y_end) return y_index + (x_end - y_end);
  return std::nullopt;
}

WordAlignment build_alignment(const std::vector<std::string>& x_tokens,
                              const std::vector<std::string>& y_tokens, const SpanEdit& edit) {
  const int n = static_cast<int>(x_tokens.size());
  const int m = static_cast<int>(y_tokens.size());
  if (edit.x_begin < 0 || edit.x_begin > edit.x_end || edit.x_end > n ||
      edit.y_begin < 0 || edit.y_begin > edit.y_end || edit.y_end > m)
    throw InvalidEditError("edit spans out of range");
  if (edit.x_begin != edit.y_begin)
    throw InvalidEditError("edit spans must start at the same offset");
  if (n - edit.x_end != m - edit.y_end)
    throw InvalidEditError("edit spans leave different suffix lengths");
  for (int i = 0; i < edit.x_begin; ++i)
    if (x_tokens[i] != y_tokens[i]) throw InvalidEditError("prefix tokens differ before the edit");
  for (int i = edit.x_end, j = edit.y_end; i < n; ++i, ++j)
    if (x_tokens[i] != y_tokens[j]) throw InvalidEditError("suffix tokens differ after the edit");

  WordAlignment a;
  a.x_len = n;
  a.y_len = m;
  a.x_begin = edit.x_begin;
  a.x_end = edit.x_end;
  a.y_begin = edit.y_begin;
  a.y_end = edit.y_end;
  a.pairs.reserve(n - edit.x_len());
  for (int j = 0; j < n; ++j) {
    if (auto y = a.x_to_y(j)) a.pairs.emplace_back(j, *y);
  }
  return a;
}

SyntacticVector project_vector(const SyntacticVector& d_y, const WordAlignment& alignment) {
  if (static_cast<int>(d_y.size()) != alignment.y_len)
    throw DimensionError("syntactic vector length " + std::to_string(d_y.size()) +
                         " does not match |Y| = " + std::to_string(alignment.y_len));
  SyntacticVector d_x(alignment.x_len, SynCategory::Correction);
  for (auto [xj, yj] : alignment.pairs) d_x[xj] = d_y[yj];
  return d_x;
}

}  // namespace expect
