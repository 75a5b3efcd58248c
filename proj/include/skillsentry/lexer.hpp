#pragma once

#include <string>
#include <vector>

#include "skillsentry/ingest.hpp"

namespace skillsentry {

/// Artifact lines joined with '\n' (analysis-normalized, independent of the
/// recorded newline convention).
std::string plain_text(const Artifact& a);

/// plain_text with comments blanked to spaces, preserving length and line
/// structure. Strings are preserved. For markdown, only fenced code block
/// content is kept; everything else is blanked.
std::string analysis_text(const Artifact& a);

/// Offset -> 1-based line mapping over '\n'-separated text.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text);
  int line_of(std::size_t offset) const;
  std::size_t line_start(int line) const;  // 1-based
  int line_count() const { return static_cast<int>(starts_.size()); }

 private:
  std::vector<std::size_t> starts_;
};

/// Returns the offset just past the delimiter matching text[open_pos]
/// (string-aware), or npos when unbalanced.
std::size_t scan_balanced(const std::string& text, std::size_t open_pos);

/// Splits [begin, end) into top-level comma-separated ranges (string- and
/// bracket-aware). Empty input yields no ranges.
std::vector<std::pair<std::size_t, std::size_t>> split_top_level_args(const std::string& text,
                                                                      std::size_t begin,
                                                                      std::size_t end);

/// Strips a `name=` keyword-argument prefix (single '=', not '==').
std::string strip_kwarg_prefix(const std::string& arg);

/// True if the trimmed expression is one quoted string literal.
bool is_string_literal(const std::string& expr);
/// Contents of a quoted literal (no unescaping beyond the outer quotes).
std::string literal_inner(const std::string& expr);
/// True if the trimmed expression is a bare identifier.
bool is_bare_identifier(const std::string& expr);
/// True for integer/float literals.
bool is_number_literal(const std::string& expr);

/// All quoted string literal contents appearing in the expression.
std::vector<std::string> inner_string_literals(const std::string& expr);

/// Identifier tokens in the expression, excluding those in call position
/// (immediately followed by '(').
std::vector<std::string> referenced_identifiers(const std::string& expr);

}  // namespace skillsentry
