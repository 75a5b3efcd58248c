#include "skillsentry/lexer.hpp"

#include <algorithm>
#include <cctype>

#include "skillsentry/util.hpp"

namespace skillsentry {

std::string plain_text(const Artifact& a) { return join(a.lines, "\n"); }

namespace {

bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

// Blanks `#`-to-eol comments outside quotes ('`' optional for shell/yaml but
// harmless there).
void strip_hash_comments(std::string& s) {
  char quote = 0;
  bool escape = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (escape) {
      escape = false;
      continue;
    }
    if (quote) {
      if (c == '\\') escape = true;
      else if (c == quote) quote = 0;
      continue;
    }
    if (is_quote(c)) {
      quote = c;
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') s[i++] = ' ';
      --i;
    }
  }
}

// Python: honors triple quotes; '#' comments blanked.
void strip_python_comments(std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '"' || c == '\'') {
      char q = c;
      bool triple = i + 2 < s.size() && s[i + 1] == q && s[i + 2] == q;
      if (triple) {
        std::size_t end = s.find(std::string(3, q), i + 3);
        i = end == std::string::npos ? s.size() : end + 3;
      } else {
        ++i;
        while (i < s.size() && s[i] != q && s[i] != '\n') {
          if (s[i] == '\\') ++i;
          ++i;
        }
        if (i < s.size()) ++i;
      }
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') s[i++] = ' ';
    } else {
      ++i;
    }
  }
}

void strip_js_comments(std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (is_quote(c)) {
      char q = c;
      ++i;
      while (i < s.size() && s[i] != q) {
        if (s[i] == '\\') ++i;
        if (q != '`' && i < s.size() && s[i] == '\n') break;  // unterminated
        ++i;
      }
      if (i < s.size()) ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') s[i++] = ' ';
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      s[i] = s[i + 1] = ' ';
      i += 2;
      while (i + 1 < s.size() && !(s[i] == '*' && s[i + 1] == '/')) {
        if (s[i] != '\n') s[i] = ' ';
        ++i;
      }
      if (i + 1 < s.size()) {
        s[i] = s[i + 1] = ' ';
        i += 2;
      } else {
        i = s.size();
      }
    } else {
      ++i;
    }
  }
}

// Markdown: keep fenced code block bodies, blank everything else.
void strip_markdown(std::string& s) {
  bool in_fence = false;
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t eol = s.find('\n', i);
    if (eol == std::string::npos) eol = s.size();
    std::string_view line(s.data() + i, eol - i);
    std::string_view t = line;
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
    bool fence_line = t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
    bool keep = in_fence && !fence_line;
    if (fence_line) in_fence = !in_fence;
    if (!keep)
      for (std::size_t k = i; k < eol; ++k) s[k] = ' ';
    if (eol == s.size()) break;
    i = eol + 1;
  }
}

}  // namespace

std::string analysis_text(const Artifact& a) {
  std::string s = plain_text(a);
  if (a.language == "python") strip_python_comments(s);
  else if (a.language == "javascript" || a.language == "json") strip_js_comments(s);
  else if (a.language == "markdown") strip_markdown(s);
  else strip_hash_comments(s);  // shell, yaml, unknown
  return s;
}

LineIndex::LineIndex(const std::string& text) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n') starts_.push_back(i + 1);
}

int LineIndex::line_of(std::size_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<int>(it - starts_.begin());
}

std::size_t LineIndex::line_start(int line) const {
  if (line < 1) line = 1;
  if (line > static_cast<int>(starts_.size())) line = static_cast<int>(starts_.size());
  return starts_[static_cast<std::size_t>(line - 1)];
}

std::size_t scan_balanced(const std::string& text, std::size_t open_pos) {
  char open = text[open_pos];
  char close = open == '(' ? ')' : open == '[' ? ']' : open == '{' ? '}' : 0;
  if (!close) return std::string::npos;
  int depth = 0;
  std::size_t i = open_pos;
  while (i < text.size()) {
    char c = text[i];
    if (is_quote(c)) {
      char q = c;
      ++i;
      while (i < text.size() && text[i] != q) {
        if (text[i] == '\\') ++i;
        ++i;
      }
      if (i < text.size()) ++i;
      continue;
    }
    if (c == open) ++depth;
    else if (c == close) {
      --depth;
      if (depth == 0) return i + 1;
    }
    ++i;
  }
  return std::string::npos;
}

std::vector<std::pair<std::size_t, std::size_t>> split_top_level_args(const std::string& text,
                                                                      std::size_t begin,
                                                                      std::size_t end) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (trim(text.substr(begin, end - begin)).empty()) return out;
  int depth = 0;
  std::size_t start = begin;
  std::size_t i = begin;
  while (i < end) {
    char c = text[i];
    if (is_quote(c)) {
      char q = c;
      ++i;
      while (i < end && text[i] != q) {
        if (text[i] == '\\') ++i;
        ++i;
      }
      if (i < end) ++i;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') --depth;
    else if (c == ',' && depth == 0) {
      out.emplace_back(start, i);
      start = i + 1;
    }
    ++i;
  }
  out.emplace_back(start, end);
  return out;
}

std::string strip_kwarg_prefix(const std::string& arg) {
  std::string t = trim(arg);
  std::size_t i = 0;
  while (i < t.size() && is_ident_char(t[i])) ++i;
  if (i == 0 || i >= t.size()) return t;
  std::size_t j = i;
  while (j < t.size() && std::isspace(static_cast<unsigned char>(t[j]))) ++j;
  if (j < t.size() && t[j] == '=' && (j + 1 >= t.size() || t[j + 1] != '=') && t[j] != '!')
    return trim(t.substr(j + 1));
  // javascript object shorthand `key: value`
  if (j < t.size() && t[j] == ':') return trim(t.substr(j + 1));
  return t;
}

bool is_string_literal(const std::string& expr) {
  std::string t = trim(expr);
  if (t.size() < 2) return false;
  char q = t.front();
  if (!is_quote(q) || t.back() != q) return false;
  // Ensure the opening quote closes only at the end.
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] == '\\') {
      ++i;
      continue;
    }
    if (t[i] == q) return false;
  }
  return true;
}

std::string literal_inner(const std::string& expr) {
  std::string t = trim(expr);
  if (t.size() >= 2 && is_quote(t.front()) && t.back() == t.front())
    return t.substr(1, t.size() - 2);
  return t;
}

bool is_bare_identifier(const std::string& expr) {
  std::string t = trim(expr);
  if (t.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(t[0]))) return false;
  for (char c : t)
    if (!is_ident_char(c)) return false;
  return true;
}

bool is_number_literal(const std::string& expr) {
  std::string t = trim(expr);
  if (t.empty()) return false;
  std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
  if (i == t.size()) return false;
  bool digit = false;
  for (; i < t.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(t[i]))) digit = true;
    else if (t[i] != '.' && t[i] != '_' && t[i] != 'e' && t[i] != 'E' && t[i] != 'x') return false;
  }
  return digit;
}

std::vector<std::string> inner_string_literals(const std::string& expr) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < expr.size()) {
    char c = expr[i];
    if (is_quote(c)) {
      char q = c;
      std::size_t start = ++i;
      while (i < expr.size() && expr[i] != q) {
        if (expr[i] == '\\') ++i;
        ++i;
      }
      if (i < expr.size()) {
        out.push_back(expr.substr(start, i - start));
        ++i;
      }
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::string> referenced_identifiers(const std::string& expr) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < expr.size()) {
    char c = expr[i];
    if (is_quote(c)) {
      char q = c;
      ++i;
      while (i < expr.size() && expr[i] != q) {
        if (expr[i] == '\\') ++i;
        ++i;
      }
      if (i < expr.size()) ++i;
      continue;
    }
    if (is_ident_char(c) && !std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < expr.size() && is_ident_char(expr[i])) ++i;
      std::size_t j = i;
      while (j < expr.size() && std::isspace(static_cast<unsigned char>(expr[j]))) ++j;
      bool call_pos = j < expr.size() && expr[j] == '(';
      if (!call_pos) out.push_back(expr.substr(start, i - start));
    } else if (is_ident_char(c)) {
      while (i < expr.size() && is_ident_char(expr[i])) ++i;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace skillsentry
