#include "skillsentry/matcher.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "skillsentry/lexer.hpp"
#include "skillsentry/util.hpp"

namespace skillsentry {

namespace {

struct CaptureText {
  std::string text;          // full text consumed by the wildcard
  std::size_t begin = 0;     // offsets into the artifact's plain text
  std::size_t end = 0;
};

struct RawMatch {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<CaptureText> wildcards;  // by wildcard ordinal (0-based)
};

bool rule_applies(const SsoRule& rule, const Artifact& a) {
  if (a.binary || a.lines.empty()) return false;
  bool textual_kind = a.kind == ArtifactKind::Prompt || a.kind == ArtifactKind::Documentation ||
                      a.kind == ArtifactKind::Config || a.kind == ArtifactKind::Manifest;
  if (rule.trigger.style == Trigger::Call)
    return a.kind == ArtifactKind::Script && rule.applies_to_language(a.language);
  // Command-style rules hit shell-like scripts by language and prose/config
  // artifacts via the "text" pseudo-language.
  if (a.kind == ArtifactKind::Script) return rule.applies_to_language(a.language);
  return textual_kind && rule.applies_to_text();
}

std::size_t skip_ws(const std::string& s, std::size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
  return i;
}

bool word_boundary_before(const std::string& s, std::size_t pos) {
  return pos == 0 || (!is_ident_char(s[pos - 1]) && s[pos - 1] != '.');
}

// Attempts to match the call chain starting at `pos` (the first step's name
// offset). Returns the end offset or npos.
std::size_t try_match_call(const std::string& text, std::size_t pos, const Trigger& trig,
                           std::vector<CaptureText>& wildcards) {
  std::size_t i = pos;
  for (std::size_t s = 0; s < trig.steps.size(); ++s) {
    const CallStep& step = trig.steps[s];
    if (step.name == "*") {
      // Trailing attribute wildcard: one identifier segment.
      std::size_t start = i;
      while (i < text.size() && is_ident_char(text[i])) ++i;
      if (i == start) return std::string::npos;
      wildcards.push_back({text.substr(start, i - start), start, i});
      return i;
    }
    if (text.compare(i, step.name.size(), step.name) != 0) return std::string::npos;
    i += step.name.size();
    if (step.has_args) {
      std::size_t open_pos = skip_ws(text, i);
      if (open_pos >= text.size() || text[open_pos] != step.open) return std::string::npos;
      std::size_t after = scan_balanced(text, open_pos);
      if (after == std::string::npos) return std::string::npos;
      std::size_t body_begin = open_pos + 1;
      std::size_t body_end = after - 1;
      if (step.any_args) {
        std::string body = trim(text.substr(body_begin, body_end - body_begin));
        wildcards.push_back({body, body_begin, body_end});
      } else {
        auto args = split_top_level_args(text, body_begin, body_end);
        if (args.size() < step.elems.size()) return std::string::npos;
        for (std::size_t k = 0; k < step.elems.size(); ++k) {
          std::string arg = trim(text.substr(args[k].first, args[k].second - args[k].first));
          if (step.elems[k].kind == ArgElem::Literal) {
            if (!is_string_literal(arg) || literal_inner(arg) != step.elems[k].literal)
              return std::string::npos;
          } else {
            wildcards.push_back({arg, args[k].first, args[k].second});
          }
        }
      }
      i = after;
    } else if (s + 1 == trig.steps.size()) {
      // Bare final step must end at an identifier boundary.
      if (i < text.size() && is_ident_char(text[i])) return std::string::npos;
    }
    if (s + 1 < trig.steps.size()) {
      i = skip_ws(text, i);
      if (i >= text.size() || text[i] != '.') return std::string::npos;
      i = skip_ws(text, i + 1);
    }
  }
  return i;
}

std::vector<RawMatch> find_call_matches(const std::string& text, const Trigger& trig) {
  std::vector<RawMatch> out;
  const std::string& head = trig.steps.front().name;
  std::size_t pos = 0;
  while ((pos = text.find(head, pos)) != std::string::npos) {
    if (!word_boundary_before(text, pos)) {
      pos += 1;
      continue;
    }
    std::vector<CaptureText> wilds;
    std::size_t end = try_match_call(text, pos, trig, wilds);
    if (end != std::string::npos) {
      out.push_back({pos, end, std::move(wilds)});
      pos = end;  // non-overlapping per rule
    } else {
      pos += head.size();
    }
  }
  return out;
}

struct Token {
  std::string text;
  std::size_t begin;
  std::size_t end;
};

std::vector<Token> tokenize_line(const std::string& text, std::size_t line_begin,
                                 std::size_t line_end) {
  std::vector<Token> out;
  std::size_t i = line_begin;
  while (i < line_end) {
    while (i < line_end && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < line_end && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back({text.substr(start, i - start), start, i});
  }
  return out;
}

// Matches the command pattern against tokens starting at index `ti`.
// Returns index just past the match, or npos. Wildcards consume one or more
// tokens, minimally unless trailing.
std::size_t try_match_command(const std::vector<Token>& toks, std::size_t ti,
                              const std::vector<std::string>& pattern, std::size_t pi,
                              const std::string& text, std::vector<CaptureText>& wildcards) {
  if (pi == pattern.size()) return ti;
  const std::string& p = pattern[pi];
  if (p != "*") {
    if (ti >= toks.size() || toks[ti].text != p) return std::string::npos;
    return try_match_command(toks, ti + 1, pattern, pi + 1, text, wildcards);
  }
  // Wildcard: try consuming 1..N tokens.
  for (std::size_t take = 1; ti + take <= toks.size(); ++take) {
    std::vector<CaptureText> saved = wildcards;
    std::size_t b = toks[ti].begin, e = toks[ti + take - 1].end;
    saved.push_back({text.substr(b, e - b), b, e});
    std::size_t rest = try_match_command(toks, ti + take, pattern, pi + 1, text, saved);
    if (rest != std::string::npos) {
      // Trailing wildcard eats everything.
      if (pi + 1 == pattern.size() && ti + take < toks.size()) continue;
      wildcards = std::move(saved);
      return rest;
    }
  }
  return std::string::npos;
}

std::vector<RawMatch> find_command_matches(const std::string& text, const Trigger& trig) {
  std::vector<RawMatch> out;
  std::size_t line_begin = 0;
  while (line_begin <= text.size()) {
    std::size_t line_end = text.find('\n', line_begin);
    if (line_end == std::string::npos) line_end = text.size();
    auto toks = tokenize_line(text, line_begin, line_end);
    std::size_t ti = 0;
    while (ti < toks.size()) {
      if (toks[ti].text == trig.tokens.front()) {
        std::vector<CaptureText> wilds;
        std::size_t after = try_match_command(toks, ti, trig.tokens, 0, text, wilds);
        if (after != std::string::npos) {
          std::size_t b = toks[ti].begin;
          std::size_t e = after > 0 ? toks[after - 1].end : toks[ti].end;
          out.push_back({b, e, std::move(wilds)});
          ti = after;
          continue;
        }
      }
      ++ti;
    }
    if (line_end == text.size()) break;
    line_begin = line_end + 1;
  }
  return out;
}

std::string capture_value(const CaptureText& w, int sub, Trigger::Style style) {
  if (sub == 0) return trim(w.text);
  if (style == Trigger::Command) {
    auto toks = split_ws(w.text);
    if (sub > static_cast<int>(toks.size())) return "";
    return toks[static_cast<std::size_t>(sub - 1)];
  }
  auto args = split_top_level_args(w.text, 0, w.text.size());
  if (sub > static_cast<int>(args.size())) return "";
  auto [b, e] = args[static_cast<std::size_t>(sub - 1)];
  return strip_kwarg_prefix(w.text.substr(b, e - b));
}

std::vector<SsoRecord> match_artifact(const Artifact& a, const std::vector<SsoRule>& rules) {
  std::vector<SsoRecord> out;
  std::string plain;
  std::string analysis;
  std::optional<LineIndex> lines_cache;

  for (const auto& rule : rules) {
    if (!rule_applies(rule, a)) continue;
    if (!lines_cache) {
      plain = plain_text(a);
      analysis = analysis_text(a);
      lines_cache.emplace(plain);
    }
    bool ctx_ok = true;
    for (const auto& c : rule.context) ctx_ok = ctx_ok && contains_word(analysis, c.needle);
    if (!ctx_ok) continue;

    const LineIndex& lines = *lines_cache;
    auto matches = rule.trigger.style == Trigger::Call ? find_call_matches(analysis, rule.trigger)
                                                       : find_command_matches(analysis, rule.trigger);
    for (const auto& m : matches) {
      SsoRecord rec;
      rec.artifact = a.rel_path;
      rec.sso_type = rule.sso_type;
      rec.sso_subtype = rule.sso_subtype;
      rec.confidence = 1.0;
      rec.span.start_line = lines.line_of(m.begin);
      rec.span.end_line = lines.line_of(m.end > m.begin ? m.end - 1 : m.begin);
      rec.matched_text = plain.substr(m.begin, m.end - m.begin);
      rec.provenance = {Provenance::Symbolic, rule.rule_id};
      for (const auto& cap : rule.captures) {
        if (cap.wildcard > static_cast<int>(m.wildcards.size())) continue;
        const CaptureText& w = m.wildcards[static_cast<std::size_t>(cap.wildcard - 1)];
        std::string value = capture_value(w, cap.sub, rule.trigger.style);
        if (value.empty()) continue;
        OperandRef ref;
        ref.slot = cap.slot;
        ref.raw_expr = value;
        ref.span.start_line = lines.line_of(w.begin);
        ref.span.end_line = lines.line_of(w.end > w.begin ? w.end - 1 : w.begin);
        rec.operand_refs.push_back(std::move(ref));
      }
      rec.record_id = compute_record_id(rec);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<SsoRecord> match_impl(const SkillPackage& pkg, const RuleBase& rb, bool parallel) {
  std::vector<std::vector<SsoRecord>> per_artifact(pkg.artifacts.size());
  const int n = static_cast<int>(pkg.artifacts.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i)
      per_artifact[static_cast<std::size_t>(i)] =
          match_artifact(pkg.artifacts[static_cast<std::size_t>(i)], rb.rules);
  } else {
    for (int i = 0; i < n; ++i)
      per_artifact[static_cast<std::size_t>(i)] =
          match_artifact(pkg.artifacts[static_cast<std::size_t>(i)], rb.rules);
  }
  std::vector<SsoRecord> out;
  for (auto& v : per_artifact)
    for (auto& r : v) out.push_back(std::move(r));
  sort_records(out);
  return out;
}

}  // namespace

std::vector<SsoRecord> match_rules(const SkillPackage& pkg, const RuleBase& rb,
                                   const MatchOptions& opts) {
  return match_impl(pkg, rb, opts.parallel);
}

std::vector<SsoRecord> match_rules_serial(const SkillPackage& pkg, const RuleBase& rb) {
  return match_impl(pkg, rb, false);
}

std::vector<SsoRecord> match_rule_on_artifact(const Artifact& artifact, const SsoRule& rule) {
  std::vector<SsoRecord> out = match_artifact(artifact, {rule});
  sort_records(out);
  return out;
}

}  // namespace skillsentry
