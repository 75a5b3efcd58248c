#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillsentry/taxonomy.hpp"

namespace skillsentry {

struct RuleParseError : std::runtime_error {
  std::string rule_id;
  RuleParseError(std::string id, const std::string& reason)
      : std::runtime_error((id.empty() ? "rule file" : "rule '" + id + "'") + ": " + reason),
        rule_id(std::move(id)) {}
};

// --- Trigger patterns ------------------------------------------------------
//
// Call style (used for script languages):
//   subprocess.run(*)            any args; one wildcard for the whole list
//   open(*, "r")                 one-arg wildcard plus a literal constraint
//   fabric.Connection(*).run(*)  chained calls
//   os.environ[*]                subscript
//   process.env.*                attribute tail
//
// Command style (used for shell lines, config values, fenced blocks):
//   pip install *                '*' consumes one or more tokens
//   curl * | bash
//
// Each '*' is one wildcard, numbered left to right across the trigger.

struct ArgElem {
  enum Kind { Wildcard, Literal } kind = Wildcard;
  std::string literal;
};

struct CallStep {
  std::string name;  // identifier, or "*" only as a trailing attribute wildcard
  bool has_args = false;
  char open = '(';        // '(' or '['
  bool any_args = false;  // the pattern was exactly (*) / [*]
  std::vector<ArgElem> elems;
};

struct Trigger {
  enum Style { Call, Command } style = Command;
  std::string text;
  std::vector<CallStep> steps;      // call style
  std::vector<std::string> tokens;  // command style; "*" entries are wildcards
  int wildcard_count = 0;

  static Trigger parse(const std::string& text);  // throws RuleParseError("", reason)
};

/// Binds one operand slot to a trigger wildcard: `slot:W` captures the whole
/// text consumed by wildcard W, `slot:W.J` its J-th top-level argument/token.
struct ArgCapture {
  std::string slot;
  int wildcard = 1;
  int sub = 0;  // 0 = whole
};

struct ContextConstraint {
  std::string needle;  // artifact text must contain this at word boundaries
};

enum class RuleOrigin { Seed, Promoted };

struct SsoRule {
  std::string rule_id;
  SsoCategory category = SsoCategory::Exec;
  std::string sso_type;
  std::string sso_subtype;
  std::vector<std::string> languages;  // language tags, or "text"
  Trigger trigger;
  std::vector<ArgCapture> captures;
  std::vector<ContextConstraint> context;
  RuleOrigin origin = RuleOrigin::Seed;
  std::vector<std::string> provenance;  // evidence record ids for promoted rules

  bool applies_to_text() const;
  bool applies_to_language(const std::string& lang) const;
};

struct RuleBase {
  std::vector<SsoRule> rules;
  int version = 1;
  std::string held_out_path;  // optional reference to a validation corpus

  const SsoRule* find(const std::string& id) const;
  /// Languages covered by at least one call-style rule.
  std::vector<std::string> covered_script_languages() const;
};

/// Parses the documented `sso-rules v1` format and validates every rule
/// (unique ids, category/slot consistency, parseable triggers).
RuleBase parse_rule_base(const std::string& text, const Taxonomy& tax);
RuleBase load_rule_base(const std::string& path, const Taxonomy& tax);

std::string rule_to_text(const SsoRule& rule);
std::string rule_base_to_text(const RuleBase& rb);

}  // namespace skillsentry
