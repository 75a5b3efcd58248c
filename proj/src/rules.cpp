#include "skillsentry/rules.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "skillsentry/operand_flow.hpp"
#include "skillsentry/util.hpp"

namespace skillsentry {

namespace {

bool is_name_char(char c) { return is_ident_char(c); }

// Parses an argument pattern body (between '(' and ')' or '[' and ']').
// An empty body constrains nothing and captures nothing.
void parse_arg_pattern(const std::string& body, CallStep& step, int& wildcards) {
  std::string t = trim(body);
  if (t == "*") {
    step.any_args = true;
    ++wildcards;
    return;
  }
  if (t.empty()) return;
  for (auto& piece : split(t, ',')) {
    std::string p = trim(piece);
    ArgElem elem;
    if (p == "*") {
      elem.kind = ArgElem::Wildcard;
      ++wildcards;
    } else if (p.size() >= 2 && (p.front() == '"' || p.front() == '\'') && p.back() == p.front()) {
      elem.kind = ArgElem::Literal;
      elem.literal = p.substr(1, p.size() - 2);
    } else {
      throw RuleParseError("", "argument pattern element must be * or a quoted literal: " + p);
    }
    step.elems.push_back(std::move(elem));
  }
}

Trigger parse_call_trigger(const std::string& text) {
  Trigger trig;
  trig.style = Trigger::Call;
  trig.text = text;

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CallStep step;
    if (text[i] == '*') {
      // Attribute-tail wildcard: must be the last step.
      step.name = "*";
      ++trig.wildcard_count;
      ++i;
      if (i != n) throw RuleParseError("", "'*' step must end the trigger: " + text);
      trig.steps.push_back(std::move(step));
      break;
    }
    std::size_t start = i;
    while (i < n && is_name_char(text[i])) ++i;
    if (i == start) throw RuleParseError("", "expected name in trigger at '" + text.substr(i) + "'");
    step.name = text.substr(start, i - start);

    if (i < n && (text[i] == '(' || text[i] == '[')) {
      char open = text[i];
      char close = open == '(' ? ')' : ']';
      int depth = 1;
      std::size_t body_start = ++i;
      while (i < n && depth > 0) {
        if (text[i] == open) ++depth;
        else if (text[i] == close) --depth;
        ++i;
      }
      if (depth != 0) throw RuleParseError("", "unbalanced delimiters in trigger: " + text);
      step.has_args = true;
      step.open = open;
      parse_arg_pattern(text.substr(body_start, i - body_start - 1), step, trig.wildcard_count);
    }
    trig.steps.push_back(std::move(step));

    if (i == n) break;
    if (text[i] != '.') throw RuleParseError("", "expected '.' between trigger steps: " + text);
    ++i;
    if (i == n) throw RuleParseError("", "trigger ends with '.': " + text);
  }
  if (trig.steps.empty()) throw RuleParseError("", "empty trigger");
  if (trig.steps.front().name == "*")
    throw RuleParseError("", "trigger cannot start with a wildcard step: " + text);
  return trig;
}

Trigger parse_command_trigger(const std::string& text) {
  Trigger trig;
  trig.style = Trigger::Command;
  trig.text = text;
  trig.tokens = split_ws(text);
  if (trig.tokens.empty()) throw RuleParseError("", "empty trigger");
  for (const auto& tok : trig.tokens) {
    if (tok == "*") ++trig.wildcard_count;
    else if (tok.find('*') != std::string::npos)
      throw RuleParseError("", "command token must be fully literal or '*': " + tok);
  }
  if (trig.tokens.front() == "*")
    throw RuleParseError("", "command trigger cannot start with a wildcard: " + text);
  return trig;
}

}  // namespace

Trigger Trigger::parse(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw RuleParseError("", "empty trigger");
  bool call_like = t.find('(') != std::string::npos || t.find('[') != std::string::npos;
  if (!call_like && t.find(' ') == std::string::npos && t.find('.') != std::string::npos)
    call_like = true;  // attribute chains like process.env.*
  return call_like ? parse_call_trigger(t) : parse_command_trigger(t);
}

bool SsoRule::applies_to_text() const {
  for (const auto& l : languages)
    if (l == "text") return true;
  return false;
}

bool SsoRule::applies_to_language(const std::string& lang) const {
  for (const auto& l : languages)
    if (l == lang) return true;
  return false;
}

const SsoRule* RuleBase::find(const std::string& id) const {
  for (const auto& r : rules)
    if (r.rule_id == id) return &r;
  return nullptr;
}

std::vector<std::string> RuleBase::covered_script_languages() const {
  std::set<std::string> langs;
  for (const auto& r : rules)
    for (const auto& l : r.languages)
      if (l != "text") langs.insert(l);
  return {langs.begin(), langs.end()};
}

namespace {

ArgCapture parse_capture(const std::string& spec, const std::string& rule_id) {
  // slot:W or slot:W.J
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw RuleParseError(rule_id, "capture must be slot:W or slot:W.J: " + spec);
  ArgCapture cap;
  cap.slot = trim(spec.substr(0, colon));
  std::string pos = trim(spec.substr(colon + 1));
  auto dot = pos.find('.');
  try {
    if (dot == std::string::npos) {
      cap.wildcard = std::stoi(pos);
    } else {
      cap.wildcard = std::stoi(pos.substr(0, dot));
      cap.sub = std::stoi(pos.substr(dot + 1));
    }
  } catch (const std::exception&) {
    throw RuleParseError(rule_id, "malformed capture position: " + spec);
  }
  if (cap.wildcard < 1 || cap.sub < 0)
    throw RuleParseError(rule_id, "capture positions are 1-based: " + spec);
  return cap;
}

void validate_rule(const SsoRule& rule, const Taxonomy& tax) {
  if (rule.sso_type != type_of(rule.category))
    throw RuleParseError(rule.rule_id, "type '" + rule.sso_type + "' does not match category " +
                                           to_string(rule.category));
  if (!tax.contains(rule.sso_type, rule.sso_subtype))
    throw RuleParseError(rule.rule_id,
                         "subtype not in taxonomy: " + rule.sso_type + "/" + rule.sso_subtype);
  if (rule.languages.empty()) throw RuleParseError(rule.rule_id, "missing languages");
  for (const auto& cap : rule.captures) {
    if (!category_has_slot(rule.category, cap.slot))
      throw RuleParseError(rule.rule_id, "slot '" + cap.slot + "' not in operand schema of " +
                                             std::string(to_string(rule.category)));
    if (cap.wildcard > rule.trigger.wildcard_count)
      throw RuleParseError(rule.rule_id, "capture refers to wildcard " +
                                             std::to_string(cap.wildcard) + " but trigger has " +
                                             std::to_string(rule.trigger.wildcard_count));
  }
}

}  // namespace

RuleBase parse_rule_base(const std::string& text, const Taxonomy& tax) {
  RuleBase rb;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::optional<SsoRule> current;
  std::set<std::string> ids;

  auto flush = [&]() {
    if (!current) return;
    validate_rule(*current, tax);
    if (!ids.insert(current->rule_id).second)
      throw RuleParseError(current->rule_id, "duplicate rule id");
    rb.rules.push_back(std::move(*current));
    current.reset();
  };

  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (!header_seen) {
      if (s != "sso-rules v1") throw RuleParseError("", "missing 'sso-rules v1' header");
      header_seen = true;
      continue;
    }
    if (s.front() == '[') {
      if (s.back() != ']' || s.rfind("[rule ", 0) != 0)
        throw RuleParseError("", "malformed section header: " + s);
      flush();
      current.emplace();
      current->rule_id = trim(s.substr(6, s.size() - 7));
      if (current->rule_id.empty()) throw RuleParseError("", "empty rule id");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw RuleParseError("", "expected key = value: " + s);
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!current) {
      if (key == "version") {
        rb.version = std::stoi(value);
        continue;
      }
      if (key == "held_out") {
        rb.held_out_path = value;
        continue;
      }
      throw RuleParseError("", "field outside a [rule] section: " + key);
    }
    try {
      if (key == "category") current->category = category_from_string(value);
      else if (key == "type") current->sso_type = value;
      else if (key == "subtype") current->sso_subtype = value;
      else if (key == "languages") {
        for (auto& l : split(value, ',')) {
          std::string lang = trim(l);
          if (!lang.empty()) current->languages.push_back(lang);
        }
      } else if (key == "trigger") {
        try {
          current->trigger = Trigger::parse(value);
        } catch (const RuleParseError& e) {
          throw RuleParseError(current->rule_id, e.what());
        }
      } else if (key == "captures") {
        for (auto& c : split(value, ',')) {
          std::string cs = trim(c);
          if (!cs.empty()) current->captures.push_back(parse_capture(cs, current->rule_id));
        }
      } else if (key == "context") {
        for (auto& c : split(value, ',')) {
          std::string cs = trim(c);
          if (cs.empty()) continue;
          if (cs.rfind("mentions:", 0) != 0)
            throw RuleParseError(current->rule_id, "context constraint must be mentions:<word>");
          current->context.push_back({trim(cs.substr(9))});
        }
      } else if (key == "origin") {
        if (value == "seed") current->origin = RuleOrigin::Seed;
        else if (value == "promoted") current->origin = RuleOrigin::Promoted;
        else throw RuleParseError(current->rule_id, "origin must be seed or promoted");
      } else if (key == "provenance") {
        for (auto& p : split(value, ',')) {
          std::string ps = trim(p);
          if (!ps.empty()) current->provenance.push_back(ps);
        }
      } else {
        throw RuleParseError(current->rule_id, "unknown field: " + key);
      }
    } catch (const std::invalid_argument& e) {
      throw RuleParseError(current->rule_id, e.what());
    }
  }
  if (!header_seen) throw RuleParseError("", "empty rule file");
  flush();
  return rb;
}

RuleBase load_rule_base(const std::string& path, const Taxonomy& tax) {
  return parse_rule_base(read_file(path), tax);
}

std::string rule_to_text(const SsoRule& rule) {
  std::string out;
  out += "[rule " + rule.rule_id + "]\n";
  out += "category = " + std::string(to_string(rule.category)) + "\n";
  out += "type = " + rule.sso_type + "\n";
  out += "subtype = " + rule.sso_subtype + "\n";
  out += "languages = " + join(rule.languages, ", ") + "\n";
  out += "trigger = " + rule.trigger.text + "\n";
  if (!rule.captures.empty()) {
    std::vector<std::string> caps;
    for (const auto& c : rule.captures) {
      std::string s = c.slot + ":" + std::to_string(c.wildcard);
      if (c.sub) s += "." + std::to_string(c.sub);
      caps.push_back(std::move(s));
    }
    out += "captures = " + join(caps, ", ") + "\n";
  }
  if (!rule.context.empty()) {
    std::vector<std::string> ctx;
    for (const auto& c : rule.context) ctx.push_back("mentions:" + c.needle);
    out += "context = " + join(ctx, ", ") + "\n";
  }
  out += std::string("origin = ") + (rule.origin == RuleOrigin::Seed ? "seed" : "promoted") + "\n";
  if (!rule.provenance.empty()) out += "provenance = " + join(rule.provenance, ", ") + "\n";
  return out;
}

std::string rule_base_to_text(const RuleBase& rb) {
  std::string out = "sso-rules v1\n";
  out += "version = " + std::to_string(rb.version) + "\n";
  if (!rb.held_out_path.empty()) out += "held_out = " + rb.held_out_path + "\n";
  for (const auto& r : rb.rules) {
    out += "\n";
    out += rule_to_text(r);
  }
  return out;
}

}  // namespace skillsentry
