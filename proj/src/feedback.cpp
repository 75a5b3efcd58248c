#include "skillsentry/feedback.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "skillsentry/lexer.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/operand_flow.hpp"
#include "skillsentry/util.hpp"

namespace skillsentry {

namespace {

bool call_shaped(const std::string& text) {
  // identifier chain with at least one call: name(...)[.name(...)]*
  std::size_t i = 0;
  bool saw_call = false;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i >= text.size() || !is_ident_char(text[i])) return false;
  while (i < text.size()) {
    if (!is_ident_char(text[i])) return false;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    if (i < text.size() && text[i] == '(') {
      std::size_t after = scan_balanced(text, i);
      if (after == std::string::npos) return false;
      saw_call = true;
      i = after;
    }
    if (i >= text.size() || std::isspace(static_cast<unsigned char>(text[i]))) break;
    if (text[i] != '.') return false;
    ++i;
  }
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  return saw_call && i >= text.size();
}

std::string normalize_call(const std::string& text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '(') {
      std::size_t after = scan_balanced(text, i);
      out += "(*)";
      i = after;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(c);
      ++i;
    } else {
      ++i;
    }
  }
  return out;
}

bool wildcardable_token(const std::string& tok) {
  if (tok.find("://") != std::string::npos) return true;
  if (tok.size() >= 2 && (tok.front() == '"' || tok.front() == '\'')) return true;
  for (char c : tok)
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
  if (tok.find('/') != std::string::npos || tok.front() == '~') return true;
  return false;
}

std::string normalize_command(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& tok : split_ws(text)) {
    if (wildcardable_token(tok)) {
      if (out.empty() || out.back() != "*") out.push_back("*");
    } else {
      out.push_back(tok);
    }
  }
  return join(out, " ");
}

}  // namespace

std::string normalize_trigger_text(const std::string& matched_text) {
  std::string t = trim(matched_text);
  std::string flat;
  for (char c : t) flat.push_back(c == '\n' ? ' ' : c);
  if (call_shaped(flat)) return normalize_call(flat);
  return normalize_command(flat);
}

std::vector<EvidenceCluster> cluster_evidence(
    const std::vector<std::pair<std::string, SsoRecord>>& records) {
  std::map<std::tuple<std::string, std::string, std::string>, EvidenceCluster> clusters;
  for (const auto& [pkg_id, rec] : records) {
    if (rec.provenance.kind != Provenance::Neural) continue;
    std::string norm = normalize_trigger_text(rec.matched_text);
    auto key = std::make_tuple(rec.sso_type, rec.sso_subtype, norm);
    auto& c = clusters[key];
    if (c.members.empty()) {
      c.sso_type = rec.sso_type;
      c.sso_subtype = rec.sso_subtype;
      c.normalized_trigger = norm;
    }
    c.members.emplace_back(pkg_id, rec.record_id);
  }
  std::vector<EvidenceCluster> out;
  for (auto& [_, c] : clusters) {
    std::set<std::string> pkgs;
    for (const auto& [pkg_id, _rid] : c.members) pkgs.insert(pkg_id);
    c.support_packages = static_cast<int>(pkgs.size());
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<RuleCandidate> synthesize_rule(const EvidenceCluster& cluster,
                                             const PromotionThresholds& thresholds,
                                             const std::string& language_hint) {
  if (static_cast<int>(cluster.members.size()) < thresholds.min_members) return std::nullopt;
  if (cluster.support_packages < thresholds.min_packages) return std::nullopt;

  Trigger trig;
  try {
    trig = Trigger::parse(cluster.normalized_trigger);
  } catch (const RuleParseError&) {
    return std::nullopt;
  }
  // Reject unanchorable triggers (nothing but wildcards).
  bool anchored = false;
  if (trig.style == Trigger::Command) {
    for (const auto& tok : trig.tokens) anchored = anchored || tok != "*";
  } else {
    anchored = !trig.steps.empty() && trig.steps.front().name != "*";
  }
  if (!anchored || trig.wildcard_count == 0) return std::nullopt;

  RuleCandidate cand;
  SsoRule& rule = cand.rule;
  rule.category = category_from_type(cluster.sso_type);
  rule.sso_type = cluster.sso_type;
  rule.sso_subtype = cluster.sso_subtype;
  rule.trigger = trig;
  rule.origin = RuleOrigin::Promoted;
  rule.rule_id = "promoted." + sha256_hex(cluster.sso_type + "|" + cluster.sso_subtype + "|" +
                                          cluster.normalized_trigger)
                                   .substr(0, 12);
  rule.languages = trig.style == Trigger::Command
                       ? std::vector<std::string>{"shell", "text"}
                       : std::vector<std::string>{language_hint};

  // Wildcards map to the category's operand slots in declaration order;
  // extra wildcards stay uncaptured.
  const auto& slots = operand_slots(rule.category);
  for (std::size_t i = 0; i < slots.size() && i < static_cast<std::size_t>(trig.wildcard_count);
       ++i) {
    ArgCapture cap;
    cap.slot = slots[i];
    cap.wildcard = static_cast<int>(i + 1);
    rule.captures.push_back(cap);
  }

  // Context: the wrapper's root name must be mentioned in the artifact.
  if (trig.style == Trigger::Call && !trig.steps.empty())
    rule.context.push_back({trig.steps.front().name});

  for (const auto& [_pkg, rid] : cluster.members) rule.provenance.push_back(rid);
  cand.members = cluster.members;
  return cand;
}

PromotionResult validate_and_promote(
    RuleCandidate candidate, const std::vector<SkillPackage>& held_out, RuleBase rb,
    const std::vector<std::pair<const SkillPackage*, const SsoRecord*>>& sources) {
  // Duplicate of an existing rule: dropped, version unchanged.
  for (const auto& existing : rb.rules) {
    if (existing.trigger.text == candidate.rule.trigger.text &&
        existing.sso_type == candidate.rule.sso_type &&
        existing.sso_subtype == candidate.rule.sso_subtype) {
      candidate.status = "duplicate";
      return {std::move(rb), std::move(candidate)};
    }
  }

  for (const auto& pkg : held_out)
    for (const auto& a : pkg.artifacts)
      candidate.fp_on_held_out +=
          static_cast<int>(match_rule_on_artifact(a, candidate.rule).size());
  if (candidate.fp_on_held_out > 0) {
    candidate.status = "rejected";
    return {std::move(rb), std::move(candidate)};
  }

  // The promoted rule must re-find every source evidence span.
  bool all_found = true;
  std::set<std::string> matched_pkgs;
  for (const auto& [pkg, rec] : sources) {
    const Artifact* a = pkg->find(rec->artifact);
    bool found = false;
    if (a) {
      for (const auto& m : match_rule_on_artifact(*a, candidate.rule))
        found = found || (m.span.start_line <= rec->span.end_line &&
                          m.span.end_line >= rec->span.start_line);
    }
    if (found) matched_pkgs.insert(pkg->id);
    all_found = all_found && found;
  }
  candidate.tp_on_sources = static_cast<int>(matched_pkgs.size());
  if (!all_found) {
    candidate.status = "rejected";
    return {std::move(rb), std::move(candidate)};
  }

  candidate.status = "accepted";
  rb.rules.push_back(candidate.rule);
  rb.version += 1;
  return {std::move(rb), std::move(candidate)};
}

std::string promoted_rules_text(const RuleBase& rb) {
  std::string out = "sso-rules v1\n";
  out += "version = " + std::to_string(rb.version) + "\n";
  for (const auto& r : rb.rules) {
    if (r.origin != RuleOrigin::Promoted) continue;
    out += "\n# promoted from " + std::to_string(r.provenance.size()) + " evidence record(s)\n";
    out += rule_to_text(r);
  }
  return out;
}

}  // namespace skillsentry
