#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/record.hpp"
#include "skillsentry/rules.hpp"

namespace skillsentry {

/// Recurring neural evidence grouped by (type, subtype, normalized trigger).
struct EvidenceCluster {
  std::string sso_type;
  std::string sso_subtype;
  std::string normalized_trigger;
  std::vector<std::pair<std::string, std::string>> members;  // (package id, record id)
  int support_packages = 0;
};

struct PromotionThresholds {
  int min_members = 3;
  int min_packages = 2;
};

struct RuleCandidate {
  SsoRule rule;  // origin = promoted, provenance filled from members
  std::vector<std::pair<std::string, std::string>> members;
  int fp_on_held_out = 0;
  int tp_on_sources = 0;
  std::string status = "pending";  // pending | accepted | rejected | duplicate
};

/// Wildcards literals and argument expressions while keeping the callee
/// chain (call-shaped text) or anchor tokens (command-shaped text).
std::string normalize_trigger_text(const std::string& matched_text);

/// Groups neural records by their normalization key.
std::vector<EvidenceCluster> cluster_evidence(
    const std::vector<std::pair<std::string, SsoRecord>>& records);

/// Drafts a promoted rule from a cluster at or above the thresholds.
/// Degenerate triggers (no literal anchor) yield no candidate.
std::optional<RuleCandidate> synthesize_rule(const EvidenceCluster& cluster,
                                             const PromotionThresholds& thresholds = {},
                                             const std::string& language_hint = "python");

struct PromotionResult {
  RuleBase rule_base;        // possibly extended, version bumped on change
  RuleCandidate candidate;   // with validation counters and final status
};

/// Validates a candidate on the held-out corpus (any hit rejects) and
/// re-finds every source evidence span before appending it to the rule base.
PromotionResult validate_and_promote(
    RuleCandidate candidate, const std::vector<SkillPackage>& held_out, RuleBase rb,
    const std::vector<std::pair<const SkillPackage*, const SsoRecord*>>& sources);

/// Renders promoted rules in the seed-rule format with provenance comments.
std::string promoted_rules_text(const RuleBase& rb);

}  // namespace skillsentry
