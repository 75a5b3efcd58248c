#pragma once

#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/record.hpp"
#include "skillsentry/rules.hpp"

namespace skillsentry {

struct MatchOptions {
  bool parallel = true;  // OpenMP across artifacts; output is order-canonical either way
};

/// Matches every applicable rule against every artifact. Non-overlapping per
/// rule (leftmost scan), overlaps across rules allowed. Deterministic output
/// ordered by (artifact, span, type, subtype, rule).
std::vector<SsoRecord> match_rules(const SkillPackage& pkg, const RuleBase& rb,
                                   const MatchOptions& opts = {});

/// Serial reference implementation; kept for testing and benchmarking
/// against the parallel path.
std::vector<SsoRecord> match_rules_serial(const SkillPackage& pkg, const RuleBase& rb);

/// All records one rule produces on one artifact (used by rule promotion to
/// re-find source evidence).
std::vector<SsoRecord> match_rule_on_artifact(const Artifact& artifact, const SsoRule& rule);

}  // namespace skillsentry
