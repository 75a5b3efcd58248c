#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skillsentry/reasoner.hpp"
#include "skillsentry/record.hpp"

namespace skillsentry {

extern const char* const kToolVersion;

struct EvidenceSpanRef {
  std::string artifact;
  int start_line = 0;
  int end_line = 0;
  std::string excerpt;
};

struct ReportFinding {
  std::string kind;  // symbolic | neural
  std::string pattern_id;
  std::string behavior_class;
  int severity = 0;
  double confidence = 1.0;
  std::string assessment;  // neural only
  std::map<std::string, std::string> bindings;
  std::vector<std::string> evidence_nodes;
  std::vector<std::string> evidence_edges;  // "from -type-> to"
  std::vector<EvidenceSpanRef> evidence_spans;
  std::string explanation;
};

struct ScanReport {
  std::string tool_version = kToolVersion;
  int rule_base_version = 1;
  std::string package_id;
  std::string package_root;
  std::string verdict = "benign";
  std::vector<std::string> degraded_flags;
  std::int64_t duration_ms = 0;

  int artifact_count = 0;
  int max_path_depth = 0;
  std::uint64_t total_bytes = 0;
  std::map<std::string, int> artifacts_by_kind;

  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
  std::size_t sso_nodes = 0;
  std::size_t operand_nodes = 0;
  std::size_t value_nodes = 0;

  std::vector<SsoRecord> ssos;
  std::vector<ReportFinding> findings;

  std::string to_json_text(int indent = 2) const;
  static ScanReport from_json_text(const std::string& text);
  std::string to_human_text() const;
};

}  // namespace skillsentry
