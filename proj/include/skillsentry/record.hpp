#pragma once

#include <string>
#include <vector>

namespace skillsentry {

struct Span {
  int start_line = 1;
  int end_line = 1;
};

struct OperandRef {
  std::string slot;
  std::string raw_expr;
  Span span;
};

struct Provenance {
  enum Kind { Symbolic, Neural } kind = Symbolic;
  std::string tag;  // rule id (symbolic) or model tag (neural)
};

/// A normalized security-sensitive operation extracted from one artifact.
struct SsoRecord {
  std::string record_id;
  std::string artifact;  // package-relative path
  std::string sso_type;
  std::string sso_subtype;
  double confidence = 1.0;  // symbolic provenance implies 1.0
  Span span;
  std::string matched_text;
  std::vector<OperandRef> operand_refs;
  Provenance provenance;
};

std::string compute_record_id(const SsoRecord& r);

/// Canonical record order: (artifact, start_line, end_line, type, subtype,
/// provenance tag).
void sort_records(std::vector<SsoRecord>& records);

/// Merges records with identical (artifact, type, subtype) and overlapping
/// spans: symbolic provenance wins, operand refs are unioned, confidence is
/// the maximum. Output in canonical order.
std::vector<SsoRecord> merge_records(const std::vector<SsoRecord>& symbolic,
                                     const std::vector<SsoRecord>& neural);

}  // namespace skillsentry
