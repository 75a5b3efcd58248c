#include "skillsentry/record.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "skillsentry/util.hpp"

namespace skillsentry {

std::string compute_record_id(const SsoRecord& r) {
  std::string material = r.artifact + "|" + r.sso_type + "|" + r.sso_subtype + "|" +
                         std::to_string(r.span.start_line) + "-" + std::to_string(r.span.end_line) +
                         "|" + r.matched_text;
  return short_id('r', material);
}

namespace {
auto sort_key(const SsoRecord& r) {
  return std::tie(r.artifact, r.span.start_line, r.span.end_line, r.sso_type, r.sso_subtype,
                  r.provenance.tag, r.record_id);
}
}  // namespace

void sort_records(std::vector<SsoRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const SsoRecord& a, const SsoRecord& b) { return sort_key(a) < sort_key(b); });
}

std::vector<SsoRecord> merge_records(const std::vector<SsoRecord>& symbolic,
                                     const std::vector<SsoRecord>& neural) {
  using GroupKey = std::tuple<std::string, std::string, std::string>;
  std::map<GroupKey, std::vector<SsoRecord>> groups;
  for (const auto& r : symbolic) groups[{r.artifact, r.sso_type, r.sso_subtype}].push_back(r);
  for (const auto& r : neural) groups[{r.artifact, r.sso_type, r.sso_subtype}].push_back(r);

  std::vector<SsoRecord> out;
  for (auto& [key, recs] : groups) {
    // Total order: symbolic before neural on span ties so the symbolic side's
    // identity wins deterministically.
    std::sort(recs.begin(), recs.end(), [](const SsoRecord& a, const SsoRecord& b) {
      int a_kind = a.provenance.kind == Provenance::Symbolic ? 0 : 1;
      int b_kind = b.provenance.kind == Provenance::Symbolic ? 0 : 1;
      return std::tie(a.span.start_line, a.span.end_line, a_kind, a.provenance.tag, a.record_id) <
             std::tie(b.span.start_line, b.span.end_line, b_kind, b.provenance.tag, b.record_id);
    });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      SsoRecord merged = recs[i];
      std::size_t j = i + 1;
      while (j < recs.size() && recs[j].span.start_line <= merged.span.end_line) {
        const SsoRecord& nxt = recs[j];
        // Prefer the symbolic side's identity (matched text, tag).
        if (nxt.provenance.kind == Provenance::Symbolic &&
            merged.provenance.kind == Provenance::Neural) {
          merged.matched_text = nxt.matched_text;
          merged.provenance = nxt.provenance;
        }
        merged.span.start_line = std::min(merged.span.start_line, nxt.span.start_line);
        merged.span.end_line = std::max(merged.span.end_line, nxt.span.end_line);
        merged.confidence = std::max(merged.confidence, nxt.confidence);
        for (const auto& ref : nxt.operand_refs) {
          bool dup = false;
          for (const auto& have : merged.operand_refs)
            dup = dup || (have.slot == ref.slot && have.raw_expr == ref.raw_expr);
          if (!dup) merged.operand_refs.push_back(ref);
        }
        ++j;
      }
      merged.record_id = compute_record_id(merged);
      out.push_back(std::move(merged));
      i = j - 1;
    }
  }
  sort_records(out);
  return out;
}

}  // namespace skillsentry
