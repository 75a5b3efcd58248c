#include "skillsentry/report.hpp"

#include <nlohmann/json.hpp>

#include "skillsentry/util.hpp"

namespace skillsentry {

using nlohmann::json;

const char* const kToolVersion = "0.1.0";

namespace {

json span_to_json(const EvidenceSpanRef& s) {
  return {{"artifact", s.artifact},
          {"start_line", s.start_line},
          {"end_line", s.end_line},
          {"excerpt", s.excerpt}};
}

EvidenceSpanRef span_from_json(const json& j) {
  EvidenceSpanRef s;
  s.artifact = j.value("artifact", "");
  s.start_line = j.value("start_line", 0);
  s.end_line = j.value("end_line", 0);
  s.excerpt = j.value("excerpt", "");
  return s;
}

json record_to_json(const SsoRecord& r) {
  return {{"record_id", r.record_id},
          {"artifact", r.artifact},
          {"type", r.sso_type},
          {"subtype", r.sso_subtype},
          {"confidence", r.confidence},
          {"start_line", r.span.start_line},
          {"end_line", r.span.end_line},
          {"matched_text", r.matched_text},
          {"provenance", r.provenance.kind == Provenance::Symbolic ? "symbolic" : "neural"},
          {"provenance_tag", r.provenance.tag}};
}

SsoRecord record_from_json(const json& j) {
  SsoRecord r;
  r.record_id = j.value("record_id", "");
  r.artifact = j.value("artifact", "");
  r.sso_type = j.value("type", "");
  r.sso_subtype = j.value("subtype", "");
  r.confidence = j.value("confidence", 1.0);
  r.span.start_line = j.value("start_line", 1);
  r.span.end_line = j.value("end_line", 1);
  r.matched_text = j.value("matched_text", "");
  r.provenance.kind =
      j.value("provenance", "symbolic") == "neural" ? Provenance::Neural : Provenance::Symbolic;
  r.provenance.tag = j.value("provenance_tag", "");
  return r;
}

}  // namespace

std::string ScanReport::to_json_text(int indent) const {
  json findings_json = json::array();
  for (const auto& f : findings) {
    json spans = json::array();
    for (const auto& s : f.evidence_spans) spans.push_back(span_to_json(s));
    findings_json.push_back({{"kind", f.kind},
                             {"pattern_id", f.pattern_id},
                             {"behavior_class", f.behavior_class},
                             {"severity", f.severity},
                             {"confidence", f.confidence},
                             {"assessment", f.assessment},
                             {"bindings", f.bindings},
                             {"evidence_nodes", f.evidence_nodes},
                             {"evidence_edges", f.evidence_edges},
                             {"evidence_spans", spans},
                             {"explanation", f.explanation}});
  }
  json ssos_json = json::array();
  for (const auto& r : ssos) ssos_json.push_back(record_to_json(r));

  json doc = {{"format", "skillsentry-report v1"},
              {"tool_version", tool_version},
              {"rule_base_version", rule_base_version},
              {"package_id", package_id},
              {"package_root", package_root},
              {"verdict", verdict},
              {"degraded_flags", degraded_flags},
              {"duration_ms", duration_ms},
              {"artifact_stats",
               {{"count", artifact_count},
                {"max_path_depth", max_path_depth},
                {"total_bytes", total_bytes},
                {"by_kind", artifacts_by_kind}}},
              {"graph_stats",
               {{"nodes", graph_nodes},
                {"edges", graph_edges},
                {"sso_nodes", sso_nodes},
                {"operand_nodes", operand_nodes},
                {"value_nodes", value_nodes}}},
              {"ssos", ssos_json},
              {"findings", findings_json}};
  return doc.dump(indent) + "\n";
}

ScanReport ScanReport::from_json_text(const std::string& text) {
  json doc = json::parse(text);
  ScanReport r;
  r.tool_version = doc.value("tool_version", "");
  r.rule_base_version = doc.value("rule_base_version", 1);
  r.package_id = doc.value("package_id", "");
  r.package_root = doc.value("package_root", "");
  r.verdict = doc.value("verdict", "benign");
  r.degraded_flags = doc.value("degraded_flags", std::vector<std::string>{});
  r.duration_ms = doc.value("duration_ms", 0);
  if (doc.contains("artifact_stats")) {
    const auto& a = doc["artifact_stats"];
    r.artifact_count = a.value("count", 0);
    r.max_path_depth = a.value("max_path_depth", 0);
    r.total_bytes = a.value("total_bytes", 0ull);
    if (a.contains("by_kind"))
      r.artifacts_by_kind = a["by_kind"].get<std::map<std::string, int>>();
  }
  if (doc.contains("graph_stats")) {
    const auto& g = doc["graph_stats"];
    r.graph_nodes = g.value("nodes", 0u);
    r.graph_edges = g.value("edges", 0u);
    r.sso_nodes = g.value("sso_nodes", 0u);
    r.operand_nodes = g.value("operand_nodes", 0u);
    r.value_nodes = g.value("value_nodes", 0u);
  }
  for (const auto& j : doc.value("ssos", json::array())) r.ssos.push_back(record_from_json(j));
  for (const auto& j : doc.value("findings", json::array())) {
    ReportFinding f;
    f.kind = j.value("kind", "symbolic");
    f.pattern_id = j.value("pattern_id", "");
    f.behavior_class = j.value("behavior_class", "");
    f.severity = j.value("severity", 0);
    f.confidence = j.value("confidence", 1.0);
    f.assessment = j.value("assessment", "");
    if (j.contains("bindings")) f.bindings = j["bindings"].get<std::map<std::string, std::string>>();
    f.evidence_nodes = j.value("evidence_nodes", std::vector<std::string>{});
    f.evidence_edges = j.value("evidence_edges", std::vector<std::string>{});
    for (const auto& s : j.value("evidence_spans", json::array()))
      f.evidence_spans.push_back(span_from_json(s));
    f.explanation = j.value("explanation", "");
    r.findings.push_back(std::move(f));
  }
  return r;
}

std::string ScanReport::to_human_text() const {
  std::string out;
  out += "package " + package_id.substr(0, 16) + "  (" + package_root + ")\n";
  out += "verdict: " + verdict + "\n";
  if (!degraded_flags.empty()) out += "degraded: " + join(degraded_flags, ", ") + "\n";
  out += "artifacts: " + std::to_string(artifact_count) +
         "  max path depth: " + std::to_string(max_path_depth) +
         "  bytes: " + std::to_string(total_bytes) + "\n";
  out += "graph: " + std::to_string(graph_nodes) + " nodes, " + std::to_string(graph_edges) +
         " edges (" + std::to_string(sso_nodes) + " SSO, " + std::to_string(operand_nodes) +
         " operand, " + std::to_string(value_nodes) + " value)\n";
  out += "ssos: " + std::to_string(ssos.size()) + "\n";
  for (const auto& r : ssos) {
    std::string text = r.matched_text;
    for (char& c : text)
      if (c == '\n') c = ' ';
    if (text.size() > 100) text = text.substr(0, 97) + "...";
    out += "  [" + std::string(r.provenance.kind == Provenance::Symbolic ? "S" : "N") + "] " +
           r.sso_type + "/" + r.sso_subtype + " " + r.artifact + ":" +
           std::to_string(r.span.start_line) + "-" + std::to_string(r.span.end_line) + "  " + text +
           "\n";
  }
  out += "findings: " + std::to_string(findings.size()) + "\n";
  for (const auto& f : findings) {
    out += "  " + f.kind + " " + f.behavior_class + " (severity " + std::to_string(f.severity) +
           ", confidence " + std::to_string(f.confidence).substr(0, 4) + ") via " + f.pattern_id +
           "\n";
    for (const auto& s : f.evidence_spans) {
      std::string excerpt = s.excerpt;
      for (char& c : excerpt)
        if (c == '\n') c = ' ';
      if (excerpt.size() > 80) excerpt = excerpt.substr(0, 77) + "...";
      out += "    " + s.artifact + ":" + std::to_string(s.start_line) + "-" +
             std::to_string(s.end_line) + "  " + excerpt + "\n";
    }
    out += "    " + f.explanation + "\n";
  }
  out += "duration_ms: " + std::to_string(duration_ms) + "\n";
  return out;
}

}  // namespace skillsentry
