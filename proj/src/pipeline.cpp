#include "skillsentry/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skillsentry/util.hpp"

namespace skillsentry {

using nlohmann::json;

std::unique_ptr<LlmBackend> make_backend(const ScanConfig& cfg) {
  switch (cfg.llm.kind) {
    case LlmMode::Off: return nullptr;
    case LlmMode::Fixture: return std::make_unique<FixtureBackend>(cfg.llm.fixture_dir);
    case LlmMode::Http: {
      std::string key = cfg.llm_key;
      if (key.empty()) {
        const char* env = std::getenv("SKILLSENTRY_LLM_KEY");
        if (env) key = env;
      }
      return std::make_unique<HttpBackend>(cfg.llm_endpoint, cfg.llm_model, key);
    }
  }
  return nullptr;
}

namespace {

int path_depth(const std::string& rel_path) {
  return 1 + static_cast<int>(std::count(rel_path.begin(), rel_path.end(), '/'));
}

ReportFinding finding_to_report(const Finding& f, const Sdg& g) {
  ReportFinding rf;
  rf.kind = f.neural ? "neural" : "symbolic";
  rf.pattern_id = f.pattern_id;
  rf.behavior_class = f.behavior_class;
  rf.severity = f.severity;
  rf.confidence = f.confidence;
  rf.assessment = f.neural_assessment;
  rf.bindings = f.bindings;
  rf.evidence_nodes.assign(f.evidence_nodes.begin(), f.evidence_nodes.end());
  for (const auto& e : f.evidence_edges)
    rf.evidence_edges.push_back(e.from + " -" + to_string(e.type) + "-> " + e.to);
  for (const auto& n : f.evidence_nodes) {
    auto it = g.records.find(n);
    if (it == g.records.end()) continue;
    const SsoRecord& r = it->second;
    rf.evidence_spans.push_back({r.artifact, r.span.start_line, r.span.end_line, r.matched_text});
  }
  rf.explanation = f.explanation;
  return rf;
}

}  // namespace

ScanResult scan_package(const SkillPackage& pkg, const ScanConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ScanResult result;
  std::vector<std::string> flags;

  // 1. Symbolic extraction.
  std::vector<SsoRecord> symbolic;
  if (cfg.symbolic_extractor) symbolic = match_rules(pkg, cfg.rules, {cfg.parallel});

  // 2. Neural extraction.
  std::unique_ptr<LlmBackend> backend = make_backend(cfg);
  if (cfg.neural_extractor && backend) {
    NeuralExtraction extraction =
        extract_neural(pkg, *backend, cfg.taxonomy, symbolic, cfg.neural);
    result.neural_records = extraction.records;
    if (extraction.backend_unavailable) flags.push_back("llm-unavailable");
  } else if (cfg.llm.kind != LlmMode::Off && !backend) {
    flags.push_back("llm-unavailable");
  }

  // 3. Merge.
  result.merged_records = merge_records(symbolic, result.neural_records);

  // 4. Value flow + operand resolution.
  FlowGraph flow = track_flow(pkg);
  for (const auto& a : flow.degraded_artifacts) flags.push_back("parse-degraded:" + a);
  OperandResolution res = resolve_operands(result.merged_records, pkg, flow, cfg.labeler);

  // 5. LLM-assisted operand inference (no-op offline).
  if (backend)
    infer_operands(res.operands, pkg, flow, *backend, cfg.neural.confidence_floor,
                   cfg.label_vocab);

  // 6. SDG over values that participate in the graph.
  std::set<std::string> used_values;
  for (const auto& [_, vid] : res.operand_values) used_values.insert(vid);
  for (const auto& f : flow.facts) {
    used_values.insert(f.from);
    used_values.insert(f.to);
  }
  SdgInput input;
  input.pkg = &pkg;
  input.records = result.merged_records;
  input.operands = res.operands;
  input.bindings = res.bindings;
  for (const auto& v : flow.values)
    if (used_values.count(v.value_id)) input.values.push_back(v);
  input.operand_values = res.operand_values;
  input.flows = flow.facts;
  result.sdg = build_sdg(input);
  result.facts = export_facts(result.sdg, cfg.parallel);

  // 7. Reasoning.
  std::vector<Finding> symbolic_findings;
  if (cfg.symbolic_reasoning) symbolic_findings = eval_patterns(result.facts, cfg.patterns);
  std::vector<Finding> neural_findings;
  if (cfg.neural_reasoning && backend) {
    ReasoningOutcome outcome =
        neural_reason(result.sdg, result.facts, symbolic_findings, *backend, cfg.reasoner);
    neural_findings = outcome.findings;
    result.candidates = outcome.candidates;
    if (outcome.backend_unavailable) flags.push_back("llm-unavailable");
  }

  // 8. Verdict + report.
  std::sort(flags.begin(), flags.end());
  flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
  result.verdict = decide(symbolic_findings, neural_findings, flags, cfg.reasoner);

  ScanReport& rep = result.report;
  rep.rule_base_version = cfg.rules.version;
  rep.package_id = pkg.id;
  rep.package_root = pkg.root;
  rep.verdict = to_string(result.verdict.label);
  rep.degraded_flags = result.verdict.degraded_flags;
  rep.artifact_count = static_cast<int>(pkg.artifacts.size());
  for (const auto& a : pkg.artifacts) {
    rep.max_path_depth = std::max(rep.max_path_depth, path_depth(a.rel_path));
    rep.total_bytes += a.byte_len;
    rep.artifacts_by_kind[to_string(a.kind)] += 1;
  }
  rep.graph_nodes = result.sdg.node_count();
  rep.graph_edges = result.sdg.edge_count();
  rep.sso_nodes = result.sdg.records.size();
  rep.operand_nodes = result.sdg.operands.size();
  rep.value_nodes = result.sdg.values.size();
  rep.ssos = result.merged_records;
  for (const auto& f : result.verdict.findings)
    rep.findings.push_back(finding_to_report(f, result.sdg));

  auto t1 = std::chrono::steady_clock::now();
  rep.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  return result;
}

ScanResult scan_path(const std::string& path, const ScanConfig& cfg) {
  try {
    SkillPackage pkg = load_package(path);
    return scan_package(pkg, cfg);
  } catch (const EmptyPackage&) {
    ScanResult result;
    result.report.package_root = path;
    result.report.verdict = "benign";
    result.report.degraded_flags.push_back("empty-package");
    result.verdict.label = VerdictLabel::Benign;
    result.verdict.degraded_flags.push_back("empty-package");
    return result;
  }
}

BatchResult batch_scan(const std::vector<std::string>& package_dirs, const ScanConfig& cfg,
                       const BatchOptions& opts) {
  BatchResult batch;
  batch.rows.resize(package_dirs.size());
  batch.scans.resize(package_dirs.size());
  std::vector<SkillPackage> packages(package_dirs.size());

  const int n = static_cast<int>(package_dirs.size());
#ifdef _OPENMP
  int jobs = opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (int i = 0; i < n; ++i) {
    auto idx = static_cast<std::size_t>(i);
    BatchRow& row = batch.rows[idx];
    row.package_dir = package_dirs[idx];
    try {
      packages[idx] = load_package(package_dirs[idx]);
      // Inner stages stay serial when the batch level is already parallel.
      ScanConfig inner = cfg;
      inner.parallel = false;
      batch.scans[idx] = scan_package(packages[idx], inner);
      row.package_id = batch.scans[idx].report.package_id;
      row.verdict = batch.scans[idx].report.verdict;
      row.findings = batch.scans[idx].report.findings.size();
      row.duration_ms = batch.scans[idx].report.duration_ms;
      row.ok = true;
    } catch (const EmptyPackage& e) {
      row.verdict = "benign";
      row.ok = true;
      row.error = e.what();
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  }

  batch.rules_after = cfg.rules;
  if (opts.feedback) {
    std::vector<std::pair<std::string, SsoRecord>> stream;
    for (std::size_t i = 0; i < packages.size(); ++i)
      for (const auto& rec : batch.scans[i].neural_records)
        stream.emplace_back(packages[i].id, rec);

    std::vector<SkillPackage> held_out;
    for (const auto& dir : opts.held_out_dirs) {
      try {
        held_out.push_back(load_package(dir));
      } catch (const std::exception&) {
        // unusable held-out entries are skipped
      }
    }

    for (const auto& cluster : cluster_evidence(stream)) {
      // Language hint from the first member's artifact.
      std::string lang = "python";
      std::vector<std::pair<const SkillPackage*, const SsoRecord*>> sources;
      for (const auto& [pkg_id, rid] : cluster.members) {
        for (std::size_t i = 0; i < packages.size(); ++i) {
          if (packages[i].id != pkg_id) continue;
          for (const auto& rec : batch.scans[i].neural_records) {
            if (rec.record_id != rid) continue;
            sources.emplace_back(&packages[i], &rec);
            if (const Artifact* a = packages[i].find(rec.artifact); a && a->language != "unknown")
              lang = a->language;
          }
        }
      }
      auto cand = synthesize_rule(cluster, opts.thresholds, lang);
      if (!cand) continue;
      PromotionResult pr =
          validate_and_promote(std::move(*cand), held_out, batch.rules_after, sources);
      batch.rules_after = std::move(pr.rule_base);
      if (pr.candidate.status == "accepted") batch.promoted_count += 1;
      batch.promotion_log.push_back(std::move(pr.candidate));
    }
  }
  return batch;
}

std::string summary_csv(const BatchResult& batch) {
  std::string out = "package,package_id,verdict,findings,duration_ms,status\n";
  for (const auto& r : batch.rows) {
    out += r.package_dir + "," + r.package_id + "," + r.verdict + "," +
           std::to_string(r.findings) + "," + std::to_string(r.duration_ms) + "," +
           (r.ok ? "ok" : "error") + "\n";
  }
  return out;
}

std::string summary_json(const BatchResult& batch) {
  json rows = json::array();
  for (const auto& r : batch.rows)
    rows.push_back({{"package", r.package_dir},
                    {"package_id", r.package_id},
                    {"verdict", r.verdict},
                    {"findings", r.findings},
                    {"duration_ms", r.duration_ms},
                    {"status", r.ok ? "ok" : "error"},
                    {"error", r.error}});
  return json{{"summary", rows}, {"promoted_rules", batch.promoted_count}}.dump(2) + "\n";
}

}  // namespace skillsentry
