#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "skillsentry/feedback.hpp"
#include "skillsentry/ingest.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/neural.hpp"
#include "skillsentry/operand_flow.hpp"
#include "skillsentry/reasoner.hpp"
#include "skillsentry/report.hpp"
#include "skillsentry/rules.hpp"
#include "skillsentry/sdg.hpp"

namespace skillsentry {

struct LlmMode {
  enum Kind { Off, Fixture, Http } kind = Off;
  std::string fixture_dir;
};

struct ScanConfig {
  Taxonomy taxonomy = Taxonomy::builtin();
  RuleBase rules;
  std::vector<Pattern> patterns;
  OperandLabeler labeler = OperandLabeler::builtin();
  std::set<std::string> label_vocab = default_label_vocab();
  NeuralConfig neural;
  ReasonerConfig reasoner;

  LlmMode llm;
  std::string llm_endpoint;
  std::string llm_model = "default";
  std::string llm_key;

  bool parallel = true;

  // Ablation switches (each stage independently removable).
  bool symbolic_extractor = true;
  bool neural_extractor = true;
  bool symbolic_reasoning = true;
  bool neural_reasoning = true;
};

std::unique_ptr<LlmBackend> make_backend(const ScanConfig& cfg);

struct ScanResult {
  ScanReport report;
  Verdict verdict;
  Sdg sdg;
  FactSet facts;
  std::vector<SsoRecord> merged_records;
  std::vector<SsoRecord> neural_records;  // feedback input
  std::vector<CandidatePattern> candidates;
};

/// The full pipeline over one loaded package: extraction, merge, operand and
/// flow resolution, SDG construction, reasoning, verdict.
ScanResult scan_package(const SkillPackage& pkg, const ScanConfig& cfg);

/// Loads and scans; EmptyPackage yields a benign-by-vacuity report.
ScanResult scan_path(const std::string& path, const ScanConfig& cfg);

struct BatchOptions {
  int jobs = 0;  // 0 = library default
  bool feedback = false;
  PromotionThresholds thresholds;
  std::vector<std::string> held_out_dirs;  // benign packages for validation
};

struct BatchRow {
  std::string package_dir;
  std::string package_id;
  std::string verdict;
  std::size_t findings = 0;
  std::int64_t duration_ms = 0;
  bool ok = false;
  std::string error;
};

struct BatchResult {
  std::vector<BatchRow> rows;
  std::vector<ScanResult> scans;  // aligned with rows (failed scans empty)
  RuleBase rules_after;
  std::vector<RuleCandidate> promotion_log;
  int promoted_count = 0;
};

/// Scans every package directory (OpenMP up to `jobs`), then optionally runs
/// the rule-promotion batch over the collected neural evidence.
BatchResult batch_scan(const std::vector<std::string>& package_dirs, const ScanConfig& cfg,
                       const BatchOptions& opts);

std::string summary_csv(const BatchResult& batch);
std::string summary_json(const BatchResult& batch);

}  // namespace skillsentry
