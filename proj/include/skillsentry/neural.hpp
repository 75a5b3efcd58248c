#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/record.hpp"
#include "skillsentry/taxonomy.hpp"

namespace skillsentry {

struct LlmRequest {
  std::string system;
  std::string user;
};

struct BackendUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The one capability the scanner needs from a model.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string model_tag() const = 0;
};

/// Deterministic canned-response backend: a directory of response files named
/// by the sha256 of the request's user text. Missing files yield the schema's
/// null response, keeping offline runs total.
class FixtureBackend : public LlmBackend {
 public:
  explicit FixtureBackend(std::string dir, std::string tag = "fixture");
  std::string complete(const LlmRequest& request) override;
  std::string model_tag() const override { return tag_; }

  /// Path a canned response for `user_text` must live at (used by tests and
  /// fixture authoring).
  std::string response_path(const std::string& user_text) const;

 private:
  std::string dir_;
  std::string tag_;
};

/// HTTP backend: POST {model, system, user} as JSON with a bearer token from
/// SKILLSENTRY_LLM_KEY; the raw response body is the model output.
class HttpBackend : public LlmBackend {
 public:
  HttpBackend(std::string endpoint, std::string model, std::string api_key, int timeout_sec = 60);
  std::string complete(const LlmRequest& request) override;
  std::string model_tag() const override { return model_; }

  /// Requests issued process-wide; the offline test harness asserts zero.
  static long request_count();

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  int timeout_sec_;
};

struct NeuralConfig {
  double confidence_floor = 0.6;
  int line_budget = 4000;    // max numbered lines per request
  int chunk_overlap = 20;    // lines shared by adjacent chunks
  int retry_budget = 2;      // re-asks after a malformed response
  std::string prompt_version = "v1";
};

struct EvidenceRequest {
  std::string artifact_kind;
  std::string numbered_text;  // line count equals the (chunk's) line count
  std::string package_id;
  std::string language;
  std::string rel_path;
  std::string taxonomy_text;
  std::string prompt_version;
  int first_line = 1;

  LlmRequest to_llm_request() const;
};

struct ArtifactTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The system prompt sent with every evidence-extraction request.
const std::string& evidence_system_prompt();

/// Single-request prompt builder; throws ArtifactTooLarge past the line
/// budget (callers then use build_prompts for chunked extraction).
EvidenceRequest build_prompt(const Artifact& artifact, const Taxonomy& taxonomy,
                             const std::string& package_id, const NeuralConfig& cfg = {});

/// Chunked variant: overlapping windows with globally preserved line numbers.
std::vector<EvidenceRequest> build_prompts(const Artifact& artifact, const Taxonomy& taxonomy,
                                           const std::string& package_id,
                                           const NeuralConfig& cfg = {});

struct ValidationStats {
  int accepted = 0;
  std::map<std::string, int> rejected;  // reason -> count
};

/// Validates one raw model response against the artifact and taxonomy;
/// accepted records carry neural provenance. Throws MalformedResponse when
/// the body is not the expected JSON shape.
std::vector<SsoRecord> validate_response(const std::string& body, const Artifact& artifact,
                                         const Taxonomy& taxonomy, const std::string& model_tag,
                                         const NeuralConfig& cfg, ValidationStats* stats = nullptr);

struct NeuralExtraction {
  std::vector<SsoRecord> records;
  ValidationStats stats;
  std::vector<std::string> diagnostics;
  bool backend_unavailable = false;
};

/// Runs evidence extraction over prompts, documentation, configs, manifests,
/// and script artifacts the symbolic pass left uncovered (zero records).
NeuralExtraction extract_neural(const SkillPackage& pkg, LlmBackend& backend,
                                const Taxonomy& taxonomy,
                                const std::vector<SsoRecord>& symbolic_records,
                                const NeuralConfig& cfg = {});

}  // namespace skillsentry
