#include "skillsentry/neural.hpp"

#include <atomic>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "skillsentry/util.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace skillsentry {

using nlohmann::json;

// --- Backends ---------------------------------------------------------------

FixtureBackend::FixtureBackend(std::string dir, std::string tag)
    : dir_(std::move(dir)), tag_(std::move(tag)) {}

std::string FixtureBackend::response_path(const std::string& user_text) const {
  return dir_ + "/" + sha256_hex(user_text) + ".json";
}

std::string FixtureBackend::complete(const LlmRequest& request) {
  std::string path = response_path(request.user);
  if (!std::filesystem::exists(path)) return R"({"records": []})";
  return read_file(path);
}

namespace {
std::atomic<long> g_http_requests{0};
}

HttpBackend::HttpBackend(std::string endpoint, std::string model, std::string api_key,
                         int timeout_sec)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_sec_(timeout_sec) {}

long HttpBackend::request_count() { return g_http_requests.load(); }

std::string HttpBackend::complete(const LlmRequest& request) {
  // endpoint_ = scheme://host[:port]/path
  auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw BackendUnavailable("bad endpoint: " + endpoint_);
  auto path_start = endpoint_.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? endpoint_ : endpoint_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  json body = {{"model", model_}, {"system", request.system}, {"user", request.user}};
  httplib::Client cli(base);
  cli.set_connection_timeout(timeout_sec_);
  cli.set_read_timeout(timeout_sec_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  ++g_http_requests;
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw BackendUnavailable("no response from " + endpoint_);
  if (res->status != 200)
    throw BackendUnavailable("backend returned status " + std::to_string(res->status));
  return res->body;
}

// --- Prompting ---------------------------------------------------------------

const std::string& evidence_system_prompt() {
  static const std::string prompt =
      "You are extracting evidence facts, not verdicts.\n"
      "\n"
      "# TASK:\n"
      "Read the artifact and extract only grounded sensitive-operation evidence.\n"
      "Map each finding to the sensitive operation taxonomy using type and subtype.\n"
      "Do not output benign metadata, generic capability, or mismatched intent.\n"
      "\n"
      "# INPUT FORMAT:\n"
      "1. Artifact type: {code / markdown / yaml / json / ...}\n"
      "2. Artifact text with line numbers\n"
      "3. Optional context: {package, language, file path}\n"
      "\n"
      "# OUTPUT FORMAT:\n"
      "{\"records\": [\n"
      "  {\n"
      "    \"type\": \"...\",\n"
      "    \"subtype\": \"...\",\n"
      "    \"confidence\": 0.0,\n"
      "    \"start_line\": 0,\n"
      "    \"end_line\": 0,\n"
      "    \"attributes\": {\"matched_text\": \"...\"}\n"
      "  }\n"
      "]}\n"
      "\n"
      "# SPECIAL INSTRUCTIONS:\n"
      "1. Extract only concrete evidence facts grounded in the artifact text.\n"
      "2. Treat third-party wrappers and LOTL/trusted-tool abuse as equivalent to native sinks.\n"
      "3. If a setup instruction contains a concrete command, URL, path, or credential reference, "
      "extract it.\n"
      "4. If no valid taxonomy subtype applies, return \"records\": [].\n";
  return prompt;
}

namespace {

std::string artifact_type_label(const Artifact& a) {
  if (a.language == "markdown") return "markdown";
  if (a.language == "yaml") return "yaml";
  if (a.language == "json") return "json";
  if (a.kind == ArtifactKind::Script) return "code";
  return "text";
}

std::string number_lines(const Artifact& a, int first, int last) {
  std::string out;
  for (int i = first; i <= last; ++i) {
    out += std::to_string(i);
    out += ": ";
    out += a.lines[static_cast<std::size_t>(i - 1)];
    if (i != last) out += "\n";
  }
  return out;
}

EvidenceRequest make_request(const Artifact& a, const Taxonomy& tax, const std::string& pkg_id,
                             const NeuralConfig& cfg, int first, int last) {
  EvidenceRequest req;
  req.artifact_kind = artifact_type_label(a);
  req.numbered_text = number_lines(a, first, last);
  req.package_id = pkg_id;
  req.language = a.language;
  req.rel_path = a.rel_path;
  req.taxonomy_text = tax.to_text();
  req.prompt_version = cfg.prompt_version;
  req.first_line = first;
  return req;
}

}  // namespace

LlmRequest EvidenceRequest::to_llm_request() const {
  LlmRequest r;
  r.system = evidence_system_prompt();
  r.user = "Artifact type: " + artifact_kind + "\n" +
           "Package: " + package_id + "\n" +
           "Language: " + language + "\n" +
           "File path: " + rel_path + "\n" +
           "Prompt version: " + prompt_version + "\n\n" +
           "Taxonomy:\n" + taxonomy_text + "\n" +
           "Artifact text:\n" + numbered_text + "\n";
  return r;
}

EvidenceRequest build_prompt(const Artifact& artifact, const Taxonomy& taxonomy,
                             const std::string& package_id, const NeuralConfig& cfg) {
  if (artifact.lines.empty())
    throw std::invalid_argument("build_prompt: artifact has no lines: " + artifact.rel_path);
  int n = artifact.line_count();
  if (n > cfg.line_budget)
    throw ArtifactTooLarge(artifact.rel_path + ": " + std::to_string(n) + " lines exceed budget " +
                           std::to_string(cfg.line_budget));
  return make_request(artifact, taxonomy, package_id, cfg, 1, n);
}

std::vector<EvidenceRequest> build_prompts(const Artifact& artifact, const Taxonomy& taxonomy,
                                           const std::string& package_id, const NeuralConfig& cfg) {
  std::vector<EvidenceRequest> out;
  int n = artifact.line_count();
  if (n == 0) return out;
  if (n <= cfg.line_budget) {
    out.push_back(make_request(artifact, taxonomy, package_id, cfg, 1, n));
    return out;
  }
  int start = 1;
  while (start <= n) {
    int end = std::min(n, start + cfg.line_budget - 1);
    out.push_back(make_request(artifact, taxonomy, package_id, cfg, start, end));
    if (end == n) break;
    start = end - cfg.chunk_overlap + 1;
  }
  return out;
}

// --- Response validation ------------------------------------------------------

std::vector<SsoRecord> validate_response(const std::string& body, const Artifact& artifact,
                                         const Taxonomy& taxonomy, const std::string& model_tag,
                                         const NeuralConfig& cfg, ValidationStats* stats) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("unparseable response: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
    throw MalformedResponse("response missing 'records' array");

  ValidationStats local;
  ValidationStats& st = stats ? *stats : local;
  std::vector<SsoRecord> out;

  for (const auto& item : doc["records"]) {
    auto reject = [&](const std::string& reason) { st.rejected[reason] += 1; };
    if (!item.is_object()) {
      reject("not-an-object");
      continue;
    }
    std::string type = item.value("type", "");
    std::string subtype = item.value("subtype", "");
    if (!taxonomy.contains(type, subtype)) {
      reject("unknown-subtype");
      continue;
    }
    if (!item.contains("start_line") || !item.contains("end_line") ||
        !item["start_line"].is_number_integer() || !item["end_line"].is_number_integer()) {
      reject("bad-span");
      continue;
    }
    int start = item["start_line"].get<int>();
    int end = item["end_line"].get<int>();
    if (start < 1 || end < start || end > artifact.line_count()) {
      reject("span-out-of-range");
      continue;
    }
    double conf = item.value("confidence", -1.0);
    if (conf < 0.0 || conf > 1.0) {
      reject("bad-confidence");
      continue;
    }
    if (conf < cfg.confidence_floor) {
      reject("below-floor");
      continue;
    }
    std::string matched;
    if (item.contains("attributes") && item["attributes"].is_object())
      matched = item["attributes"].value("matched_text", "");
    if (matched.empty()) {
      reject("missing-matched-text");
      continue;
    }
    if (artifact.span_text(start, end).find(matched) == std::string::npos) {
      reject("ungrounded-matched-text");
      continue;
    }

    SsoRecord rec;
    rec.artifact = artifact.rel_path;
    rec.sso_type = type;
    rec.sso_subtype = subtype;
    rec.confidence = conf;
    rec.span = {start, end};
    rec.matched_text = matched;
    rec.provenance = {Provenance::Neural, model_tag};
    rec.record_id = compute_record_id(rec);
    out.push_back(std::move(rec));
    st.accepted += 1;
  }
  return out;
}

// --- Extraction ---------------------------------------------------------------

NeuralExtraction extract_neural(const SkillPackage& pkg, LlmBackend& backend,
                                const Taxonomy& taxonomy,
                                const std::vector<SsoRecord>& symbolic_records,
                                const NeuralConfig& cfg) {
  NeuralExtraction result;

  std::set<std::string> symbolically_covered;
  for (const auto& r : symbolic_records) symbolically_covered.insert(r.artifact);

  for (const auto& a : pkg.artifacts) {
    if (a.binary) continue;
    if (a.lines.empty()) {
      if (a.kind != ArtifactKind::Other)
        result.diagnostics.push_back(a.rel_path + ": skipped, artifact has no lines");
      continue;
    }
    bool prose_kind = a.kind == ArtifactKind::Prompt || a.kind == ArtifactKind::Documentation ||
                      a.kind == ArtifactKind::Config || a.kind == ArtifactKind::Manifest;
    bool uncovered_script =
        a.kind == ArtifactKind::Script && symbolically_covered.count(a.rel_path) == 0;
    if (!prose_kind && !uncovered_script) continue;

    std::vector<EvidenceRequest> requests;
    try {
      requests = build_prompts(a, taxonomy, pkg.id, cfg);
    } catch (const std::exception& e) {
      result.diagnostics.push_back(a.rel_path + ": " + e.what());
      continue;
    }

    for (const auto& req : requests) {
      std::string body;
      bool got = false;
      for (int attempt = 0; attempt <= cfg.retry_budget && !got; ++attempt) {
        try {
          body = backend.complete(req.to_llm_request());
          auto recs = validate_response(body, a, taxonomy, backend.model_tag(), cfg, &result.stats);
          for (auto& r : recs) result.records.push_back(std::move(r));
          got = true;
        } catch (const MalformedResponse& e) {
          if (attempt == cfg.retry_budget) {
            result.diagnostics.push_back(a.rel_path + ": " + e.what());
            got = true;  // degrade to no records for this request
          }
        } catch (const BackendUnavailable& e) {
          result.backend_unavailable = true;
          result.diagnostics.push_back(a.rel_path + ": " + e.what());
          return result;
        }
      }
    }
  }

  // Deduplicate identical records (chunk overlap can re-extract a line).
  sort_records(result.records);
  result.records.erase(std::unique(result.records.begin(), result.records.end(),
                                   [](const SsoRecord& x, const SsoRecord& y) {
                                     return x.record_id == y.record_id;
                                   }),
                       result.records.end());
  return result;
}

}  // namespace skillsentry
