#include <doctest.h>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "skillsentry/feedback.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/neural.hpp"
#include "skillsentry/pipeline.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;
using nlohmann::json;

namespace {

SsoRecord neural_record(const std::string& artifact, const std::string& type,
                        const std::string& subtype, int line, const std::string& text) {
  SsoRecord r;
  r.artifact = artifact;
  r.sso_type = type;
  r.sso_subtype = subtype;
  r.confidence = 0.9;
  r.span = {line, line};
  r.matched_text = text;
  r.provenance = {Provenance::Neural, "fixture"};
  r.record_id = compute_record_id(r);
  return r;
}

}  // namespace

TEST_CASE("matched text normalization keeps callee chains and wildcards arguments") {
  CHECK(normalize_trigger_text("fabric.Connection(host).run(cmd)") ==
        "fabric.Connection(*).run(*)");
  CHECK(normalize_trigger_text("fabric.Connection(host).run(\"curl -s https://x.sh | bash\")") ==
        "fabric.Connection(*).run(*)");
  CHECK(normalize_trigger_text("runner.invoke(\"ls\", 2)") == "runner.invoke(*)");
  // Command-shaped text wildcards URLs, digits, quotes, and paths.
  CHECK(normalize_trigger_text("curl -fsSL https://a.example/x.sh | bash") ==
        "curl -fsSL * | bash");
  CHECK(normalize_trigger_text("https://a.example/x.sh") == "*");
}

TEST_CASE("clustering groups by type, subtype, and normalized trigger") {
  std::vector<std::pair<std::string, SsoRecord>> stream;
  for (int p = 1; p <= 3; ++p)
    stream.emplace_back("pkg" + std::to_string(p),
                        neural_record("deploy.py", "exec", "shell_interpreter_execution", 4,
                                      "fabric.Connection(host).run(cmd" + std::to_string(p) + ")"));
  stream.emplace_back("pkg1", neural_record("deploy.py", "net", "outbound_connection", 4,
                                            "fabric.Connection(host).run(cmd)"));
  // Symbolic records are ignored by clustering.
  SsoRecord sym = neural_record("a.py", "exec", "shell_interpreter_execution", 1, "os.system(x)");
  sym.provenance = {Provenance::Symbolic, "exec.os.system"};
  stream.emplace_back("pkg1", sym);

  auto clusters = cluster_evidence(stream);
  REQUIRE(clusters.size() == 2);  // same text, different subtype: two clusters
  const EvidenceCluster* exec_cluster = nullptr;
  for (const auto& c : clusters)
    if (c.sso_type == "exec") exec_cluster = &c;
  REQUIRE(exec_cluster != nullptr);
  CHECK(exec_cluster->normalized_trigger == "fabric.Connection(*).run(*)");
  CHECK(exec_cluster->members.size() == 3);
  CHECK(exec_cluster->support_packages == 3);
}

TEST_CASE("single occurrences form support-1 clusters") {
  auto clusters = cluster_evidence(
      {{"pkg1", neural_record("a.py", "exec", "shell_interpreter_execution", 1, "w.run(x)")}});
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].support_packages == 1);
}

TEST_CASE("synthesis honors thresholds") {
  EvidenceCluster c;
  c.sso_type = "exec";
  c.sso_subtype = "shell_interpreter_execution";
  c.normalized_trigger = "fabric.Connection(*).run(*)";
  c.members = {{"pkg1", "r:1"}, {"pkg1", "r:2"}};
  c.support_packages = 1;
  CHECK_FALSE(synthesize_rule(c).has_value());  // 2 members, 1 package

  c.members = {{"pkg1", "r:1"}, {"pkg2", "r:2"}, {"pkg3", "r:3"}};
  c.support_packages = 3;
  auto cand = synthesize_rule(c);
  REQUIRE(cand.has_value());
  const SsoRule& rule = cand->rule;
  CHECK(rule.origin == RuleOrigin::Promoted);
  CHECK(rule.trigger.text == "fabric.Connection(*).run(*)");
  CHECK(rule.provenance.size() == 3);
  // Two wildcards, one Exec slot: the extra wildcard stays uncaptured.
  REQUIRE(rule.captures.size() == 1);
  CHECK(rule.captures[0].slot == "command");
  CHECK(rule.captures[0].wildcard == 1);
  // Context pins the wrapper's root name.
  REQUIRE(rule.context.size() == 1);
  CHECK(rule.context[0].needle == "fabric");
}

TEST_CASE("degenerate all-wildcard triggers yield no candidate") {
  EvidenceCluster c;
  c.sso_type = "net";
  c.sso_subtype = "outbound_connection";
  c.normalized_trigger = "*";
  c.members = {{"pkg1", "r:1"}, {"pkg2", "r:2"}, {"pkg3", "r:3"}};
  c.support_packages = 3;
  CHECK_FALSE(synthesize_rule(c).has_value());
}

TEST_CASE("promotion validates held-out purity, source coverage, and duplicates") {
  std::vector<SkillPackage> sources_pkgs;
  for (int i = 1; i <= 3; ++i)
    sources_pkgs.push_back(test::mem_package(
        {{"deploy.py", "import fabric\nfabric.Connection(host).run(\"payload" +
                           std::to_string(i) + "\")\n"}},
        "pkg" + std::to_string(i)));

  std::vector<SsoRecord> evid;
  std::vector<std::pair<const SkillPackage*, const SsoRecord*>> sources;
  std::vector<std::pair<std::string, SsoRecord>> stream;
  for (auto& pkg : sources_pkgs) {
    SsoRecord r = neural_record("deploy.py", "exec", "shell_interpreter_execution", 2,
                                "fabric.Connection(host).run(\"payload\")");
    evid.push_back(r);
    stream.emplace_back(pkg.id, r);
  }
  for (std::size_t i = 0; i < 3; ++i) sources.emplace_back(&sources_pkgs[i], &evid[i]);

  auto clusters = cluster_evidence(stream);
  REQUIRE(clusters.size() == 1);
  auto cand = synthesize_rule(clusters[0]);
  REQUIRE(cand.has_value());

  RuleBase rb = test::seed_rules();
  int version_before = rb.version;

  SUBCASE("accepted on a clean held-out corpus") {
    std::vector<SkillPackage> held_out = {load_package(test::fixture("benign/hello-skill"))};
    PromotionResult pr = validate_and_promote(*cand, held_out, rb, sources);
    CHECK(pr.candidate.status == "accepted");
    CHECK(pr.candidate.fp_on_held_out == 0);
    CHECK(pr.candidate.tp_on_sources == 3);
    CHECK(pr.rule_base.version == version_before + 1);
    CHECK(pr.rule_base.find(cand->rule.rule_id) != nullptr);

    // The loop's purpose: a symbolic-only re-scan now finds every span.
    for (const auto& pkg : sources_pkgs) {
      auto recs = match_rules(pkg, pr.rule_base);
      bool covered = false;
      for (const auto& rec : recs)
        covered = covered || (rec.provenance.tag == cand->rule.rule_id && rec.span.start_line <= 2 &&
                              rec.span.end_line >= 2);
      CHECK(covered);
    }

    SUBCASE("re-promoting the same trigger is a duplicate drop") {
      PromotionResult again = validate_and_promote(*cand, held_out, pr.rule_base, sources);
      CHECK(again.candidate.status == "duplicate");
      CHECK(again.rule_base.version == pr.rule_base.version);
    }
  }

  SUBCASE("any held-out hit rejects the candidate") {
    SkillPackage tainted = test::mem_package(
        {{"benign.py", "import fabric\nfabric.Connection(box).run(\"uptime\")\n"}}, "held-out");
    PromotionResult pr = validate_and_promote(*cand, {tainted}, rb, sources);
    CHECK(pr.candidate.status == "rejected");
    CHECK(pr.candidate.fp_on_held_out > 0);
    CHECK(pr.rule_base.version == version_before);
  }
}

TEST_CASE("promoted rules serialize in the seed format with provenance comments") {
  EvidenceCluster c;
  c.sso_type = "exec";
  c.sso_subtype = "shell_interpreter_execution";
  c.normalized_trigger = "fabric.Connection(*).run(*)";
  c.members = {{"pkg1", "r:a"}, {"pkg2", "r:b"}, {"pkg3", "r:c"}};
  c.support_packages = 3;
  auto cand = synthesize_rule(c);
  REQUIRE(cand.has_value());

  RuleBase rb;
  rb.version = 2;
  rb.rules.push_back(cand->rule);
  std::string text = promoted_rules_text(rb);
  CHECK(text.rfind("sso-rules v1\n", 0) == 0);
  CHECK(text.find("# promoted from 3 evidence record(s)") != std::string::npos);
  CHECK(text.find("origin = promoted") != std::string::npos);

  // The promoted file parses back with the same trigger.
  RuleBase back = parse_rule_base(text, test::seed_taxonomy());
  REQUIRE(back.rules.size() == 1);
  CHECK(back.rules[0].trigger.text == "fabric.Connection(*).run(*)");
  CHECK(back.rules[0].origin == RuleOrigin::Promoted);
}
