#include <doctest.h>

#include <random>
#include <set>

#include "helpers.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/operand_flow.hpp"
#include "skillsentry/pipeline.hpp"
#include "skillsentry/sdg.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;

namespace {

// Random well-formed SdgInput: artifacts, records, operands bound to records,
// values, operand->value binds, value->value flows.
SdgInput random_input(std::mt19937& rng, const SkillPackage& pkg, int max_nodes) {
  std::uniform_int_distribution<int> d_records(0, std::max(1, max_nodes / 8));
  std::uniform_int_distribution<int> d_values(0, std::max(1, max_nodes / 2));

  SdgInput in;
  in.pkg = &pkg;

  int n_records = d_records(rng);
  for (int i = 0; i < n_records; ++i) {
    SsoRecord r;
    r.artifact = pkg.artifacts[static_cast<std::size_t>(i) % pkg.artifacts.size()].rel_path;
    r.sso_type = i % 2 ? "exec" : "net";
    r.sso_subtype = i % 2 ? "shell_interpreter_execution" : "outbound_connection";
    r.span = {i + 1, i + 1};
    r.matched_text = "m" + std::to_string(i);
    r.record_id = compute_record_id(r);
    in.records.push_back(std::move(r));
  }
  int n_operands = n_records ? d_records(rng) : 0;
  for (int i = 0; i < n_operands; ++i) {
    OperandObject o;
    o.raw_expr = "expr" + std::to_string(i);
    o.defining_artifact = pkg.artifacts[0].rel_path;
    o.operand_id = short_id('o', o.defining_artifact + "|" + o.raw_expr);
    o.slot_role = "command";
    in.operands.push_back(std::move(o));
    std::uniform_int_distribution<int> pick(0, n_records - 1);
    in.bindings.push_back({in.records[static_cast<std::size_t>(pick(rng))].record_id, "command",
                           in.operands.back().operand_id});
  }
  int n_values = d_values(rng);
  for (int i = 0; i < n_values; ++i) {
    ValueEntity v;
    v.text = "v" + std::to_string(i);
    v.value_id = short_id('v', "rand|" + std::to_string(i));
    v.kind = i % 3 ? ValueEntity::Abstract : ValueEntity::Concrete;
    v.origin_artifact = pkg.artifacts[0].rel_path;
    in.values.push_back(std::move(v));
  }
  if (n_values > 0) {
    std::uniform_int_distribution<int> pick(0, n_values - 1);
    for (int i = 0; i < n_operands; ++i)
      in.operand_values.emplace_back(in.operands[static_cast<std::size_t>(i)].operand_id,
                                     in.values[static_cast<std::size_t>(pick(rng))].value_id);
    std::uniform_int_distribution<int> n_flows_dist(0, 2 * n_values);
    int n_flows = n_flows_dist(rng);
    for (int i = 0; i < n_flows; ++i) {
      FlowFact f;
      f.from = in.values[static_cast<std::size_t>(pick(rng))].value_id;
      f.to = in.values[static_cast<std::size_t>(pick(rng))].value_id;
      if (f.from == f.to) continue;
      f.mechanism = FlowMechanism::Assignment;
      f.artifact = pkg.artifacts[0].rel_path;
      in.flows.push_back(std::move(f));
    }
  }
  return in;
}

// Independent oracle: per-source DFS over value_flow edges, reflexive.
std::set<std::pair<std::string, std::string>> dfs_closure(const Sdg& g) {
  std::map<std::string, std::vector<std::string>> adj;
  std::set<std::string> flow_nodes;
  for (const auto& [id, _] : g.operands) flow_nodes.insert(id);
  for (const auto& [id, _] : g.values) flow_nodes.insert(id);
  for (const auto& e : g.edges)
    if (e.type == EdgeType::ValueFlow) adj[e.from].push_back(e.to);
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& src : flow_nodes) {
    std::vector<std::string> stack{src};
    std::set<std::string> seen{src};
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      out.insert({src, cur});
      for (const auto& nxt : adj[cur])
        if (seen.insert(nxt).second) stack.push_back(nxt);
    }
  }
  return out;
}

ScanResult scan_fixture(const std::string& rel) {
  return scan_path(test::fixture(rel), test::offline_config());
}

}  // namespace

TEST_CASE("motivating package builds the expected graph shape") {
  ScanResult r = scan_fixture("motivating/exfil-skill");
  CHECK(r.sdg.artifacts.size() == 3);
  CHECK(r.sdg.records.size() == 3);
  CHECK(r.sdg.operands.size() >= 3);

  // Two reads and one send.
  int reads = 0, sends = 0;
  for (const auto& [_, rec] : r.sdg.records) {
    reads += rec.sso_subtype == "file_read" ? 1 : 0;
    sends += rec.sso_type == "net" ? 1 : 0;
  }
  CHECK(reads == 2);
  CHECK(sends == 1);

  // The credential value reaches the outbound payload.
  std::string cred_operand, payload_value;
  for (const auto& [id, o] : r.sdg.operands)
    if (o.labels.count("credential_file")) cred_operand = id;
  REQUIRE_FALSE(cred_operand.empty());
  bool reach_holds = false;
  for (const auto& t : r.facts.tuples("reaches")) {
    if (t[0] != cred_operand) continue;
    const auto vit = r.sdg.values.find(t[1]);
    if (vit != r.sdg.values.end() && vit->second.text == "bundle") reach_holds = true;
  }
  CHECK(reach_holds);
}

TEST_CASE("edge typing discipline and contains law hold on every fixture scan") {
  for (const char* dir : {"motivating/exfil-skill", "behaviors/ransomware_malicious",
                          "behaviors/persistence_malicious", "categories/category-samples",
                          "benign/hello-skill"}) {
    ScanResult r = scan_fixture(dir);
    std::map<std::string, int> contains_in;
    for (const auto& e : r.sdg.edges) {
      NodeType from = r.sdg.node_type(e.from);
      NodeType to = r.sdg.node_type(e.to);
      switch (e.type) {
        case EdgeType::Contains:
          CHECK(from == NodeType::Artifact);
          CHECK(to == NodeType::SSO);
          contains_in[e.to] += 1;
          break;
        case EdgeType::HasOpnd:
          CHECK(from == NodeType::SSO);
          CHECK(to == NodeType::Operand);
          break;
        case EdgeType::ValueFlow:
          CHECK((from == NodeType::Operand || from == NodeType::Value));
          CHECK(to == NodeType::Value);
          break;
      }
    }
    for (const auto& [id, _] : r.sdg.records) {
      INFO(dir, " ", id);
      CHECK(contains_in[id] == 1);
    }
  }
}

TEST_CASE("empty record list yields an empty graph") {
  SkillPackage pkg = test::mem_package({{"a.py", "x = 1\n"}});
  SdgInput in;
  in.pkg = &pkg;
  Sdg g = build_sdg(in);
  CHECK(g.node_count() == 0);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("one record with one operand and no values") {
  SkillPackage pkg = test::mem_package({{"a.py", "import os\nos.system(\"ls\")\n"}});
  SdgInput in;
  in.pkg = &pkg;
  SsoRecord r;
  r.artifact = "a.py";
  r.sso_type = "exec";
  r.sso_subtype = "shell_interpreter_execution";
  r.span = {2, 2};
  r.matched_text = "os.system(\"ls\")";
  r.record_id = compute_record_id(r);
  in.records.push_back(r);
  OperandObject o;
  o.raw_expr = "\"ls\"";
  o.defining_artifact = "a.py";
  o.operand_id = short_id('o', "a.py|\"ls\"");
  o.slot_role = "command";
  in.operands.push_back(o);
  in.bindings.push_back({r.record_id, "command", o.operand_id});

  Sdg g = build_sdg(in);
  CHECK(g.node_count() == 3);  // artifact + sso + operand
  REQUIRE(g.edge_count() == 2);
  CHECK(g.edges[0].type != g.edges[1].type);
}

TEST_CASE("dangling references are consistency errors") {
  SkillPackage pkg = test::mem_package({{"a.py", "x = 1\n"}});
  SdgInput in;
  in.pkg = &pkg;
  in.bindings.push_back({"r:missing", "command", "o:missing"});
  CHECK_THROWS_AS(build_sdg(in), ConsistencyError);

  SdgInput in2;
  in2.pkg = &pkg;
  FlowFact f;
  f.from = "v:missing";
  f.to = "v:other";
  in2.flows.push_back(f);
  CHECK_THROWS_AS(build_sdg(in2), ConsistencyError);
}

TEST_CASE("graph law suite holds on randomly generated inputs") {
  SkillPackage pkg = test::mem_package({{"a.py", "x = 1\n"}, {"b.py", "y = 2\n"}});
  std::mt19937 rng(7);
  for (int round = 0; round < 300; ++round) {
    SdgInput in = random_input(rng, pkg, 200);
    Sdg g = build_sdg(in);

    CHECK(g.records.size() == in.records.size());
    int contains_edges = 0;
    for (const auto& e : g.edges) contains_edges += e.type == EdgeType::Contains ? 1 : 0;
    CHECK(static_cast<std::size_t>(contains_edges) == in.records.size());

    auto pairs = compute_reaches(g, round % 2 == 0);
    std::set<std::pair<std::string, std::string>> got(pairs.begin(), pairs.end());
    CHECK(got == dfs_closure(g));
  }
}

TEST_CASE("reaches is identity-only without value_flow edges") {
  SkillPackage pkg = test::mem_package({{"a.py", "x = 1\n"}});
  SdgInput in;
  in.pkg = &pkg;
  ValueEntity v;
  v.value_id = short_id('v', "solo");
  v.text = "solo";
  v.origin_artifact = "a.py";
  in.values.push_back(v);
  Sdg g = build_sdg(in);
  FactSet fs = export_facts(g);
  REQUIRE(fs.tuples("reaches").size() == 1);
  CHECK(fs.tuples("reaches")[0] == std::vector<std::string>{v.value_id, v.value_id});
}

TEST_CASE("fact export is canonical and re-imports losslessly") {
  ScanResult r = scan_fixture("motivating/exfil-skill");
  std::string text = r.facts.to_text();
  CHECK(text.rfind("sdg-facts v1\n", 0) == 0);
  FactSet back = FactSet::parse(text);
  CHECK(back == r.facts);
  CHECK(back.to_text() == text);

  // reaches(credentialValue, postPayloadValue) from the motivating narrative:
  // credential operand reaches some value bound by the send's payload operand.
  CHECK_FALSE(r.facts.tuples("reaches").empty());
}

TEST_CASE("fact files reject bad headers, relations, and arities") {
  CHECK_THROWS_AS(FactSet::parse("nope\ncontains(a,b)\n"), IoError);
  CHECK_THROWS_AS(FactSet::parse("sdg-facts v1\nfrobnicate(a,b)\n"), IoError);
  CHECK_THROWS_AS(FactSet::parse("sdg-facts v1\ncontains(a,b,c)\n"), IoError);
  CHECK_THROWS_AS(FactSet::parse("sdg-facts v1\ncontains(a,b\n"), IoError);
  FactSet ok = FactSet::parse("sdg-facts v1\n# comment\ncontains(a:1,r:1)\n");
  CHECK(ok.tuples("contains").size() == 1);
}

TEST_CASE("identical inputs produce byte-identical serialization") {
  ScanResult a = scan_fixture("behaviors/ransomware_malicious");
  ScanResult b = scan_fixture("behaviors/ransomware_malicious");
  CHECK(a.facts.to_text() == b.facts.to_text());
  CHECK(sdg_to_json(a.sdg) == sdg_to_json(b.sdg));
}

TEST_CASE("subgraph summaries are bounded, deterministic, and radius-aware") {
  ScanResult r = scan_fixture("motivating/exfil-skill");
  std::string cred_record;
  for (const auto& [id, rec] : r.sdg.records)
    if (rec.matched_text.find(".aws") != std::string::npos) cred_record = id;
  REQUIRE_FALSE(cred_record.empty());

  std::string summary = summarize_subgraph(r.sdg, {cred_record}, 3);
  CHECK(summary == summarize_subgraph(r.sdg, {cred_record}, 3));
  CHECK(summary.find("SSOs:") != std::string::npos);
  CHECK(summary.find(cred_record) != std::string::npos);
  CHECK(summary.find("->") != std::string::npos);  // an arrow chain is present

  // Radius 0 keeps only the seed.
  std::set<std::string> scope;
  summarize_subgraph(r.sdg, {cred_record}, 0, 200, &scope);
  CHECK(scope == std::set<std::string>{cred_record});

  // Line cap.
  std::string capped = summarize_subgraph(r.sdg, {cred_record}, 3, 5);
  int lines = 0;
  for (char c : capped) lines += c == '\n' ? 1 : 0;
  CHECK(lines <= 5);

  // Two disconnected seeds render in canonical node-id order.
  std::vector<std::string> ids;
  for (const auto& [id, _] : r.sdg.records) ids.push_back(id);
  std::string two = summarize_subgraph(r.sdg, {ids[0], ids[1]}, 0);
  CHECK(two.find(std::min(ids[0], ids[1])) < two.find(std::max(ids[0], ids[1])));
}

TEST_CASE("sdg json dump carries explicit node and edge types") {
  ScanResult r = scan_fixture("benign/hello-skill");
  std::string js = sdg_to_json(r.sdg);
  CHECK(js.find("\"format\": \"sdg-json v1\"") != std::string::npos);
  CHECK(js.find("\"nodes\"") != std::string::npos);
  CHECK(js.find("\"edges\"") != std::string::npos);
}
