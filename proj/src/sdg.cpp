#include "skillsentry/sdg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillsentry/util.hpp"

namespace skillsentry {

using nlohmann::json;

const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::Artifact: return "Artifact";
    case NodeType::SSO: return "SSO";
    case NodeType::Operand: return "Operand";
    case NodeType::Value: return "Value";
  }
  return "Value";
}

const char* to_string(EdgeType t) {
  switch (t) {
    case EdgeType::Contains: return "contains";
    case EdgeType::HasOpnd: return "has_opnd";
    case EdgeType::ValueFlow: return "value_flow";
  }
  return "contains";
}

bool Sdg::has_node(const std::string& id) const {
  return artifacts.count(id) || records.count(id) || operands.count(id) || values.count(id);
}

NodeType Sdg::node_type(const std::string& id) const {
  if (artifacts.count(id)) return NodeType::Artifact;
  if (records.count(id)) return NodeType::SSO;
  if (operands.count(id)) return NodeType::Operand;
  if (values.count(id)) return NodeType::Value;
  throw ConsistencyError("unknown node id: " + id);
}

std::size_t Sdg::node_count() const {
  return artifacts.size() + records.size() + operands.size() + values.size();
}

std::vector<std::string> Sdg::node_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : artifacts) out.push_back(id);
  for (const auto& [id, _] : records) out.push_back(id);
  for (const auto& [id, _] : operands) out.push_back(id);
  for (const auto& [id, _] : values) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::string Sdg::artifact_node_id(const std::string& rel_path) const {
  return short_id('a', package_id + "|" + rel_path);
}

Sdg build_sdg(const SdgInput& input) {
  if (!input.pkg) throw ConsistencyError("build_sdg: missing package");
  Sdg g;
  g.package_id = input.pkg->id;

  std::map<std::string, const SsoRecord*> record_by_id;
  for (const auto& r : input.records) {
    g.records[r.record_id] = r;
    record_by_id[r.record_id] = &r;
  }
  for (const auto& o : input.operands) g.operands[o.operand_id] = o;
  for (const auto& v : input.values) g.values[v.value_id] = v;

  // Artifact nodes: only artifacts bearing a record or originating a value.
  std::set<std::string> artifact_paths;
  for (const auto& r : input.records) artifact_paths.insert(r.artifact);
  for (const auto& v : input.values) artifact_paths.insert(v.origin_artifact);
  for (const auto& path : artifact_paths) {
    if (path.empty()) continue;
    g.artifacts[g.artifact_node_id(path)] = path;
  }

  std::set<SdgEdge> edges;

  // Rule 1 (evidence edge): artifact(r) = a => (a, contains, r).
  for (const auto& r : input.records) {
    std::string aid = g.artifact_node_id(r.artifact);
    if (!g.artifacts.count(aid))
      throw ConsistencyError("record " + r.record_id + " names unknown artifact " + r.artifact);
    edges.insert({aid, EdgeType::Contains, r.record_id});
  }

  // Rule 2 (operand edge): x in opnds(r), resolve(x) = o => (r, has_opnd, o).
  for (const auto& b : input.bindings) {
    if (!record_by_id.count(b.record_id))
      throw ConsistencyError("binding references unknown record " + b.record_id);
    if (!g.operands.count(b.operand_id))
      throw ConsistencyError("binding references unknown operand " + b.operand_id);
    edges.insert({b.record_id, EdgeType::HasOpnd, b.operand_id});
  }

  // Rule 3 (value-flow edges): bind(o) = v and v1 ~> v2.
  for (const auto& [oid, vid] : input.operand_values) {
    if (!g.operands.count(oid))
      throw ConsistencyError("operand binding references unknown operand " + oid);
    if (!g.values.count(vid)) throw ConsistencyError("operand binding references unknown value " + vid);
    edges.insert({oid, EdgeType::ValueFlow, vid});
  }
  for (const auto& f : input.flows) {
    if (!g.values.count(f.from))
      throw ConsistencyError("flow fact references unknown value " + f.from);
    if (!g.values.count(f.to)) throw ConsistencyError("flow fact references unknown value " + f.to);
    edges.insert({f.from, EdgeType::ValueFlow, f.to});
  }

  g.edges.assign(edges.begin(), edges.end());
  return g;
}

// --- Reaches closure -----------------------------------------------------------

std::vector<std::pair<std::string, std::string>> compute_reaches(const Sdg& g, bool parallel) {
  // Flow nodes: operands and values (the only legal value_flow endpoints).
  std::vector<std::string> ids;
  for (const auto& [id, _] : g.operands) ids.push_back(id);
  for (const auto& [id, _] : g.values) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);

  const int n = static_cast<int>(ids.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : g.edges) {
    if (e.type != EdgeType::ValueFlow) continue;
    adj[static_cast<std::size_t>(index.at(e.from))].push_back(index.at(e.to));
  }

  std::vector<std::vector<char>> reach(static_cast<std::size_t>(n),
                                       std::vector<char>(static_cast<std::size_t>(n), 0));
  auto bfs = [&](int src) {
    auto& row = reach[static_cast<std::size_t>(src)];
    std::vector<int> stack{src};
    row[static_cast<std::size_t>(src)] = 1;  // reflexive
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int nxt : adj[static_cast<std::size_t>(cur)]) {
        if (!row[static_cast<std::size_t>(nxt)]) {
          row[static_cast<std::size_t>(nxt)] = 1;
          stack.push_back(nxt);
        }
      }
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) bfs(i);
  } else {
    for (int i = 0; i < n; ++i) bfs(i);
  }

  std::vector<std::pair<std::string, std::string>> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        out.emplace_back(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  return out;  // sorted by construction (ids sorted, j ascending)
}

// --- FactSet ---------------------------------------------------------------------

const std::map<std::string, int>& FactSet::schema() {
  static const std::map<std::string, int> s = {
      {"contains", 2},      {"has_opnd", 2},   {"value_flow", 2}, {"sso_type", 3},
      {"operand_class", 2}, {"operand_label", 2}, {"value_kind", 2}, {"reaches", 2}};
  return s;
}

const std::vector<std::vector<std::string>>& FactSet::tuples(const std::string& relation) const {
  static const std::vector<std::vector<std::string>> empty;
  auto it = relations.find(relation);
  return it == relations.end() ? empty : it->second;
}

bool FactSet::has(const std::string& relation, const std::vector<std::string>& tuple) const {
  const auto& ts = tuples(relation);
  return std::binary_search(ts.begin(), ts.end(), tuple);
}

std::string FactSet::to_text() const {
  std::string out = "sdg-facts v1\n";
  for (const auto& [rel, ts] : relations)
    for (const auto& t : ts) out += rel + "(" + join(t, ",") + ")\n";
  return out;
}

FactSet FactSet::parse(const std::string& text) {
  FactSet fs;
  bool header = false;
  for (const auto& raw : split(text, '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      if (s != "sdg-facts v1") throw IoError("fact file: missing 'sdg-facts v1' header");
      header = true;
      continue;
    }
    auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') throw IoError("fact file: malformed line: " + s);
    std::string rel = s.substr(0, open);
    auto it = schema().find(rel);
    if (it == schema().end()) throw IoError("fact file: unknown relation: " + rel);
    std::vector<std::string> args;
    for (auto& a : split(s.substr(open + 1, s.size() - open - 2), ',')) args.push_back(trim(a));
    if (static_cast<int>(args.size()) != it->second)
      throw IoError("fact file: wrong arity for " + rel + ": " + s);
    fs.relations[rel].push_back(std::move(args));
  }
  if (!header) throw IoError("fact file: empty input");
  for (auto& [rel, ts] : fs.relations) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  return fs;
}

FactSet export_facts(const Sdg& g, bool parallel) {
  FactSet fs;
  auto add = [&fs](const std::string& rel, std::vector<std::string> tuple) {
    fs.relations[rel].push_back(std::move(tuple));
  };

  for (const auto& e : g.edges) {
    if (e.type == EdgeType::Contains) add("contains", {e.from, e.to});
    else if (e.type == EdgeType::HasOpnd) add("has_opnd", {e.from, e.to});
    else add("value_flow", {e.from, e.to});
  }
  for (const auto& [id, r] : g.records) add("sso_type", {id, r.sso_type, r.sso_subtype});
  for (const auto& [id, o] : g.operands) {
    add("operand_class", {id, to_string(o.object_class)});
    for (const auto& l : o.labels) add("operand_label", {id, l});
  }
  for (const auto& [id, v] : g.values)
    add("value_kind", {id, v.kind == ValueEntity::Concrete ? "concrete" : "abstract"});
  for (auto& [x, y] : compute_reaches(g, parallel)) add("reaches", {std::move(x), std::move(y)});

  for (auto& [rel, ts] : fs.relations) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  return fs;
}

// --- Subgraph summary --------------------------------------------------------------

std::string summarize_subgraph(const Sdg& g, const std::set<std::string>& seeds, int radius,
                               int max_lines, std::set<std::string>* scope_out) {
  // Radius-bounded BFS over undirected edges.
  std::map<std::string, std::vector<std::string>> nbr;
  for (const auto& e : g.edges) {
    nbr[e.from].push_back(e.to);
    nbr[e.to].push_back(e.from);
  }
  std::set<std::string> in_scope;
  std::vector<std::pair<std::string, int>> queue;
  for (const auto& s : seeds)
    if (g.has_node(s)) {
      in_scope.insert(s);
      queue.emplace_back(s, 0);
    }
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    auto [id, depth] = queue[qi];
    if (depth >= radius) continue;
    for (const auto& next : nbr[id])
      if (in_scope.insert(next).second) queue.emplace_back(next, depth + 1);
  }

  if (scope_out) *scope_out = in_scope;

  std::vector<std::string> lines;
  auto emit = [&lines](std::string s) { lines.push_back(std::move(s)); };

  emit("Artifacts:");
  for (const auto& [id, path] : g.artifacts)
    if (in_scope.count(id)) emit("  " + id + " " + path);
  emit("SSOs:");
  for (const auto& [id, r] : g.records) {
    if (!in_scope.count(id)) continue;
    std::string text = r.matched_text;
    std::replace(text.begin(), text.end(), '\n', ' ');
    if (text.size() > 120) text = text.substr(0, 117) + "...";
    emit("  " + id + " " + r.sso_type + "/" + r.sso_subtype + " at " + r.artifact + ":" +
         std::to_string(r.span.start_line) + "-" + std::to_string(r.span.end_line) +
         (seeds.count(id) ? " [seed]" : "") + " :: " + text);
  }
  emit("Operands:");
  for (const auto& [id, o] : g.operands) {
    if (!in_scope.count(id)) continue;
    std::string labels = join(std::vector<std::string>(o.labels.begin(), o.labels.end()), ",");
    emit("  " + id + " slot=" + o.slot_role + " class=" + to_string(o.object_class) +
         (labels.empty() ? "" : " labels=" + labels) + " expr=" + strip_ws(o.raw_expr));
  }

  // Value-flow paths from each in-scope operand, longest-first per start.
  std::map<std::string, std::vector<std::string>> flow;
  for (const auto& e : g.edges)
    if (e.type == EdgeType::ValueFlow && in_scope.count(e.from) && in_scope.count(e.to))
      flow[e.from].push_back(e.to);
  for (auto& [_, v] : flow) std::sort(v.begin(), v.end());

  emit("Value-flow paths:");
  auto render_node = [&](const std::string& id) {
    auto vit = g.values.find(id);
    if (vit == g.values.end()) return id;
    std::string text = strip_ws(vit->second.text);
    if (text.size() > 40) text = text.substr(0, 37) + "...";
    return id + "(" + text + ")";
  };
  for (const auto& [oid, o] : g.operands) {
    if (!in_scope.count(oid) || !flow.count(oid)) continue;
    // Depth-first maximal paths (bounded) from this operand.
    std::vector<std::vector<std::string>> paths;
    std::vector<std::string> cur{oid};
    std::set<std::string> on_path{oid};
    std::function<void()> dfs = [&]() {
      if (paths.size() >= 16 || cur.size() > 24) return;
      const auto it = flow.find(cur.back());
      bool extended = false;
      if (it != flow.end()) {
        for (const auto& next : it->second) {
          if (on_path.count(next)) continue;
          cur.push_back(next);
          on_path.insert(next);
          dfs();
          on_path.erase(next);
          cur.pop_back();
          extended = true;
        }
      }
      if (!extended && cur.size() > 1) paths.push_back(cur);
    };
    dfs();
    for (const auto& p : paths) {
      std::string line = "  ";
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) line += " -> ";
        line += render_node(p[i]);
      }
      emit(line);
    }
  }

  if (static_cast<int>(lines.size()) > max_lines) {
    lines.resize(static_cast<std::size_t>(max_lines - 1));
    lines.push_back("... (truncated)");
  }
  return join(lines, "\n") + "\n";
}

std::string sdg_to_json(const Sdg& g) {
  json nodes = json::array();
  for (const auto& [id, path] : g.artifacts)
    nodes.push_back({{"id", id}, {"type", "Artifact"}, {"rel_path", path}});
  for (const auto& [id, r] : g.records)
    nodes.push_back({{"id", id},
                     {"type", "SSO"},
                     {"sso_type", r.sso_type},
                     {"sso_subtype", r.sso_subtype},
                     {"artifact", r.artifact},
                     {"start_line", r.span.start_line},
                     {"end_line", r.span.end_line},
                     {"matched_text", r.matched_text},
                     {"confidence", r.confidence},
                     {"provenance", r.provenance.kind == Provenance::Symbolic ? "symbolic" : "neural"},
                     {"provenance_tag", r.provenance.tag}});
  for (const auto& [id, o] : g.operands)
    nodes.push_back({{"id", id},
                     {"type", "Operand"},
                     {"slot", o.slot_role},
                     {"class", to_string(o.object_class)},
                     {"raw_expr", o.raw_expr},
                     {"artifact", o.defining_artifact},
                     {"labels", std::vector<std::string>(o.labels.begin(), o.labels.end())}});
  for (const auto& [id, v] : g.values)
    nodes.push_back({{"id", id},
                     {"type", "Value"},
                     {"kind", v.kind == ValueEntity::Concrete ? "concrete" : "abstract"},
                     {"text", v.text},
                     {"artifact", v.origin_artifact}});

  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from}, {"type", to_string(e.type)}, {"to", e.to}});

  json doc = {{"format", "sdg-json v1"},
              {"package_id", g.package_id},
              {"nodes", nodes},
              {"edges", edges}};
  return doc.dump(2) + "\n";
}

}  // namespace skillsentry
