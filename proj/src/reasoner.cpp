#include "skillsentry/reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <deque>
#include <numeric>

#include <nlohmann/json.hpp>

#include "skillsentry/neural.hpp"
#include "skillsentry/util.hpp"

namespace skillsentry {

using nlohmann::json;

const std::vector<std::string>& behavior_classes() {
  static const std::vector<std::string> classes = {"execution_delivery",
                                                   "persistence",
                                                   "privilege_escalation_identity_abuse",
                                                   "injection_covert_residency",
                                                   "information_theft",
                                                   "command_and_control",
                                                   "lateral_movement",
                                                   "defense_evasion_antiforensics",
                                                   "destructive_ransomware"};
  return classes;
}

namespace {

bool is_behavior_class(const std::string& s) {
  const auto& c = behavior_classes();
  return std::find(c.begin(), c.end(), s) != c.end();
}

PatternArg parse_arg(const std::string& raw) {
  std::string t = trim(raw);
  PatternArg arg;
  if (t == "_") {
    arg.kind = PatternArg::Wildcard;
    return arg;
  }
  if (!t.empty() && std::isupper(static_cast<unsigned char>(t[0]))) {
    arg.kind = PatternArg::Variable;
    arg.var = t;
    return arg;
  }
  arg.kind = PatternArg::Constants;
  for (auto& alt : split(t, '|')) {
    std::string a = trim(alt);
    if (a.empty()) throw PatternCompileError("empty alternative in argument: " + raw);
    arg.constants.push_back(a);
  }
  return arg;
}

void validate_pattern(const Pattern& p) {
  // Structural requirement: at least two SSO variables linked through
  // operand/value atoms (never bare co-occurrence).
  std::set<std::string> sso_vars;
  for (const auto& atom : p.body) {
    auto it = FactSet::schema().find(atom.relation);
    if (it == FactSet::schema().end())
      throw PatternCompileError(p.pattern_id + ": unknown relation " + atom.relation);
    if (static_cast<int>(atom.args.size()) != it->second)
      throw PatternCompileError(p.pattern_id + ": wrong arity for " + atom.relation);
    if (atom.relation == "sso_type" && atom.args[0].kind == PatternArg::Variable)
      sso_vars.insert(atom.args[0].var);
  }
  if (sso_vars.size() < 2)
    throw PatternCompileError(p.pattern_id + ": pattern must bind at least two SSO variables");

  // Union-find over variables linked by structural atoms.
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) {
      parent[x] = x;
      return x;
    }
    return parent[x] = find(it->second);
  };
  auto unite = [&](const std::string& a, const std::string& b) { parent[find(a)] = find(b); };
  for (const auto& atom : p.body) {
    if (atom.relation != "has_opnd" && atom.relation != "value_flow" && atom.relation != "reaches")
      continue;
    std::vector<std::string> vars;
    for (const auto& a : atom.args)
      if (a.kind == PatternArg::Variable) vars.push_back(a.var);
    for (std::size_t i = 1; i < vars.size(); ++i) unite(vars[0], vars[i]);
  }
  std::set<std::string> roots;
  for (const auto& v : sso_vars) roots.insert(find(v));
  if (roots.size() != 1)
    throw PatternCompileError(p.pattern_id +
                              ": SSO variables are not linked via operand/value structure");
}

}  // namespace

std::vector<Pattern> parse_patterns(const std::string& text) {
  std::vector<Pattern> out;
  std::map<std::string, int> class_counts;
  bool header = false;
  for (const auto& raw : split(text, '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      if (s != "sdg-patterns v1") throw PatternCompileError("missing 'sdg-patterns v1' header");
      header = true;
      continue;
    }
    auto sep = s.find(":-");
    if (sep == std::string::npos) throw PatternCompileError("missing ':-' in pattern: " + s);
    auto head_parts = split_ws(trim(s.substr(0, sep)));
    if (head_parts.size() != 2)
      throw PatternCompileError("pattern head must be 'class severity': " + s);
    Pattern p;
    p.behavior_class = head_parts[0];
    if (!is_behavior_class(p.behavior_class))
      throw PatternCompileError("unknown behavior class: " + p.behavior_class);
    try {
      p.severity = std::stoi(head_parts[1]);
    } catch (const std::exception&) {
      throw PatternCompileError("severity must be an integer: " + s);
    }
    p.pattern_id = p.behavior_class + "#" + std::to_string(++class_counts[p.behavior_class]);
    p.source_line = s;

    std::string body = trim(s.substr(sep + 2));
    // Split atoms on commas outside parentheses.
    int depth = 0;
    std::size_t start = 0;
    std::vector<std::string> atom_texts;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || (body[i] == ',' && depth == 0)) {
        std::string a = trim(body.substr(start, i - start));
        if (!a.empty()) atom_texts.push_back(a);
        start = i + 1;
      } else if (body[i] == '(') {
        ++depth;
      } else if (body[i] == ')') {
        --depth;
      }
    }
    if (atom_texts.empty()) throw PatternCompileError("empty pattern body: " + s);
    for (const auto& at : atom_texts) {
      auto open = at.find('(');
      if (open == std::string::npos || at.back() != ')')
        throw PatternCompileError("malformed atom: " + at);
      PatternAtom atom;
      atom.relation = trim(at.substr(0, open));
      for (auto& arg : split(at.substr(open + 1, at.size() - open - 2), ','))
        atom.args.push_back(parse_arg(arg));
      p.body.push_back(std::move(atom));
    }
    validate_pattern(p);
    out.push_back(std::move(p));
  }
  if (!header) throw PatternCompileError("empty pattern file");
  return out;
}

std::vector<Pattern> load_patterns(const std::string& path) {
  return parse_patterns(read_file(path));
}

// --- Evaluation -------------------------------------------------------------------

namespace {

using Assignment = std::map<std::string, std::string>;

bool atom_matches(const PatternAtom& atom, const std::vector<std::string>& tuple,
                  const Assignment& bound, Assignment& extension) {
  extension.clear();
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const PatternArg& arg = atom.args[i];
    const std::string& val = tuple[i];
    switch (arg.kind) {
      case PatternArg::Wildcard: break;
      case PatternArg::Constants: {
        bool ok = false;
        for (const auto& c : arg.constants) ok = ok || c == val;
        if (!ok) return false;
        break;
      }
      case PatternArg::Variable: {
        auto it = bound.find(arg.var);
        if (it != bound.end()) {
          if (it->second != val) return false;
        } else {
          auto eit = extension.find(arg.var);
          if (eit != extension.end()) {
            if (eit->second != val) return false;
          } else {
            extension[arg.var] = val;
          }
        }
        break;
      }
    }
  }
  return true;
}

int bound_arg_count(const PatternAtom& atom, const Assignment& bound) {
  int n = 0;
  for (const auto& arg : atom.args) {
    if (arg.kind == PatternArg::Constants) ++n;
    else if (arg.kind == PatternArg::Variable && bound.count(arg.var)) ++n;
  }
  return n;
}

void backtrack(const FactSet& facts, const std::vector<PatternAtom>& atoms,
               std::vector<bool>& used, Assignment& bound, std::vector<Assignment>& out) {
  std::size_t remaining = 0;
  for (bool u : used)
    if (!u) ++remaining;
  if (remaining == 0) {
    out.push_back(bound);
    return;
  }
  // Most-constrained-next: maximize bound args, break ties on fewer tuples.
  std::size_t best = atoms.size();
  long best_score = -1;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (used[i]) continue;
    long tuples = static_cast<long>(facts.tuples(atoms[i].relation).size());
    long score = static_cast<long>(bound_arg_count(atoms[i], bound)) * 1000000 - tuples;
    if (best == atoms.size() || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  used[best] = true;
  Assignment extension;
  for (const auto& tuple : facts.tuples(atoms[best].relation)) {
    if (!atom_matches(atoms[best], tuple, bound, extension)) continue;
    for (const auto& [k, v] : extension) bound[k] = v;
    backtrack(facts, atoms, used, bound, out);
    for (const auto& [k, v] : extension) bound.erase(k);
  }
  used[best] = false;
}

std::vector<Assignment> eval_pattern_bindings(const FactSet& facts, const Pattern& p) {
  std::vector<Assignment> out;
  Assignment bound;
  std::vector<bool> used(p.body.size(), false);
  backtrack(facts, p.body, used, bound, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Shortest value_flow path from x to y (inclusive), or empty.
std::vector<std::string> flow_path(const FactSet& facts, const std::string& from,
                                   const std::string& to) {
  if (from == to) return {from};
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& t : facts.tuples("value_flow")) adj[t[0]].push_back(t[1]);
  std::map<std::string, std::string> prev;
  std::deque<std::string> queue{from};
  std::set<std::string> seen{from};
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    for (const auto& next : adj[cur]) {
      if (!seen.insert(next).second) continue;
      prev[next] = cur;
      if (next == to) {
        std::vector<std::string> path{to};
        std::string at = to;
        while (at != from) {
          at = prev[at];
          path.push_back(at);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(next);
    }
  }
  return {};
}

}  // namespace

std::vector<std::map<std::string, std::string>> enumerate_bindings_naive(const FactSet& facts,
                                                                         const Pattern& pattern) {
  // Atoms in written order, no indexes, no reordering: the independent oracle.
  std::vector<Assignment> partial{{}};
  for (const auto& atom : pattern.body) {
    std::vector<Assignment> next;
    for (const auto& assign : partial) {
      Assignment extension;
      for (const auto& tuple : facts.tuples(atom.relation)) {
        if (!atom_matches(atom, tuple, assign, extension)) continue;
        Assignment merged = assign;
        for (const auto& [k, v] : extension) merged[k] = v;
        next.push_back(std::move(merged));
      }
    }
    partial = std::move(next);
  }
  std::sort(partial.begin(), partial.end());
  partial.erase(std::unique(partial.begin(), partial.end()), partial.end());
  return partial;
}

std::vector<Finding> eval_patterns(const FactSet& facts, const std::vector<Pattern>& patterns) {
  std::vector<Finding> out;
  for (const auto& p : patterns) {
    std::set<std::vector<std::string>> seen_node_sets;
    for (const auto& assign : eval_pattern_bindings(facts, p)) {
      std::vector<std::string> node_set;
      for (const auto& [_, v] : assign) node_set.push_back(v);
      std::sort(node_set.begin(), node_set.end());
      node_set.erase(std::unique(node_set.begin(), node_set.end()), node_set.end());
      if (!seen_node_sets.insert(node_set).second) continue;

      Finding f;
      f.pattern_id = p.pattern_id;
      f.behavior_class = p.behavior_class;
      f.severity = p.severity;
      f.bindings = assign;
      f.evidence_nodes.insert(node_set.begin(), node_set.end());

      // Evidence edges: structural atoms on bound endpoints plus the paths
      // realizing every satisfied reaches atom.
      auto value_of_arg = [&](const PatternArg& a) -> std::optional<std::string> {
        if (a.kind == PatternArg::Variable) {
          auto it = assign.find(a.var);
          if (it != assign.end()) return it->second;
        }
        if (a.kind == PatternArg::Constants && a.constants.size() == 1) return a.constants[0];
        return std::nullopt;
      };
      for (const auto& atom : p.body) {
        auto from = value_of_arg(atom.args[0]);
        auto to = atom.args.size() > 1 ? value_of_arg(atom.args[1]) : std::nullopt;
        if (!from || !to) continue;
        if (atom.relation == "contains")
          f.evidence_edges.push_back({*from, EdgeType::Contains, *to});
        else if (atom.relation == "has_opnd")
          f.evidence_edges.push_back({*from, EdgeType::HasOpnd, *to});
        else if (atom.relation == "value_flow")
          f.evidence_edges.push_back({*from, EdgeType::ValueFlow, *to});
        else if (atom.relation == "reaches") {
          auto path = flow_path(facts, *from, *to);
          for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            f.evidence_nodes.insert(path[i]);
            f.evidence_nodes.insert(path[i + 1]);
            f.evidence_edges.push_back({path[i], EdgeType::ValueFlow, path[i + 1]});
          }
        }
      }
      std::sort(f.evidence_edges.begin(), f.evidence_edges.end());
      f.evidence_edges.erase(std::unique(f.evidence_edges.begin(), f.evidence_edges.end()),
                             f.evidence_edges.end());

      std::string vars;
      for (const auto& [k, v] : assign) vars += (vars.empty() ? "" : ", ") + k + "=" + v;
      f.explanation = p.behavior_class + " matched by " + p.pattern_id + " with " + vars;
      out.push_back(std::move(f));
    }
  }
  std::sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    auto an = std::vector<std::string>(a.evidence_nodes.begin(), a.evidence_nodes.end());
    auto bn = std::vector<std::string>(b.evidence_nodes.begin(), b.evidence_nodes.end());
    return std::tie(a.pattern_id, an) < std::tie(b.pattern_id, bn);
  });
  return out;
}

// --- Neural reasoning ----------------------------------------------------------------

namespace {

const char* reasoning_system_prompt() {
  return "You judge whether a skill dependency subgraph forms a malicious workflow.\n"
         "Respond with exactly one JSON object:\n"
         "{\"assessment\": \"malicious|suspicious|benign\",\n"
         " \"behavior_class\": \"<class or novel>\",\n"
         " \"confidence\": 0.0,\n"
         " \"cited_node_ids\": [\"...\"],\n"
         " \"rationale\": \"...\"}\n"
         "Judge only from the given nodes and edges. Cite only node ids present in the summary.\n";
}

std::string relation_skeleton(const Sdg& g, const std::set<std::string>& scope) {
  std::vector<std::string> parts;
  for (const auto& e : g.edges) {
    if (!scope.count(e.from) || !scope.count(e.to)) continue;
    auto describe = [&](const std::string& id) -> std::string {
      NodeType t = g.node_type(id);
      if (t == NodeType::SSO) {
        const auto& r = g.records.at(id);
        return "SSO(" + r.sso_type + "/" + r.sso_subtype + ")";
      }
      return to_string(t);
    };
    parts.push_back(describe(e.from) + " -" + to_string(e.type) + "-> " + describe(e.to));
  }
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  return join(parts, "; ");
}

}  // namespace

ReasoningOutcome neural_reason(const Sdg& g, const FactSet& /*facts*/,
                               const std::vector<Finding>& symbolic, LlmBackend& backend,
                               const ReasonerConfig& cfg) {
  ReasoningOutcome outcome;

  std::set<std::string> covered;
  for (const auto& f : symbolic)
    for (const auto& n : f.evidence_nodes)
      if (n.rfind("r:", 0) == 0) covered.insert(n);

  std::vector<std::string> seeds;
  for (const auto& [id, _] : g.records)
    if (!covered.count(id)) seeds.push_back(id);
  if (seeds.empty()) return outcome;

  // Cluster seeds by connectivity over operand/value structure; singleton
  // seeds coalesce into one residual cluster so cross-artifact hints are
  // reasoned about together.
  std::map<std::string, std::vector<std::string>> nbr;
  for (const auto& e : g.edges) {
    if (e.type == EdgeType::Contains) continue;
    nbr[e.from].push_back(e.to);
    nbr[e.to].push_back(e.from);
  }
  std::map<std::string, std::string> component;
  for (const auto& seed : seeds) {
    if (component.count(seed)) continue;
    std::vector<std::string> stack{seed};
    std::set<std::string> seen{seed};
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      component[cur] = seed;
      for (const auto& nxt : nbr[cur])
        if (seen.insert(nxt).second) stack.push_back(nxt);
    }
  }
  std::map<std::string, std::set<std::string>> clusters;  // representative -> seed set
  for (const auto& seed : seeds) clusters[component[seed]].insert(seed);

  std::set<std::string> residual;
  for (auto it = clusters.begin(); it != clusters.end();) {
    if (it->second.size() == 1) {
      residual.insert(it->second.begin(), it->second.end());
      it = clusters.erase(it);
    } else {
      ++it;
    }
  }
  if (!residual.empty()) clusters["residual"] = residual;

  for (const auto& [rep, cluster_seeds] : clusters) {
    std::set<std::string> scope;
    std::string summary = summarize_subgraph(g, cluster_seeds, cfg.summary_radius, 200, &scope);

    LlmRequest req;
    req.system = reasoning_system_prompt();
    req.user = "Behavior classes: " + join(behavior_classes(), ", ") + "\n\nSubgraph summary:\n" +
               summary;

    std::string body;
    try {
      body = backend.complete(req);
    } catch (const BackendUnavailable&) {
      outcome.backend_unavailable = true;
      return outcome;
    }

    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) continue;
    std::string assessment = doc.value("assessment", "");
    if (assessment != "malicious" && assessment != "suspicious") continue;
    double conf = doc.value("confidence", 0.0);
    if (conf < cfg.evidence_floor || conf > 1.0) continue;
    std::string behavior = doc.value("behavior_class", "novel");

    std::set<std::string> cited;
    if (doc.contains("cited_node_ids") && doc["cited_node_ids"].is_array()) {
      bool all_in_scope = true;
      for (const auto& item : doc["cited_node_ids"]) {
        if (!item.is_string() || !scope.count(item.get<std::string>())) {
          all_in_scope = false;
          break;
        }
        cited.insert(item.get<std::string>());
      }
      if (!all_in_scope) continue;  // uncited/hallucinated nodes: drop response
    }

    Finding f;
    f.neural = true;
    f.neural_assessment = assessment;
    f.pattern_id = "neural:" + backend.model_tag();
    f.behavior_class = is_behavior_class(behavior) ? behavior : "novel";
    f.severity = assessment == "malicious" ? 8 : 4;
    f.confidence = conf;
    f.evidence_nodes = cited.empty() ? cluster_seeds : cited;
    f.explanation = doc.value("rationale", "neural assessment of unmatched subgraph");
    outcome.findings.push_back(std::move(f));

    if (!is_behavior_class(behavior)) {
      CandidatePattern cand;
      cand.skeleton = relation_skeleton(g, scope);
      cand.occurrences.push_back(g.package_id + ":" +
                                 join(std::vector<std::string>(cluster_seeds.begin(), cluster_seeds.end()), "+"));
      outcome.candidates.push_back(std::move(cand));
    }
  }
  return outcome;
}

const char* to_string(VerdictLabel v) {
  switch (v) {
    case VerdictLabel::Malicious: return "malicious";
    case VerdictLabel::Suspicious: return "suspicious";
    case VerdictLabel::Benign: return "benign";
  }
  return "benign";
}

Verdict decide(const std::vector<Finding>& symbolic, const std::vector<Finding>& neural,
               const std::vector<std::string>& flags, const ReasonerConfig& cfg) {
  Verdict v;
  v.degraded_flags = flags;
  v.findings = symbolic;

  bool neural_malicious = false;
  bool neural_flags = false;
  for (const auto& f : neural) {
    v.findings.push_back(f);
    if (f.neural_assessment == "malicious" && f.confidence >= cfg.verdict_floor)
      neural_malicious = true;
    else
      neural_flags = true;
  }

  if (!symbolic.empty() || neural_malicious) v.label = VerdictLabel::Malicious;
  else if (neural_flags) v.label = VerdictLabel::Suspicious;
  else v.label = VerdictLabel::Benign;
  return v;
}

}  // namespace skillsentry
