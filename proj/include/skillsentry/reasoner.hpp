#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skillsentry/sdg.hpp"

namespace skillsentry {

struct PatternCompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One argument of a pattern atom: a variable (leading uppercase), an
/// anonymous wildcard `_`, or a constant set (alternation with '|').
struct PatternArg {
  enum Kind { Variable, Wildcard, Constants } kind = Wildcard;
  std::string var;
  std::vector<std::string> constants;
};

struct PatternAtom {
  std::string relation;
  std::vector<PatternArg> args;
};

/// A conjunctive query over the exported fact set. Every pattern must bind
/// at least two SSO variables linked through operand/value structure; bare
/// co-occurrence is rejected at load time.
struct Pattern {
  std::string pattern_id;
  std::string behavior_class;
  int severity = 5;
  std::vector<PatternAtom> body;
  std::string source_line;
};

const std::vector<std::string>& behavior_classes();  // the nine classes

/// Parses the line-oriented `class severity :- atom, atom, ...` format.
std::vector<Pattern> parse_patterns(const std::string& text);
std::vector<Pattern> load_patterns(const std::string& path);

struct Finding {
  std::string pattern_id;
  std::string behavior_class;
  int severity = 5;
  bool neural = false;
  std::string neural_assessment;  // "malicious" | "suspicious" for neural findings
  double confidence = 1.0;
  std::map<std::string, std::string> bindings;  // variable -> node id
  std::set<std::string> evidence_nodes;
  std::vector<SdgEdge> evidence_edges;
  std::string explanation;
};

/// Enumerates all satisfying bindings of every pattern; duplicate bindings
/// over the same node set collapse to one finding. Deterministic order by
/// (pattern id, sorted node ids).
std::vector<Finding> eval_patterns(const FactSet& facts, const std::vector<Pattern>& patterns);

/// Test/benchmark reference: one pattern on one fact set via naive
/// atom-by-atom enumeration without indexes or reordering.
std::vector<std::map<std::string, std::string>> enumerate_bindings_naive(const FactSet& facts,
                                                                         const Pattern& pattern);

struct CandidatePattern {
  std::string skeleton;  // relation skeleton with node types
  std::vector<std::string> occurrences;
  std::string status = "pending";
};

struct ReasoningOutcome {
  std::vector<Finding> findings;
  std::vector<CandidatePattern> candidates;
  bool backend_unavailable = false;
};

class LlmBackend;

struct ReasonerConfig {
  double verdict_floor = 0.75;   // neural findings below stay advisory
  double evidence_floor = 0.6;   // responses below are dropped entirely
  int summary_radius = 3;
};

/// LLM reasoning over subgraph summaries of SSO nodes no symbolic finding
/// covers. Novel behavior shapes are recorded as candidate patterns.
ReasoningOutcome neural_reason(const Sdg& g, const FactSet& facts,
                               const std::vector<Finding>& symbolic, LlmBackend& backend,
                               const ReasonerConfig& cfg = {});

enum class VerdictLabel { Malicious, Suspicious, Benign };
const char* to_string(VerdictLabel v);

struct Verdict {
  VerdictLabel label = VerdictLabel::Benign;
  std::vector<Finding> findings;
  std::vector<std::string> degraded_flags;
};

/// Aggregation: malicious on any symbolic finding or any neural finding at or
/// above the verdict floor; suspicious when only sub-floor or advisory neural
/// findings exist; benign otherwise.
Verdict decide(const std::vector<Finding>& symbolic, const std::vector<Finding>& neural,
               const std::vector<std::string>& flags, const ReasonerConfig& cfg = {});

}  // namespace skillsentry
