#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/operand_flow.hpp"
#include "skillsentry/record.hpp"

namespace skillsentry {

enum class NodeType { Artifact, SSO, Operand, Value };
enum class EdgeType { Contains, HasOpnd, ValueFlow };

const char* to_string(NodeType t);
const char* to_string(EdgeType t);

struct SdgEdge {
  std::string from;
  EdgeType type = EdgeType::Contains;
  std::string to;

  auto operator<=>(const SdgEdge&) const = default;
};

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The typed skill dependency graph. Edge typing is enforced by
/// construction: contains is Artifact->SSO, has_opnd is SSO->Operand,
/// value_flow is Operand->Value or Value->Value.
struct Sdg {
  std::string package_id;
  // node id -> payload, grouped by type (ids are prefixed a:/r:/o:/v:)
  std::map<std::string, std::string> artifacts;  // node id -> rel_path
  std::map<std::string, SsoRecord> records;
  std::map<std::string, OperandObject> operands;
  std::map<std::string, ValueEntity> values;
  std::vector<SdgEdge> edges;  // sorted, unique

  bool has_node(const std::string& id) const;
  NodeType node_type(const std::string& id) const;  // throws on unknown id
  std::size_t node_count() const;
  std::size_t edge_count() const { return edges.size(); }
  std::vector<std::string> node_ids() const;  // sorted

  std::string artifact_node_id(const std::string& rel_path) const;
};

struct SdgInput {
  const SkillPackage* pkg = nullptr;
  std::vector<SsoRecord> records;
  std::vector<OperandObject> operands;
  std::vector<OperandBinding> bindings;
  std::vector<ValueEntity> values;
  std::vector<std::pair<std::string, std::string>> operand_values;  // operand -> value
  std::vector<FlowFact> flows;                                      // value -> value
};

/// Instantiates nodes and edges per the construction rules; throws
/// ConsistencyError naming any dangling reference.
Sdg build_sdg(const SdgInput& input);

/// Relational export of the graph. Tuples are sorted and unique.
struct FactSet {
  std::map<std::string, std::vector<std::vector<std::string>>> relations;

  /// relation name -> arity
  static const std::map<std::string, int>& schema();

  const std::vector<std::vector<std::string>>& tuples(const std::string& relation) const;
  bool has(const std::string& relation, const std::vector<std::string>& tuple) const;

  std::string to_text() const;  // "sdg-facts v1" line-oriented format
  static FactSet parse(const std::string& text);

  bool operator==(const FactSet&) const = default;
};

/// Exports facts; `reaches` is the reflexive-transitive closure of
/// value_flow over operand and value nodes (OpenMP per-source BFS when
/// parallel, with a serial path kept for testing and benchmarks).
FactSet export_facts(const Sdg& g, bool parallel = true);

/// The closure alone, as sorted pairs (used by the benchmark).
std::vector<std::pair<std::string, std::string>> compute_reaches(const Sdg& g, bool parallel);

/// Deterministic plain-text rendering of the radius-bounded subgraph around
/// `seeds`: artifacts, SSOs, operands, and value-flow paths, capped at
/// `max_lines` lines. `scope_out`, when given, receives the rendered node ids.
std::string summarize_subgraph(const Sdg& g, const std::set<std::string>& seeds, int radius = 3,
                               int max_lines = 200, std::set<std::string>* scope_out = nullptr);

/// JSON dump with explicit node/edge type fields (the hook for external
/// viewers).
std::string sdg_to_json(const Sdg& g);

}  // namespace skillsentry
