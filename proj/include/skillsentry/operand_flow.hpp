#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/record.hpp"
#include "skillsentry/taxonomy.hpp"

namespace skillsentry {

/// Canonical operand slots per SSO category.
const std::vector<std::string>& operand_slots(SsoCategory c);
bool category_has_slot(SsoCategory c, const std::string& slot);

enum class ObjectClass {
  Path,
  Endpoint,
  Command,
  Payload,
  Secret,
  EnvName,
  PackageSpec,
  Literal,
  Unknown
};
const char* to_string(ObjectClass c);

struct OperandObject {
  std::string operand_id;  // stable: hash of (artifact, whitespace-stripped raw_expr)
  std::string slot_role;
  ObjectClass object_class = ObjectClass::Unknown;
  std::string raw_expr;
  std::string defining_artifact;
  std::set<std::string> labels;
};

struct ValueEntity {
  std::string value_id;
  enum Kind { Concrete, Abstract } kind = Abstract;
  std::string text;  // verbatim literal (concrete) or surface expression / class label
  std::string origin_artifact;
  Span origin_span;
};

enum class FlowMechanism {
  Assignment,
  Alias,
  ParameterPass,
  ReturnValue,
  WrapperCall,
  InterArtifactReference,
  Inferred
};
const char* to_string(FlowMechanism m);

struct FlowFact {
  std::string from;  // value id
  std::string to;    // value id
  FlowMechanism mechanism = FlowMechanism::Assignment;
  std::string artifact;  // evidence location
  Span evidence_span;
};

/// Mutable value/fact store shared by the flow tracker and operand resolver.
class FlowGraph {
 public:
  std::vector<ValueEntity> values;
  std::vector<FlowFact> facts;
  std::vector<std::string> degraded_artifacts;

  const ValueEntity* value(const std::string& id) const;
  bool has_value(const std::string& id) const { return index_.count(id) > 0; }

  std::string ensure_var(const std::string& artifact, const std::string& name, Span span);
  std::string ensure_expr(const std::string& artifact, const std::string& text, Span span);
  std::string ensure_literal(const std::string& artifact, const std::string& text, Span span);
  /// Abstract per-record operand value ("the data occupying this slot").
  std::string ensure_opnd_value(const std::string& artifact, const std::string& record_id,
                                const std::string& slot, const std::string& text, Span span);

  void add_fact(const std::string& from, const std::string& to, FlowMechanism m,
                const std::string& artifact, Span span);

  bool known_var(const std::string& artifact, const std::string& name) const;
  std::string var_id(const std::string& artifact, const std::string& name) const;  // "" if absent

  /// Expression values recorded for one artifact, with their spans.
  const std::vector<std::pair<std::string, Span>>& exprs_of(const std::string& artifact) const;

  /// Concrete values that reach `value_id` backwards over the fact edges.
  std::vector<std::string> trace_concrete_sources(const std::string& value_id) const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::pair<std::string, std::string>, std::string> vars_;
  std::map<std::string, std::vector<std::pair<std::string, Span>>> artifact_exprs_;
  std::set<std::string> fact_keys_;

  std::string intern(ValueEntity v);
};

/// Label rules loaded from the editable data files: credential globs mark
/// secrets; path globs attach labels such as persistence_path; word rules
/// attach labels such as privileged_command to matching operand text.
class OperandLabeler {
 public:
  static OperandLabeler builtin();
  static OperandLabeler load(const std::string& credential_paths_file,
                             const std::string& path_labels_file);

  bool is_credential(std::string_view text) const;
  /// All labels for a path/name-like string (credential + path labels).
  std::set<std::string> labels_for_value(std::string_view text) const;
  /// Labels derived from command-ish operand text (word scans).
  std::set<std::string> labels_for_text(std::string_view text) const;

  void parse_credential_lines(const std::string& text);
  void parse_path_label_lines(const std::string& text);

 private:
  std::vector<std::string> credential_globs_;
  std::vector<std::pair<std::string, std::string>> path_labels_;  // glob -> label
  std::vector<std::pair<std::string, std::string>> word_labels_;  // word -> label
};

struct OperandBinding {
  std::string record_id;
  std::string slot;
  std::string operand_id;
};

struct OperandResolution {
  std::vector<OperandObject> operands;
  std::vector<OperandBinding> bindings;  // record -> operand (has_opnd)
  std::vector<std::pair<std::string, std::string>> operand_values;  // operand -> value (bind)
};

/// Builds the package-wide assignment/alias/parameter/return/wrapper/
/// cross-artifact flow graph for python and javascript scripts plus
/// config artifacts. Artifacts the tokenizer cannot handle are flagged
/// in degraded_artifacts and contribute no facts.
FlowGraph track_flow(const SkillPackage& pkg);

/// Resolves every operand ref of every record against the flow graph,
/// extending it with operand values and bind edges.
OperandResolution resolve_operands(const std::vector<SsoRecord>& records, const SkillPackage& pkg,
                                   FlowGraph& graph, const OperandLabeler& labeler);

struct InferenceStats {
  int labels_applied = 0;
  int flows_applied = 0;
  int rejected = 0;
};

class LlmBackend;

/// LLM-assisted operand inference: closed-vocabulary relabeling of
/// unresolved operands plus inferred flow facts between existing values.
InferenceStats infer_operands(std::vector<OperandObject>& operands, const SkillPackage& pkg,
                              FlowGraph& graph, LlmBackend& backend, double confidence_floor,
                              const std::set<std::string>& label_vocab);

/// The closed label vocabulary for neural relabeling.
std::set<std::string> default_label_vocab();
std::set<std::string> load_label_vocab(const std::string& path);

}  // namespace skillsentry
