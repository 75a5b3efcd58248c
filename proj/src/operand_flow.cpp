#include "skillsentry/operand_flow.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "skillsentry/lexer.hpp"
#include "skillsentry/neural.hpp"
#include "skillsentry/util.hpp"

namespace skillsentry {

using nlohmann::json;

const std::vector<std::string>& operand_slots(SsoCategory c) {
  static const std::vector<std::string> exec = {"command"};
  static const std::vector<std::string> net = {"endpoint", "payload"};
  static const std::vector<std::string> file = {"path", "content"};
  static const std::vector<std::string> env = {"envName"};
  static const std::vector<std::string> install = {"packageSpec"};
  static const std::vector<std::string> crypto = {"input"};
  static const std::vector<std::string> prompt = {"instruction"};
  switch (c) {
    case SsoCategory::Exec: return exec;
    case SsoCategory::Net: return net;
    case SsoCategory::File: return file;
    case SsoCategory::Env: return env;
    case SsoCategory::Install: return install;
    case SsoCategory::Crypto: return crypto;
    case SsoCategory::PromptSideEffect: return prompt;
  }
  return exec;
}

bool category_has_slot(SsoCategory c, const std::string& slot) {
  const auto& slots = operand_slots(c);
  return std::find(slots.begin(), slots.end(), slot) != slots.end();
}

const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Path: return "path";
    case ObjectClass::Endpoint: return "endpoint";
    case ObjectClass::Command: return "command";
    case ObjectClass::Payload: return "payload";
    case ObjectClass::Secret: return "secret";
    case ObjectClass::EnvName: return "envName";
    case ObjectClass::PackageSpec: return "packageSpec";
    case ObjectClass::Literal: return "literal";
    case ObjectClass::Unknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(FlowMechanism m) {
  switch (m) {
    case FlowMechanism::Assignment: return "assignment";
    case FlowMechanism::Alias: return "alias";
    case FlowMechanism::ParameterPass: return "parameterPass";
    case FlowMechanism::ReturnValue: return "returnValue";
    case FlowMechanism::WrapperCall: return "wrapperCall";
    case FlowMechanism::InterArtifactReference: return "interArtifactReference";
    case FlowMechanism::Inferred: return "inferred";
  }
  return "assignment";
}

// --- FlowGraph ---------------------------------------------------------------

const ValueEntity* FlowGraph::value(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &values[it->second];
}

std::string FlowGraph::intern(ValueEntity v) {
  auto it = index_.find(v.value_id);
  if (it != index_.end()) return v.value_id;
  index_[v.value_id] = values.size();
  values.push_back(std::move(v));
  return values.back().value_id;
}

std::string FlowGraph::ensure_var(const std::string& artifact, const std::string& name, Span span) {
  ValueEntity v;
  v.value_id = short_id('v', artifact + "|var|" + name);
  v.kind = ValueEntity::Abstract;
  v.text = name;
  v.origin_artifact = artifact;
  v.origin_span = span;
  vars_[{artifact, name}] = v.value_id;
  return intern(std::move(v));
}

std::string FlowGraph::ensure_expr(const std::string& artifact, const std::string& text,
                                   Span span) {
  ValueEntity v;
  v.value_id = short_id('v', artifact + "|expr|" + strip_ws(text));
  v.kind = ValueEntity::Abstract;
  v.text = text;
  v.origin_artifact = artifact;
  v.origin_span = span;
  bool fresh = index_.find(v.value_id) == index_.end();
  std::string id = intern(std::move(v));
  if (fresh) artifact_exprs_[artifact].emplace_back(id, span);
  return id;
}

std::string FlowGraph::ensure_literal(const std::string& artifact, const std::string& text,
                                      Span span) {
  ValueEntity v;
  v.value_id = short_id('v', artifact + "|lit|" + text);
  v.kind = ValueEntity::Concrete;
  v.text = text;
  v.origin_artifact = artifact;
  v.origin_span = span;
  return intern(std::move(v));
}

std::string FlowGraph::ensure_opnd_value(const std::string& artifact, const std::string& record_id,
                                         const std::string& slot, const std::string& text,
                                         Span span) {
  ValueEntity v;
  // Per-expression: a record slot bound to several refs keeps distinct values.
  v.value_id = short_id('v', artifact + "|opnd|" + record_id + "|" + slot + "|" + strip_ws(text));
  v.kind = ValueEntity::Abstract;
  v.text = text;
  v.origin_artifact = artifact;
  v.origin_span = span;
  return intern(std::move(v));
}

void FlowGraph::add_fact(const std::string& from, const std::string& to, FlowMechanism m,
                         const std::string& artifact, Span span) {
  if (from == to) return;
  std::string key = from + "|" + to + "|" + to_string(m);
  if (!fact_keys_.insert(key).second) return;
  facts.push_back({from, to, m, artifact, span});
}

bool FlowGraph::known_var(const std::string& artifact, const std::string& name) const {
  return vars_.count({artifact, name}) > 0;
}

std::string FlowGraph::var_id(const std::string& artifact, const std::string& name) const {
  auto it = vars_.find({artifact, name});
  return it == vars_.end() ? "" : it->second;
}

const std::vector<std::pair<std::string, Span>>& FlowGraph::exprs_of(
    const std::string& artifact) const {
  static const std::vector<std::pair<std::string, Span>> empty;
  auto it = artifact_exprs_.find(artifact);
  return it == artifact_exprs_.end() ? empty : it->second;
}

std::vector<std::string> FlowGraph::trace_concrete_sources(const std::string& value_id) const {
  std::map<std::string, std::vector<std::string>> reverse;
  for (const auto& f : facts) reverse[f.to].push_back(f.from);
  std::vector<std::string> queue{value_id};
  std::set<std::string> seen{value_id};
  std::vector<std::string> out;
  while (!queue.empty()) {
    std::string cur = queue.back();
    queue.pop_back();
    auto it = reverse.find(cur);
    if (it == reverse.end()) continue;
    for (const auto& src : it->second) {
      if (!seen.insert(src).second) continue;
      const ValueEntity* v = value(src);
      if (v && v->kind == ValueEntity::Concrete) out.push_back(src);
      queue.push_back(src);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- Labeler -------------------------------------------------------------------

OperandLabeler OperandLabeler::builtin() {
  OperandLabeler l;
  l.parse_credential_lines(
      "sso-credential-paths v1\n"
      "~/.aws/credentials\n"
      "*/.aws/credentials\n"
      "~/.ssh/*\n"
      "*/.ssh/*\n"
      ".env\n"
      "*token*\n"
      "*secret*\n"
      "*apikey*\n"
      "*api_key*\n"
      "*credential*\n"
      "*passwd*\n");
  l.parse_path_label_lines(
      "sso-path-labels v1\n"
      "glob:*.bashrc persistence_path\n"
      "glob:*.bash_profile persistence_path\n"
      "glob:*.profile persistence_path\n"
      "glob:*/rc.local persistence_path\n"
      "glob:*crontab* persistence_path\n"
      "glob:*/cron.d/* persistence_path\n"
      "glob:*/.config/autostart/* persistence_path\n"
      "glob:*/systemd/* persistence_path\n"
      "glob:*authorized_keys* persistence_path\n"
      "glob:*site-packages* injection_target\n"
      "glob:*node_modules* injection_target\n"
      "glob:*__init__.py injection_target\n"
      "glob:*/.vscode/* injection_target\n"
      "glob:*dist-packages* injection_target\n"
      "glob:*histfile* forensic_artifact\n"
      "glob:*bash_history* forensic_artifact\n"
      "glob:/var/log/* forensic_artifact\n"
      "glob:*audit.log forensic_artifact\n"
      "word:\"sudo \" privileged_command\n"
      "word:\"chmod +s\" privileged_command\n"
      "word:\"setcap \" privileged_command\n"
      "word:\"ssh \" remote_shell_command\n"
      "word:\"scp \" remote_shell_command\n"
      "word:\"shred \" antiforensic_command\n"
      "word:\"rm -rf\" antiforensic_command\n"
      "word:\"history -c\" antiforensic_command\n"
      "word:\"wevtutil\" antiforensic_command\n");
  return l;
}

OperandLabeler OperandLabeler::load(const std::string& credential_paths_file,
                                    const std::string& path_labels_file) {
  OperandLabeler l;
  l.parse_credential_lines(read_file(credential_paths_file));
  l.parse_path_label_lines(read_file(path_labels_file));
  return l;
}

void OperandLabeler::parse_credential_lines(const std::string& text) {
  bool header = false;
  for (auto& raw : split(text, '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      if (s != "sso-credential-paths v1")
        throw IoError("credential paths: missing 'sso-credential-paths v1' header");
      header = true;
      continue;
    }
    credential_globs_.push_back(s);
  }
  if (!header) throw IoError("credential paths: empty file");
}

void OperandLabeler::parse_path_label_lines(const std::string& text) {
  bool header = false;
  for (auto& raw : split(text, '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      if (s != "sso-path-labels v1") throw IoError("path labels: missing 'sso-path-labels v1' header");
      header = true;
      continue;
    }
    if (s.rfind("glob:", 0) == 0) {
      auto sp = s.find_last_of(" \t");
      if (sp == std::string::npos) throw IoError("path labels: malformed line: " + s);
      path_labels_.emplace_back(trim(s.substr(5, sp - 5)), trim(s.substr(sp)));
    } else if (s.rfind("word:\"", 0) == 0) {
      auto close = s.find('"', 6);
      if (close == std::string::npos) throw IoError("path labels: unterminated word pattern: " + s);
      std::string word = s.substr(6, close - 6);
      std::string label = trim(s.substr(close + 1));
      if (label.empty()) throw IoError("path labels: missing label: " + s);
      word_labels_.emplace_back(word, label);
    } else {
      throw IoError("path labels: expected glob: or word:\" prefix: " + s);
    }
  }
  if (!header) throw IoError("path labels: empty file");
}

bool OperandLabeler::is_credential(std::string_view text) const {
  for (const auto& g : credential_globs_)
    if (glob_match(g, text)) return true;
  return false;
}

std::set<std::string> OperandLabeler::labels_for_value(std::string_view text) const {
  std::set<std::string> out;
  if (is_credential(text)) {
    out.insert("secret");
    out.insert("credential_file");
  }
  for (const auto& [g, label] : path_labels_)
    if (glob_match(g, text)) out.insert(label);
  return out;
}

std::set<std::string> OperandLabeler::labels_for_text(std::string_view text) const {
  std::set<std::string> out;
  for (const auto& [word, label] : word_labels_)
    if (text.find(word) != std::string_view::npos) out.insert(label);
  return out;
}

// --- Flow tracking -------------------------------------------------------------

namespace {

struct Statement {
  std::string text;  // trimmed
  Span span;
};

struct StatementScan {
  std::vector<Statement> statements;
  bool degraded = false;
};

// Splits the comment-stripped artifact text into logical statements: lines
// joined while brackets stay open or a trailing backslash continues them.
StatementScan split_statements(const std::string& analysis) {
  StatementScan scan;
  int depth = 0;
  std::size_t stmt_begin = 0;
  int stmt_line = 1;
  int line = 1;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    std::string t = trim(analysis.substr(stmt_begin, end - stmt_begin));
    if (!t.empty()) scan.statements.push_back({t, {stmt_line, line}});
    stmt_begin = end + 1;
    stmt_line = line + 1;
  };
  while (i < analysis.size()) {
    char c = analysis[i];
    if (c == '"' || c == '\'' || c == '`') {
      char q = c;
      ++i;
      while (i < analysis.size() && analysis[i] != q) {
        if (analysis[i] == '\\') ++i;
        if (i < analysis.size() && analysis[i] == '\n') ++line;
        ++i;
      }
      if (i < analysis.size()) ++i;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') --depth;
    else if (c == '\n') {
      bool continued = depth > 0;
      if (!continued) {
        std::size_t j = i;
        while (j > stmt_begin && std::isspace(static_cast<unsigned char>(analysis[j - 1]))) --j;
        if (j > stmt_begin && analysis[j - 1] == '\\') continued = true;
      }
      if (!continued) flush(i);
      ++line;
    }
    ++i;
  }
  if (depth > 0) {
    scan.degraded = true;
    return scan;
  }
  flush(analysis.size());
  return scan;
}

struct FuncDef {
  std::string artifact;
  std::vector<std::string> params;
};

std::string clean_param(const std::string& p) {
  std::string t = trim(p);
  for (char stop : {'=', ':'}) {
    auto pos = t.find(stop);
    if (pos != std::string::npos) t = trim(t.substr(0, pos));
  }
  while (!t.empty() && (t[0] == '*' || t[0] == '&')) t.erase(t.begin());
  return t;
}

std::optional<std::pair<std::string, std::vector<std::string>>> parse_func_def(
    const std::string& s) {
  auto grab = [&](std::size_t name_start) -> std::optional<std::pair<std::string, std::vector<std::string>>> {
    std::size_t i = name_start;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    std::string name = s.substr(name_start, i - name_start);
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size() || s[i] != '(') return std::nullopt;
    std::size_t after = scan_balanced(s, i);
    if (after == std::string::npos) return std::nullopt;
    std::vector<std::string> params;
    for (auto [b, e] : split_top_level_args(s, i + 1, after - 1)) {
      std::string p = clean_param(s.substr(b, e - b));
      if (is_bare_identifier(p) && p != "self") params.push_back(p);
    }
    return std::make_pair(name, params);
  };

  if (s.rfind("def ", 0) == 0) return grab(4);
  if (s.rfind("async def ", 0) == 0) return grab(10);
  if (s.rfind("function ", 0) == 0) return grab(9);

  // const f = (a, b) => ...   |   let f = function(a, b) ...
  for (const char* kw : {"const ", "let ", "var "}) {
    if (s.rfind(kw, 0) != 0) continue;
    std::size_t i = std::strlen(kw);
    std::size_t name_start = i;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    std::string name = s.substr(name_start, i - name_start);
    auto eq = s.find('=', i);
    if (eq == std::string::npos || name.empty()) return std::nullopt;
    std::string rhs = trim(s.substr(eq + 1));
    if (rhs.rfind("function", 0) == 0) {
      auto paren = rhs.find('(');
      if (paren == std::string::npos) return std::nullopt;
      std::size_t after = scan_balanced(rhs, paren);
      if (after == std::string::npos) return std::nullopt;
      std::vector<std::string> params;
      for (auto [b, e] : split_top_level_args(rhs, paren + 1, after - 1)) {
        std::string p = clean_param(rhs.substr(b, e - b));
        if (is_bare_identifier(p)) params.push_back(p);
      }
      return std::make_pair(name, params);
    }
    if (rhs.rfind("(", 0) == 0) {
      std::size_t after = scan_balanced(rhs, 0);
      if (after == std::string::npos) return std::nullopt;
      std::string tail = trim(rhs.substr(after));
      if (tail.rfind("=>", 0) != 0) return std::nullopt;
      std::vector<std::string> params;
      for (auto [b, e] : split_top_level_args(rhs, 1, after - 1)) {
        std::string p = clean_param(rhs.substr(b, e - b));
        if (is_bare_identifier(p)) params.push_back(p);
      }
      return std::make_pair(name, params);
    }
  }
  return std::nullopt;
}

bool is_dotted_path(const std::string& s) {
  if (s.empty()) return false;
  bool prev_dot = true;
  for (char c : s) {
    if (c == '.') {
      if (prev_dot) return false;
      prev_dot = true;
    } else if (is_ident_char(c)) {
      prev_dot = false;
    } else {
      return false;
    }
  }
  return !prev_dot && s.find('.') != std::string::npos;
}

struct Assignment {
  std::string lhs;
  std::string rhs;
};

std::optional<Assignment> parse_assignment(const std::string& s) {
  std::string t = s;
  for (const char* kw : {"const ", "let ", "var "}) {
    if (t.rfind(kw, 0) == 0) {
      t = trim(t.substr(std::strlen(kw)));
      break;
    }
  }
  std::size_t i = 0;
  while (i < t.size() && is_ident_char(t[i])) ++i;
  if (i == 0) return std::nullopt;
  std::string lhs = t.substr(0, i);
  std::size_t j = i;
  while (j < t.size() && std::isspace(static_cast<unsigned char>(t[j]))) ++j;
  if (j >= t.size()) return std::nullopt;
  // =, +=, -=, *=, /=, %=, :=
  std::size_t op = j;
  if (t[op] == '+' || t[op] == '-' || t[op] == '*' || t[op] == '/' || t[op] == '%' || t[op] == ':')
    ++op;
  if (op >= t.size() || t[op] != '=') return std::nullopt;
  if (op + 1 < t.size() && (t[op + 1] == '=' || t[op + 1] == '>')) return std::nullopt;  // ==, =>
  std::string rhs = trim(t.substr(op + 1));
  while (!rhs.empty() && rhs.back() == ';') rhs = trim(rhs.substr(0, rhs.size() - 1));
  if (rhs.empty()) return std::nullopt;
  return Assignment{lhs, rhs};
}

std::optional<Assignment> parse_for_loop(const std::string& s, const std::string& lang) {
  if (lang == "python") {
    if (s.rfind("for ", 0) != 0) return std::nullopt;
    auto in_pos = s.find(" in ");
    if (in_pos == std::string::npos) return std::nullopt;
    std::string var = trim(s.substr(4, in_pos - 4));
    std::string rhs = trim(s.substr(in_pos + 4));
    if (!rhs.empty() && rhs.back() == ':') rhs = trim(rhs.substr(0, rhs.size() - 1));
    if (!is_bare_identifier(var) || rhs.empty()) return std::nullopt;
    return Assignment{var, rhs};
  }
  if (s.rfind("for", 0) == 0) {
    auto paren = s.find('(');
    if (paren == std::string::npos) return std::nullopt;
    std::size_t after = scan_balanced(s, paren);
    if (after == std::string::npos) return std::nullopt;
    std::string head = s.substr(paren + 1, after - paren - 2);
    auto of_pos = head.find(" of ");
    if (of_pos == std::string::npos) of_pos = head.find(" in ");
    if (of_pos == std::string::npos) return std::nullopt;
    std::string var = trim(head.substr(0, of_pos));
    for (const char* kw : {"const ", "let ", "var "})
      if (var.rfind(kw, 0) == 0) var = trim(var.substr(std::strlen(kw)));
    std::string rhs = trim(head.substr(of_pos + 4));
    if (!is_bare_identifier(var) || rhs.empty()) return std::nullopt;
    return Assignment{var, rhs};
  }
  return std::nullopt;
}

std::optional<Assignment> parse_with_as(const std::string& s) {
  if (s.rfind("with ", 0) != 0) return std::nullopt;
  auto as_pos = s.find(" as ");
  if (as_pos == std::string::npos) return std::nullopt;
  std::string rhs = trim(s.substr(5, as_pos - 5));
  std::string var = trim(s.substr(as_pos + 4));
  if (!var.empty() && var.back() == ':') var = trim(var.substr(0, var.size() - 1));
  if (!is_bare_identifier(var) || rhs.empty()) return std::nullopt;
  return Assignment{var, rhs};
}

class ArtifactTracker {
 public:
  ArtifactTracker(FlowGraph& g, const Artifact& artifact,
                  const std::map<std::string, FuncDef>& funcs)
      : g_(g), a_(artifact), funcs_(funcs) {}

  void run(const StatementScan& scan) {
    for (const auto& st : scan.statements) process(st);
  }

 private:
  FlowGraph& g_;
  const Artifact& a_;
  const std::map<std::string, FuncDef>& funcs_;
  std::string current_function_;
  std::map<std::string, std::string> callable_aliases_;  // var -> dotted path

  // Return-value carrier for a package-defined function. Not an expression
  // node: it must never be picked as a record's enclosing expression.
  std::string ret_id(const std::string& func, const std::string& artifact) {
    return g_.ensure_var(artifact, "return of " + func + "()", {1, 1});
  }

  // Value of an argument or right-hand side. May create nodes and inflow facts.
  std::string value_of(const std::string& expr, Span span, bool wrapper_context = false) {
    std::string t = trim(expr);
    if (is_string_literal(t)) return g_.ensure_literal(a_.rel_path, literal_inner(t), span);
    if (is_number_literal(t)) return g_.ensure_literal(a_.rel_path, t, span);
    if (is_bare_identifier(t)) return g_.ensure_var(a_.rel_path, t, span);

    std::string vexpr = g_.ensure_expr(a_.rel_path, t, span);
    for (const auto& lit : inner_string_literals(t)) {
      if (lit.empty()) continue;
      g_.add_fact(g_.ensure_literal(a_.rel_path, lit, span), vexpr, FlowMechanism::Assignment,
                  a_.rel_path, span);
    }
    FlowMechanism ident_mech =
        wrapper_context ? FlowMechanism::WrapperCall : FlowMechanism::Assignment;
    for (const auto& ident : referenced_identifiers(t)) {
      if (g_.known_var(a_.rel_path, ident))
        g_.add_fact(g_.var_id(a_.rel_path, ident), vexpr, ident_mech, a_.rel_path, span);
    }
    link_calls(t, span, vexpr);
    return vexpr;
  }

  // Parameter passing / return linking for calls of package-defined functions
  // and wrapper calls through callable aliases.
  void link_calls(const std::string& text, Span span, const std::string& sink_expr) {
    std::size_t i = 0;
    while (i < text.size()) {
      if (!is_ident_char(text[i]) || std::isdigit(static_cast<unsigned char>(text[i]))) {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < text.size() && is_ident_char(text[i])) ++i;
      std::string name = text.substr(start, i - start);
      bool boundary_ok = start == 0 || (!is_ident_char(text[start - 1]) && text[start - 1] != '.');
      std::size_t j = i;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (!boundary_ok || j >= text.size() || text[j] != '(') continue;
      std::size_t after = scan_balanced(text, j);
      if (after == std::string::npos) continue;

      auto fit = funcs_.find(name);
      bool is_alias = callable_aliases_.count(name) > 0;
      if (fit == funcs_.end() && !is_alias) continue;

      auto args = split_top_level_args(text, j + 1, after - 1);
      if (fit != funcs_.end()) {
        const FuncDef& def = fit->second;
        for (std::size_t k = 0; k < args.size() && k < def.params.size(); ++k) {
          std::string arg = strip_kwarg_prefix(text.substr(args[k].first, args[k].second - args[k].first));
          if (arg.empty()) continue;
          std::string av = value_of(arg, span);
          std::string pv = g_.ensure_var(def.artifact, def.params[k], span);
          g_.add_fact(av, pv, FlowMechanism::ParameterPass, a_.rel_path, span);
        }
        if (!sink_expr.empty())
          g_.add_fact(ret_id(name, fit->second.artifact), sink_expr, FlowMechanism::ReturnValue,
                      a_.rel_path, span);
      } else {
        std::string call_text = trim(text.substr(start, after - start));
        std::string vcall = g_.ensure_expr(a_.rel_path, call_text, span);
        for (std::size_t k = 0; k < args.size(); ++k) {
          std::string arg = strip_kwarg_prefix(text.substr(args[k].first, args[k].second - args[k].first));
          if (arg.empty()) continue;
          g_.add_fact(value_of(arg, span), vcall, FlowMechanism::WrapperCall, a_.rel_path, span);
        }
        if (!sink_expr.empty() && sink_expr != vcall)
          g_.add_fact(vcall, sink_expr, FlowMechanism::ReturnValue, a_.rel_path, span);
      }
    }
  }

  void process(const Statement& st) {
    const std::string& s = st.text;

    if (auto def = parse_func_def(s)) {
      current_function_ = def->first;
      for (const auto& p : def->second) g_.ensure_var(a_.rel_path, p, st.span);
      return;
    }

    if (s.rfind("return", 0) == 0 && (s.size() == 6 || !is_ident_char(s[6]))) {
      std::string expr = trim(s.substr(6));
      while (!expr.empty() && expr.back() == ';') expr = trim(expr.substr(0, expr.size() - 1));
      if (!expr.empty() && !current_function_.empty()) {
        std::string v = value_of(expr, st.span);
        g_.add_fact(v, ret_id(current_function_, a_.rel_path), FlowMechanism::ReturnValue,
                    a_.rel_path, st.span);
      }
      return;
    }

    std::optional<Assignment> asg = parse_for_loop(s, a_.language);
    if (!asg) asg = parse_with_as(s);
    if (!asg) asg = parse_assignment(s);
    if (asg) {
      std::string rhs = trim(asg->rhs);
      if (!rhs.empty() && rhs.back() == ':') rhs = trim(rhs.substr(0, rhs.size() - 1));
      bool alias_rhs = is_bare_identifier(rhs);
      bool wrapper = false;
      if (!alias_rhs) {
        std::size_t k = 0;
        while (k < rhs.size() && is_ident_char(rhs[k])) ++k;
        wrapper = k > 0 && k < rhs.size() && rhs[k] == '(' &&
                  callable_aliases_.count(rhs.substr(0, k)) > 0;
      }
      std::string rv = value_of(rhs, st.span, wrapper);
      std::string lv = g_.ensure_var(a_.rel_path, asg->lhs, st.span);
      g_.add_fact(rv, lv, alias_rhs ? FlowMechanism::Alias : FlowMechanism::Assignment,
                  a_.rel_path, st.span);
      if (is_dotted_path(rhs)) callable_aliases_[asg->lhs] = rhs;
      return;
    }

    // Bare statement: still link calls of defined functions / aliases.
    link_calls(s, st.span, "");
  }
};

// Flattens string-valued config entries to (key, value) pairs.
void collect_config_pairs(const Artifact& a, std::vector<std::pair<std::string, std::string>>& out) {
  if (a.language == "json") {
    json doc = json::parse(plain_text(a), nullptr, false);
    if (doc.is_discarded()) return;
    std::vector<std::pair<std::string, const json*>> stack{{"", &doc}};
    while (!stack.empty()) {
      auto [key, node] = stack.back();
      stack.pop_back();
      if (node->is_object()) {
        for (auto it = node->begin(); it != node->end(); ++it) stack.push_back({it.key(), &*it});
      } else if (node->is_array()) {
        for (const auto& item : *node) stack.push_back({key, &item});
      } else if (node->is_string() && !key.empty()) {
        out.emplace_back(key, node->get<std::string>());
      }
    }
    std::sort(out.begin(), out.end());
    return;
  }
  // yaml / toml-ish: one "key: value" or "key = value" pair per line.
  std::string analysis = analysis_text(a);
  int line_no = 0;
  for (const auto& line : split(analysis, '\n')) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '-') continue;
    std::size_t i = 0;
    while (i < s.size() && (is_ident_char(s[i]) || s[i] == '.' || s[i] == '-')) ++i;
    if (i == 0 || i >= s.size()) continue;
    std::string key = s.substr(0, i);
    std::size_t j = i;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j >= s.size() || (s[j] != ':' && s[j] != '=')) continue;
    std::string value = trim(s.substr(j + 1));
    if (is_string_literal(value)) value = literal_inner(value);
    if (value.empty()) continue;
    out.emplace_back(key, value);
  }
}

}  // namespace

FlowGraph track_flow(const SkillPackage& pkg) {
  FlowGraph g;

  // Pass 1: function definitions across the package (name-based linking).
  std::map<std::string, FuncDef> funcs;
  std::map<std::string, StatementScan> scans;
  for (const auto& a : pkg.artifacts) {
    if (a.kind != ArtifactKind::Script || (a.language != "python" && a.language != "javascript"))
      continue;
    StatementScan scan = split_statements(analysis_text(a));
    if (scan.degraded) {
      g.degraded_artifacts.push_back(a.rel_path);
      continue;
    }
    for (const auto& st : scan.statements)
      if (auto def = parse_func_def(st.text))
        funcs.emplace(def->first, FuncDef{a.rel_path, def->second});
    scans.emplace(a.rel_path, std::move(scan));
  }

  // Pass 2: per-artifact statement processing.
  for (const auto& a : pkg.artifacts) {
    auto it = scans.find(a.rel_path);
    if (it == scans.end()) continue;
    ArtifactTracker tracker(g, a, funcs);
    tracker.run(it->second);
  }

  // Pass 3: inter-artifact references from config/manifest keys (length >= 4).
  for (const auto& a : pkg.artifacts) {
    if (a.kind != ArtifactKind::Config && a.kind != ArtifactKind::Manifest) continue;
    std::vector<std::pair<std::string, std::string>> pairs;
    collect_config_pairs(a, pairs);
    for (const auto& [key, value] : pairs) {
      if (key.size() < 4) continue;
      // Collect referencing values first: creating the config literal can
      // reallocate the value store.
      struct Ref {
        std::string id;
        std::string artifact;
        Span span;
      };
      std::vector<Ref> refs;
      for (const auto& v : g.values) {
        if (v.origin_artifact == a.rel_path) continue;
        if (v.kind == ValueEntity::Abstract && (contains_word(v.text, key) || v.text == key))
          refs.push_back({v.value_id, v.origin_artifact, v.origin_span});
      }
      if (refs.empty()) continue;
      std::string vconf = g.ensure_literal(a.rel_path, value, {1, 1});
      for (const auto& ref : refs)
        g.add_fact(vconf, ref.id, FlowMechanism::InterArtifactReference, ref.artifact, ref.span);
    }
  }
  return g;
}

// --- Operand resolution ----------------------------------------------------------

namespace {

bool path_shaped(const std::string& s) {
  if (s.empty()) return false;
  if (s[0] == '/' || s[0] == '~') return true;
  if (s.rfind("./", 0) == 0 || s.rfind("../", 0) == 0) return true;
  if (s.size() >= 3 && std::isalpha(static_cast<unsigned char>(s[0])) && s[1] == ':' &&
      (s[2] == '\\' || s[2] == '/'))
    return true;
  return false;
}

bool url_shaped(const std::string& s) {
  for (const char* scheme : {"http://", "https://", "ws://", "wss://", "ftp://"})
    if (s.rfind(scheme, 0) == 0) return true;
  return false;
}

ObjectClass classify_literal(const std::string& inner, const OperandLabeler& labeler,
                             std::set<std::string>& labels) {
  for (const auto& l : labeler.labels_for_value(inner)) labels.insert(l);
  if (labeler.is_credential(inner)) return ObjectClass::Secret;
  if (url_shaped(inner)) {
    labels.insert("remote_endpoint");
    return ObjectClass::Endpoint;
  }
  if (path_shaped(inner)) return ObjectClass::Path;
  return ObjectClass::Literal;
}

// Subtypes whose result carries data onward (reads, downloads, transforms).
bool source_subtype(const std::string& subtype) {
  static const std::set<std::string> sources = {
      "file_read", "credential_file_access", "env_read",      "download",
      "outbound_connection", "encrypt",      "decrypt",       "encode",
      "hash_compute"};
  return sources.count(subtype) > 0;
}

}  // namespace

OperandResolution resolve_operands(const std::vector<SsoRecord>& records, const SkillPackage& pkg,
                                   FlowGraph& graph, const OperandLabeler& labeler) {
  OperandResolution res;
  std::map<std::string, std::size_t> op_index;
  std::set<std::string> seen_bindings;
  std::set<std::string> seen_values;

  auto bind_value = [&](const std::string& operand_id, const std::string& value_id) {
    std::string key = operand_id + "|" + value_id;
    if (seen_values.insert(key).second) res.operand_values.emplace_back(operand_id, value_id);
  };

  for (const auto& rec : records) {
    const Artifact* artifact = pkg.find(rec.artifact);
    if (!artifact) continue;
    std::vector<std::string> bound_targets;  // values carrying this record's data

    for (const auto& ref : rec.operand_refs) {
      std::string norm = strip_ws(ref.raw_expr);
      if (norm.empty()) continue;
      std::string oid = short_id('o', rec.artifact + "|" + norm);

      OperandObject* op;
      auto it = op_index.find(oid);
      if (it == op_index.end()) {
        OperandObject fresh;
        fresh.operand_id = oid;
        fresh.slot_role = ref.slot;
        fresh.raw_expr = ref.raw_expr;
        fresh.defining_artifact = rec.artifact;
        op_index[oid] = res.operands.size();
        res.operands.push_back(std::move(fresh));
        op = &res.operands.back();
      } else {
        op = &res.operands[it->second];
      }

      std::string bkey = rec.record_id + "|" + ref.slot + "|" + oid;
      if (seen_bindings.insert(bkey).second) res.bindings.push_back({rec.record_id, ref.slot, oid});

      for (const auto& l : labeler.labels_for_text(ref.raw_expr)) op->labels.insert(l);

      std::string trimmed = trim(ref.raw_expr);
      std::string bound;

      if (is_string_literal(trimmed)) {
        std::string inner = literal_inner(trimmed);
        std::set<std::string> labels;
        ObjectClass cls = classify_literal(inner, labeler, labels);
        if (op->object_class == ObjectClass::Unknown) op->object_class = cls;
        for (const auto& l : labels) op->labels.insert(l);
        // A path naming a package artifact grounds its value in that artifact.
        std::string value_home = pkg.find(inner) ? inner : rec.artifact;
        bound = graph.ensure_literal(value_home, inner, ref.span);
        bind_value(oid, bound);
      } else if (is_bare_identifier(trimmed)) {
        std::string vopnd =
            graph.ensure_opnd_value(rec.artifact, rec.record_id, ref.slot, ref.raw_expr, ref.span);
        bind_value(oid, vopnd);
        bound = vopnd;
        if (graph.known_var(rec.artifact, trimmed)) {
          std::string vvar = graph.var_id(rec.artifact, trimmed);
          graph.add_fact(vvar, vopnd, FlowMechanism::ParameterPass, rec.artifact, ref.span);
          // Traced concrete definitions classify the operand; flow stays on
          // the variable chain.
          auto concretes = graph.trace_concrete_sources(vvar);
          if (!concretes.empty()) {
            const ValueEntity* cv = graph.value(concretes.front());
            std::set<std::string> labels;
            ObjectClass cls = classify_literal(cv->text, labeler, labels);
            // Only shape-bearing definitions classify the operand; a plain
            // literal somewhere upstream is not a resolution.
            if (op->object_class == ObjectClass::Unknown &&
                (cls == ObjectClass::Secret || cls == ObjectClass::Endpoint ||
                 cls == ObjectClass::Path))
              op->object_class = cls;
            for (const auto& l : labels) op->labels.insert(l);
          }
        }
      } else {
        std::string vopnd =
            graph.ensure_opnd_value(rec.artifact, rec.record_id, ref.slot, ref.raw_expr, ref.span);
        bind_value(oid, vopnd);
        bound = vopnd;
        bool classified = false;
        for (const auto& lit : inner_string_literals(ref.raw_expr)) {
          if (lit.empty()) continue;
          std::set<std::string> labels;
          ObjectClass cls = classify_literal(lit, labeler, labels);
          if (!classified && cls != ObjectClass::Literal) {
            if (op->object_class == ObjectClass::Unknown) op->object_class = cls;
            classified = true;
          }
          for (const auto& l : labels) op->labels.insert(l);
          std::string vlit = graph.ensure_literal(rec.artifact, lit, ref.span);
          graph.add_fact(vlit, vopnd, FlowMechanism::Assignment, rec.artifact, ref.span);
          bind_value(oid, vlit);
        }
        for (const auto& ident : referenced_identifiers(ref.raw_expr)) {
          if (graph.known_var(rec.artifact, ident))
            graph.add_fact(graph.var_id(rec.artifact, ident), vopnd, FlowMechanism::ParameterPass,
                           rec.artifact, ref.span);
        }
        // Command-style operand text: pick out URL/path tokens as concrete values.
        for (const auto& tok : split_ws(ref.raw_expr)) {
          if (!url_shaped(tok) && !path_shaped(tok)) continue;
          std::set<std::string> labels;
          ObjectClass cls = classify_literal(tok, labeler, labels);
          if (op->object_class == ObjectClass::Unknown) op->object_class = cls;
          for (const auto& l : labels) op->labels.insert(l);
          std::string vlit = graph.ensure_literal(rec.artifact, tok, ref.span);
          graph.add_fact(vlit, vopnd, FlowMechanism::Assignment, rec.artifact, ref.span);
          bind_value(oid, vlit);
        }
      }
      if (!bound.empty()) bound_targets.push_back(bound);
    }

    // Reads and transforms pass their result into the enclosing expression.
    if (!bound_targets.empty() && source_subtype(rec.sso_subtype)) {
      const auto& exprs = graph.exprs_of(rec.artifact);
      std::string best;
      int best_size = -1;
      for (const auto& [vid, span] : exprs) {
        if (span.start_line > rec.span.start_line || span.end_line < rec.span.end_line) continue;
        const ValueEntity* v = graph.value(vid);
        if (!v || v->text.find('(') == std::string::npos) continue;
        int size = span.end_line - span.start_line;
        if (best_size == -1 || size < best_size) {
          best = vid;
          best_size = size;
        }
      }
      if (!best.empty())
        for (const auto& from : bound_targets)
          if (from != best)
            graph.add_fact(from, best, FlowMechanism::ReturnValue, rec.artifact, rec.span);
    }
  }
  return res;
}

// --- LLM-assisted operand inference ------------------------------------------------

std::set<std::string> default_label_vocab() {
  return {"secret", "endpoint", "command", "path", "payload", "packageSpec"};
}

std::set<std::string> load_label_vocab(const std::string& path) {
  std::set<std::string> out;
  bool header = false;
  for (auto& raw : split(read_file(path), '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      if (s != "sso-label-vocab v1") throw IoError("label vocab: missing 'sso-label-vocab v1' header");
      header = true;
      continue;
    }
    out.insert(s);
  }
  if (!header) throw IoError("label vocab: empty file");
  return out;
}

InferenceStats infer_operands(std::vector<OperandObject>& operands, const SkillPackage& pkg,
                              FlowGraph& graph, LlmBackend& backend, double confidence_floor,
                              const std::set<std::string>& label_vocab) {
  InferenceStats stats;
  std::vector<OperandObject*> unresolved;
  for (auto& op : operands)
    if (op.object_class == ObjectClass::Unknown) unresolved.push_back(&op);
  if (unresolved.empty()) return stats;

  json req;
  req["task"] = "operand_inference";
  req["package"] = pkg.id;
  json ops = json::array();
  for (const auto* op : unresolved)
    ops.push_back({{"operand_id", op->operand_id},
                   {"slot", op->slot_role},
                   {"raw_expr", op->raw_expr},
                   {"artifact", op->defining_artifact}});
  req["unresolved_operands"] = ops;
  json vals = json::array();
  for (const auto& v : graph.values)
    vals.push_back({{"value_id", v.value_id},
                    {"kind", v.kind == ValueEntity::Concrete ? "concrete" : "abstract"},
                    {"text", v.text},
                    {"artifact", v.origin_artifact}});
  req["values"] = vals;
  req["label_vocabulary"] = std::vector<std::string>(label_vocab.begin(), label_vocab.end());

  LlmRequest wire;
  wire.system =
      "You normalize operands for a static analyzer. Respond with one JSON object:\n"
      "{\"labels\": [{\"operand_id\": \"...\", \"label\": \"...\", \"confidence\": 0.0}],\n"
      " \"flows\": [{\"from\": \"...\", \"to\": \"...\", \"confidence\": 0.0}]}\n"
      "Labels must come from the given vocabulary. Flow endpoints must be existing value ids.\n"
      "Propose nothing you cannot ground in the given operands and values.";
  wire.user = req.dump(2);

  std::string body;
  try {
    body = backend.complete(wire);
  } catch (const BackendUnavailable&) {
    return stats;  // symbolic facts stand alone
  }

  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    ++stats.rejected;
    return stats;
  }

  std::map<std::string, OperandObject*> by_id;
  for (auto* op : unresolved) by_id[op->operand_id] = op;

  if (doc.contains("labels") && doc["labels"].is_array()) {
    for (const auto& item : doc["labels"]) {
      std::string oid = item.value("operand_id", "");
      std::string label = item.value("label", "");
      double conf = item.value("confidence", 0.0);
      auto it = by_id.find(oid);
      if (it == by_id.end() || label_vocab.count(label) == 0 || conf < confidence_floor) {
        ++stats.rejected;
        continue;
      }
      it->second->labels.insert(label);
      ++stats.labels_applied;
    }
  }
  if (doc.contains("flows") && doc["flows"].is_array()) {
    for (const auto& item : doc["flows"]) {
      std::string from = item.value("from", "");
      std::string to = item.value("to", "");
      double conf = item.value("confidence", 0.0);
      if (!graph.has_value(from) || !graph.has_value(to) || conf < confidence_floor) {
        ++stats.rejected;
        continue;
      }
      graph.add_fact(from, to, FlowMechanism::Inferred, pkg.id, {1, 1});
      ++stats.flows_applied;
    }
  }
  return stats;
}

}  // namespace skillsentry
