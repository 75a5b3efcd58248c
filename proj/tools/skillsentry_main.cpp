// skillsentry: scan agent-skill packages for malicious cross-artifact behavior.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skillsentry/pipeline.hpp"
#include "skillsentry/util.hpp"

namespace fs = std::filesystem;
using namespace skillsentry;

#ifndef SKILLSENTRY_DATA_DIR
#define SKILLSENTRY_DATA_DIR "data"
#endif

namespace {

constexpr int kExitBenign = 0;
constexpr int kExitMalicious = 1;
constexpr int kExitSuspicious = 2;
constexpr int kExitError = 3;

struct CommonOpts {
  std::string config_file;
  std::string rules_file;
  std::string patterns_file;
  std::string taxonomy_file;
  std::string credential_paths_file;
  std::string path_labels_file;
  std::string label_vocab_file;
  std::string llm = "off";  // off | on | fixture:<dir>
  std::string llm_endpoint;
  std::string llm_model;
  bool serial = false;
  std::vector<std::string> disable;  // ablation switches
};

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const auto& raw : split(read_file(path), '\n')) {
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) throw IoError("config: expected key=value: " + s);
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return kv;
}

// Precedence: flags > config file > environment > data-dir defaults.
void apply_config(CommonOpts& o) {
  if (o.config_file.empty()) {
    const char* env = std::getenv("SKILLSENTRY_CONFIG");
    if (env) o.config_file = env;
  }
  std::map<std::string, std::string> kv;
  if (!o.config_file.empty()) kv = read_config_file(o.config_file);
  auto fill = [&kv](std::string& slot, const char* key) {
    if (slot.empty() && kv.count(key)) slot = kv[key];
  };
  fill(o.rules_file, "rules");
  fill(o.patterns_file, "patterns");
  fill(o.taxonomy_file, "taxonomy");
  fill(o.credential_paths_file, "credential_paths");
  fill(o.path_labels_file, "path_labels");
  fill(o.label_vocab_file, "label_vocab");
  fill(o.llm_endpoint, "llm_endpoint");
  fill(o.llm_model, "llm_model");
  if (o.llm == "off" && kv.count("llm")) o.llm = kv["llm"];

  std::string data_dir = SKILLSENTRY_DATA_DIR;
  if (kv.count("data_dir")) data_dir = kv["data_dir"];
  if (o.rules_file.empty()) o.rules_file = data_dir + "/seed.rules";
  if (o.patterns_file.empty()) o.patterns_file = data_dir + "/seed.patterns";
  if (o.taxonomy_file.empty()) o.taxonomy_file = data_dir + "/taxonomy.txt";
  if (o.credential_paths_file.empty()) o.credential_paths_file = data_dir + "/credential_paths.txt";
  if (o.path_labels_file.empty()) o.path_labels_file = data_dir + "/path_labels.txt";
  if (o.label_vocab_file.empty()) o.label_vocab_file = data_dir + "/label_vocab.txt";
  if (o.llm_model.empty()) o.llm_model = "default";
}

ScanConfig build_scan_config(const CommonOpts& o) {
  ScanConfig cfg;
  cfg.taxonomy = Taxonomy::load(o.taxonomy_file);
  cfg.rules = load_rule_base(o.rules_file, cfg.taxonomy);
  cfg.patterns = load_patterns(o.patterns_file);
  cfg.labeler = OperandLabeler::load(o.credential_paths_file, o.path_labels_file);
  cfg.label_vocab = load_label_vocab(o.label_vocab_file);
  cfg.parallel = !o.serial;

  if (o.llm == "off") {
    cfg.llm.kind = LlmMode::Off;
  } else if (o.llm == "on") {
    cfg.llm.kind = LlmMode::Http;
    cfg.llm_endpoint = o.llm_endpoint;
    cfg.llm_model = o.llm_model;
    if (cfg.llm_endpoint.empty())
      throw IoError("llm=on requires llm_endpoint (flag or config file)");
  } else if (o.llm.rfind("fixture:", 0) == 0) {
    cfg.llm.kind = LlmMode::Fixture;
    cfg.llm.fixture_dir = o.llm.substr(8);
  } else {
    throw IoError("--llm must be off, on, or fixture:<dir>");
  }

  for (const auto& d : o.disable) {
    if (d == "symbolic-extractor") cfg.symbolic_extractor = false;
    else if (d == "neural-extractor") cfg.neural_extractor = false;
    else if (d == "symbolic-reasoning") cfg.symbolic_reasoning = false;
    else if (d == "neural-reasoning") cfg.neural_reasoning = false;
    else throw IoError("unknown --disable value: " + d);
  }
  return cfg;
}

int verdict_exit_code(const std::string& verdict) {
  if (verdict == "malicious") return kExitMalicious;
  if (verdict == "suspicious") return kExitSuspicious;
  return kExitBenign;
}

void write_candidates(const std::string& path, const std::vector<CandidatePattern>& candidates) {
  if (candidates.empty()) return;
  std::string out;
  if (fs::exists(path)) out = read_file(path);
  if (out.empty()) out = "sdg-candidates v1\n";
  for (const auto& c : candidates) {
    out += "\n[candidate]\n";
    out += "status = " + c.status + "\n";
    out += "skeleton = " + c.skeleton + "\n";
    for (const auto& occ : c.occurrences) out += "occurrence = " + occ + "\n";
  }
  write_file(path, out);
}

int cmd_scan(const CommonOpts& common, const std::string& path, const std::string& format,
             bool emit_graph, const std::string& out_file) {
  ScanConfig cfg = build_scan_config(common);
  ScanResult result = scan_path(path, cfg);

  std::string rendered =
      format == "json" ? result.report.to_json_text() : result.report.to_human_text();
  if (out_file.empty()) {
    std::cout << rendered;
  } else {
    write_file(out_file, rendered);
  }

  if (emit_graph) {
    std::string stem = out_file.empty() ? "skillsentry-scan" : out_file;
    write_file(stem + ".sdg.json", sdg_to_json(result.sdg));
    write_file(stem + ".facts", result.facts.to_text());
  }
  std::string cand_path =
      (out_file.empty() ? fs::path("candidates.patterns")
                        : fs::path(out_file).parent_path() / "candidates.patterns")
          .string();
  write_candidates(cand_path, result.candidates);

  return verdict_exit_code(result.report.verdict);
}

int cmd_batch(const CommonOpts& common, const std::string& corpus_dir, int jobs,
              const std::string& feedback, const std::string& summary_format,
              const std::string& out_dir, std::vector<std::string> held_out) {
  ScanConfig cfg = build_scan_config(common);

  std::vector<std::string> package_dirs;
  for (const auto& entry : fs::directory_iterator(corpus_dir))
    if (entry.is_directory()) package_dirs.push_back(entry.path().string());
  std::sort(package_dirs.begin(), package_dirs.end());
  if (package_dirs.empty()) {
    std::cerr << "skillsentry: no package directories under " << corpus_dir << "\n";
    return kExitError;
  }

  BatchOptions opts;
  opts.jobs = jobs;
  opts.feedback = feedback == "on";
  opts.held_out_dirs = std::move(held_out);
  // Fallback: the rule base may name its validation corpus (a directory of
  // benign packages).
  if (opts.held_out_dirs.empty() && !cfg.rules.held_out_path.empty() &&
      fs::is_directory(cfg.rules.held_out_path)) {
    for (const auto& entry : fs::directory_iterator(cfg.rules.held_out_path))
      if (entry.is_directory()) opts.held_out_dirs.push_back(entry.path().string());
  }

  BatchResult batch = batch_scan(package_dirs, cfg, opts);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < batch.rows.size(); ++i) {
      if (!batch.rows[i].ok) continue;
      std::string name = fs::path(batch.rows[i].package_dir).filename().string();
      write_file((fs::path(out_dir) / (name + ".report.json")).string(),
                 batch.scans[i].report.to_json_text());
    }
    std::string summary = summary_format == "json" ? summary_json(batch) : summary_csv(batch);
    std::string ext = summary_format == "json" ? "json" : "csv";
    write_file((fs::path(out_dir) / ("summary." + ext)).string(), summary);
    if (opts.feedback)
      write_file((fs::path(out_dir) / "promoted.rules").string(),
                 promoted_rules_text(batch.rules_after));
    std::vector<CandidatePattern> all_candidates;
    for (const auto& scan : batch.scans)
      all_candidates.insert(all_candidates.end(), scan.candidates.begin(),
                            scan.candidates.end());
    write_candidates((fs::path(out_dir) / "candidates.patterns").string(), all_candidates);
  } else {
    std::cout << (summary_format == "json" ? summary_json(batch) : summary_csv(batch));
  }

  std::size_t ok = 0;
  for (const auto& r : batch.rows) ok += r.ok ? 1 : 0;
  return ok == 0 ? kExitError : kExitBenign;
}

int cmd_rules(const CommonOpts& common, const std::string& action,
              const std::vector<std::string>& files) {
  Taxonomy tax = Taxonomy::load(common.taxonomy_file);
  if (action == "validate" || action == "list") {
    std::string target = files.empty() ? common.rules_file : files[0];
    RuleBase rb = load_rule_base(target, tax);
    if (action == "list") {
      for (const auto& r : rb.rules)
        std::cout << r.rule_id << "  [" << (r.origin == RuleOrigin::Seed ? "seed" : "promoted")
                  << "]  " << to_string(r.category) << "/" << r.sso_subtype << "  trigger: "
                  << r.trigger.text << "\n";
    } else {
      std::cout << "ok: " << rb.rules.size() << " rules, version " << rb.version << "\n";
    }
    return kExitBenign;
  }
  if (action == "diff") {
    if (files.size() != 2) {
      std::cerr << "skillsentry rules diff <old> <new>\n";
      return kExitError;
    }
    RuleBase a = load_rule_base(files[0], tax);
    RuleBase b = load_rule_base(files[1], tax);
    for (const auto& r : b.rules)
      if (!a.find(r.rule_id)) std::cout << "+ " << r.rule_id << "  trigger: " << r.trigger.text << "\n";
    for (const auto& r : a.rules)
      if (!b.find(r.rule_id)) std::cout << "- " << r.rule_id << "\n";
    return kExitBenign;
  }
  std::cerr << "skillsentry rules <list|validate|diff> [files...]\n";
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skillsentry: neuro-symbolic scanner for agent skill packages"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_file, "config file (key=value lines)");

  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--rules", common.rules_file, "rule file");
    cmd->add_option("--patterns", common.patterns_file, "pattern file");
    cmd->add_option("--taxonomy", common.taxonomy_file, "taxonomy file");
    cmd->add_option("--credential-paths", common.credential_paths_file, "credential path globs");
    cmd->add_option("--path-labels", common.path_labels_file, "path label rules");
    cmd->add_option("--label-vocab", common.label_vocab_file, "label vocabulary");
    cmd->add_option("--llm", common.llm, "off | on | fixture:<dir>");
    cmd->add_option("--llm-endpoint", common.llm_endpoint, "HTTP backend endpoint");
    cmd->add_option("--llm-model", common.llm_model, "model tag");
    cmd->add_flag("--serial", common.serial, "disable OpenMP parallel stages");
    cmd->add_option("--disable", common.disable,
                    "ablate: symbolic-extractor, neural-extractor, symbolic-reasoning, "
                    "neural-reasoning");
  };

  // scan
  auto* scan = app.add_subcommand("scan", "scan one skill package");
  std::string scan_path_arg, scan_format = "human", scan_out;
  bool emit_graph = false;
  scan->add_option("path", scan_path_arg, "package directory or archive")->required();
  scan->add_option("--format", scan_format, "human | json")
      ->check(CLI::IsMember({"human", "json"}));
  scan->add_flag("--emit-graph", emit_graph, "write SDG JSON dump and fact file");
  scan->add_option("--out", scan_out, "write the report to this file");
  add_common(scan);

  // batch
  auto* batch = app.add_subcommand("batch", "scan every package under a corpus directory");
  std::string corpus_dir, feedback = "off", summary_format = "csv", out_dir;
  int jobs = 0;
  std::vector<std::string> held_out_dirs;
  batch->add_option("corpus", corpus_dir, "directory of package directories")->required();
  batch->add_option("--jobs", jobs, "max concurrent scans");
  batch->add_option("--feedback", feedback, "on | off: run rule promotion after the scans")
      ->check(CLI::IsMember({"on", "off"}));
  batch->add_option("--summary", summary_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  batch->add_option("--out-dir", out_dir, "write reports, summary, and promoted.rules here");
  batch->add_option("--held-out", held_out_dirs, "benign package dir(s) for promotion validation");
  add_common(batch);

  // rules
  auto* rules = app.add_subcommand("rules", "list, validate, or diff rule files");
  std::string rules_action;
  std::vector<std::string> rules_files;
  rules->add_option("action", rules_action, "list | validate | diff")->required();
  rules->add_option("files", rules_files, "rule files");
  add_common(rules);

  CLI11_PARSE(app, argc, argv);

  try {
    apply_config(common);
    if (scan->parsed()) return cmd_scan(common, scan_path_arg, scan_format, emit_graph, scan_out);
    if (batch->parsed())
      return cmd_batch(common, corpus_dir, jobs, feedback, summary_format, out_dir,
                       held_out_dirs);
    if (rules->parsed()) return cmd_rules(common, rules_action, rules_files);
  } catch (const RuleParseError& e) {
    std::cerr << "skillsentry: " << e.what() << "\n";
    return kExitError + 1;
  } catch (const std::exception& e) {
    std::cerr << "skillsentry: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
