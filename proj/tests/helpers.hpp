#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillsentry/ingest.hpp"
#include "skillsentry/pipeline.hpp"
#include "skillsentry/rules.hpp"
#include "skillsentry/taxonomy.hpp"

#ifndef SKILLSENTRY_FIXTURES_DIR
#define SKILLSENTRY_FIXTURES_DIR "fixtures"
#endif
#ifndef SKILLSENTRY_SEED_DATA_DIR
#define SKILLSENTRY_SEED_DATA_DIR "data"
#endif
#ifndef SKILLSENTRY_CLI_PATH
#define SKILLSENTRY_CLI_PATH "skillsentry"
#endif

namespace skillsentry::test {

inline std::string fixtures_dir() { return SKILLSENTRY_FIXTURES_DIR; }
inline std::string data_dir() { return SKILLSENTRY_SEED_DATA_DIR; }
inline std::string cli_path() { return SKILLSENTRY_CLI_PATH; }

inline std::string fixture(const std::string& rel) { return fixtures_dir() + "/" + rel; }

inline Taxonomy seed_taxonomy() { return Taxonomy::load(data_dir() + "/taxonomy.txt"); }

inline RuleBase seed_rules() {
  return load_rule_base(data_dir() + "/seed.rules", seed_taxonomy());
}

inline std::vector<Pattern> seed_patterns() {
  return load_patterns(data_dir() + "/seed.patterns");
}

inline ScanConfig offline_config() {
  ScanConfig cfg;
  cfg.taxonomy = seed_taxonomy();
  cfg.rules = seed_rules();
  cfg.patterns = seed_patterns();
  return cfg;
}

/// In-memory package from (rel_path, content) pairs.
inline SkillPackage mem_package(std::vector<std::pair<std::string, std::string>> files,
                                const std::string& root = "<mem>") {
  return build_package(root, std::move(files));
}

/// Scratch directory unique to this test binary run.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skillsentry-tests-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace skillsentry::test
