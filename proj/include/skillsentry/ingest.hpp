#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillsentry/util.hpp"

namespace skillsentry {

enum class ArtifactKind { Prompt, Manifest, Config, Script, Documentation, Other };

const char* to_string(ArtifactKind k);
ArtifactKind artifact_kind_from_string(const std::string& s);

/// Language tags: python, javascript, shell, yaml, json, markdown, unknown.
using Language = std::string;

struct Artifact {
  std::string rel_path;
  ArtifactKind kind = ArtifactKind::Other;
  Language language = "unknown";
  std::vector<std::string> lines;  // 1-based indexing by convention: lines[i-1]
  std::uint64_t byte_len = 0;
  std::string newline = "\n";  // recorded newline convention
  bool trailing_newline = false;
  bool binary = false;

  /// Joins lines with the recorded newline convention.
  std::string text() const;
  /// Text of the inclusive 1-based line range, clamped to the artifact.
  std::string span_text(int start_line, int end_line) const;
  int line_count() const { return static_cast<int>(lines.size()); }
};

struct SkillPackage {
  std::string id;    // content hash over (rel_path, bytes), order-independent
  std::string root;  // directory or archive the package was loaded from
  std::vector<Artifact> artifacts;  // ordered by rel_path, unique

  const Artifact* find(const std::string& rel_path) const;
};

struct EmptyPackage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Assigns (kind, language) from path and leading bytes. Total function.
std::pair<ArtifactKind, Language> classify_artifact(const std::string& rel_path,
                                                    std::string_view first_bytes);

/// Loads every regular file under `root` (a directory, .zip, or .tar.gz).
/// Binary files (invalid UTF-8 above 1% of bytes) keep their byte length but
/// carry no lines. Throws IoError / EmptyPackage.
SkillPackage load_package(const std::string& root);

/// Builds a package from in-memory (rel_path, bytes) pairs; the loader and
/// tests share this path.
SkillPackage build_package(const std::string& root,
                           std::vector<std::pair<std::string, std::string>> files);

}  // namespace skillsentry
