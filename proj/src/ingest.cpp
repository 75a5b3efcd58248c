#include "skillsentry/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "skillsentry/archive.hpp"

namespace fs = std::filesystem;

namespace skillsentry {

const char* to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::Prompt: return "prompt";
    case ArtifactKind::Manifest: return "manifest";
    case ArtifactKind::Config: return "config";
    case ArtifactKind::Script: return "script";
    case ArtifactKind::Documentation: return "documentation";
    case ArtifactKind::Other: return "other";
  }
  return "other";
}

ArtifactKind artifact_kind_from_string(const std::string& s) {
  if (s == "prompt") return ArtifactKind::Prompt;
  if (s == "manifest") return ArtifactKind::Manifest;
  if (s == "config") return ArtifactKind::Config;
  if (s == "script") return ArtifactKind::Script;
  if (s == "documentation") return ArtifactKind::Documentation;
  return ArtifactKind::Other;
}

std::string Artifact::text() const {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += newline;
    out += lines[i];
  }
  if (trailing_newline && !lines.empty()) out += newline;
  return out;
}

std::string Artifact::span_text(int start_line, int end_line) const {
  std::string out;
  int n = line_count();
  start_line = std::max(1, start_line);
  end_line = std::min(n, end_line);
  for (int i = start_line; i <= end_line; ++i) {
    if (i > start_line) out += newline;
    out += lines[static_cast<std::size_t>(i - 1)];
  }
  return out;
}

const Artifact* SkillPackage::find(const std::string& rel_path) const {
  for (const auto& a : artifacts)
    if (a.rel_path == rel_path) return &a;
  return nullptr;
}

namespace {

std::string basename_of(const std::string& rel_path) {
  auto pos = rel_path.find_last_of('/');
  return pos == std::string::npos ? rel_path : rel_path.substr(pos + 1);
}

std::string extension_of(const std::string& name) {
  auto pos = name.find_last_of('.');
  if (pos == std::string::npos || pos == 0) return "";
  return to_lower(name.substr(pos));
}

std::pair<ArtifactKind, Language> classify_by_shebang(std::string_view first_bytes) {
  auto eol = first_bytes.find('\n');
  std::string line(first_bytes.substr(0, eol == std::string_view::npos ? first_bytes.size() : eol));
  if (line.rfind("#!", 0) != 0) return {ArtifactKind::Other, "unknown"};
  std::string lower = to_lower(line);
  if (lower.find("python") != std::string::npos) return {ArtifactKind::Script, "python"};
  if (lower.find("node") != std::string::npos) return {ArtifactKind::Script, "javascript"};
  for (const char* sh : {"bash", "/sh", " sh", "zsh", "dash"})
    if (lower.find(sh) != std::string::npos) return {ArtifactKind::Script, "shell"};
  return {ArtifactKind::Script, "unknown"};
}

// The replacement threshold: a file is binary once more than 1% of its bytes
// would decode to U+FFFD (NUL counts as replaceable).
bool looks_binary(std::string_view bytes) {
  if (bytes.empty()) return false;
  std::size_t bad = 0;
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t n = bytes.size();
  while (i < n) {
    unsigned char c = p[i];
    if (c == 0) {
      ++bad;
      ++i;
    } else if (c < 0x80) {
      ++i;
    } else {
      int len = 0;
      if ((c & 0xE0) == 0xC0) len = 2;
      else if ((c & 0xF0) == 0xE0) len = 3;
      else if ((c & 0xF8) == 0xF0) len = 4;
      if (len == 0) {
        ++bad;
        ++i;
        continue;
      }
      bool ok = i + len <= n;
      for (int k = 1; ok && k < len; ++k) ok = (p[i + k] & 0xC0) == 0x80;
      if (ok) {
        i += len;
      } else {
        ++bad;
        ++i;
      }
    }
  }
  return bad * 100 > n;
}

void split_lines(const std::string& bytes, Artifact& a) {
  std::size_t lf = 0, crlf = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] == '\n') {
      if (i > 0 && bytes[i - 1] == '\r') ++crlf;
      else ++lf;
    }
  }
  a.newline = (crlf > 0 && lf == 0) ? "\r\n" : "\n";
  a.trailing_newline = !bytes.empty() && bytes.back() == '\n';

  std::string cur;
  a.lines.clear();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    char c = bytes[i];
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r' && a.newline == "\r\n") cur.pop_back();
      a.lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) a.lines.push_back(cur);
}

}  // namespace

std::pair<ArtifactKind, Language> classify_artifact(const std::string& rel_path,
                                                    std::string_view first_bytes) {
  std::string base = basename_of(rel_path);

  // Priority 1: exact filenames.
  if (base == "SKILL.md") return {ArtifactKind::Prompt, "markdown"};
  if (base == "package.json" || base == "manifest.json") return {ArtifactKind::Manifest, "json"};
  if (base == "pyproject.toml") return {ArtifactKind::Manifest, "unknown"};

  // Priority 2: extension map.
  std::string ext = extension_of(base);
  if (ext == ".py") return {ArtifactKind::Script, "python"};
  if (ext == ".js" || ext == ".ts" || ext == ".mjs" || ext == ".cjs")
    return {ArtifactKind::Script, "javascript"};
  if (ext == ".sh" || ext == ".bash") return {ArtifactKind::Script, "shell"};
  if (ext == ".yaml" || ext == ".yml") return {ArtifactKind::Config, "yaml"};
  if (ext == ".json") return {ArtifactKind::Config, "json"};
  if (ext == ".toml") return {ArtifactKind::Config, "unknown"};
  if (ext == ".md" || ext == ".markdown") return {ArtifactKind::Documentation, "markdown"};

  // Priority 3: shebang sniffing for extensionless files.
  if (ext.empty()) {
    auto sniffed = classify_by_shebang(first_bytes);
    if (sniffed.first == ArtifactKind::Script) return sniffed;
  }

  return {ArtifactKind::Other, "unknown"};
}

SkillPackage build_package(const std::string& root,
                           std::vector<std::pair<std::string, std::string>> files) {
  if (files.empty()) throw EmptyPackage("package contains no files: " + root);

  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  files.erase(std::unique(files.begin(), files.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              files.end());

  SkillPackage pkg;
  pkg.root = root;

  // Order-independent content hash: hash of sorted per-file digests.
  std::string id_material;
  for (const auto& [rel, bytes] : files)
    id_material += sha256_hex(rel + "\0" + bytes) + "\n";
  pkg.id = sha256_hex(id_material);

  for (auto& [rel, bytes] : files) {
    Artifact a;
    a.rel_path = rel;
    a.byte_len = bytes.size();
    if (looks_binary(bytes)) {
      a.binary = true;
      a.kind = ArtifactKind::Other;
      a.language = "unknown";
    } else {
      auto [kind, lang] = classify_artifact(rel, std::string_view(bytes).substr(0, 256));
      a.kind = kind;
      a.language = lang;
      split_lines(bytes, a);
    }
    pkg.artifacts.push_back(std::move(a));
  }
  return pkg;
}

SkillPackage load_package(const std::string& root) {
  std::vector<std::pair<std::string, std::string>> files;
  std::error_code ec;
  auto status = fs::status(root, ec);
  if (ec || !fs::exists(status)) throw IoError("package root not found: " + root);

  if (fs::is_directory(status)) {
    for (auto it = fs::recursive_directory_iterator(root, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (!it->is_regular_file(ec)) continue;
      std::string rel = fs::relative(it->path(), root, ec).generic_string();
      files.emplace_back(rel, read_file(it->path().string()));
    }
    if (ec) throw IoError("cannot walk package root: " + root + ": " + ec.message());
  } else if (is_zip_path(root)) {
    for (auto& e : read_zip(root)) files.emplace_back(e.path, std::move(e.bytes));
  } else if (is_tar_gz_path(root)) {
    for (auto& e : read_tar_gz(root)) files.emplace_back(e.path, std::move(e.bytes));
  } else {
    throw IoError("unsupported package root (need directory, .zip, or .tar.gz): " + root);
  }

  return build_package(root, std::move(files));
}

}  // namespace skillsentry
