#pragma once

#include <string>
#include <utility>
#include <vector>

namespace skillsentry {

struct ArchiveEntry {
  std::string path;   // entry path as stored, directories excluded
  std::string bytes;  // raw entry content
};

bool is_zip_path(const std::string& path);
bool is_tar_gz_path(const std::string& path);

/// Reads a .zip archive (stored and deflate entries). Throws IoError on
/// malformed input.
std::vector<ArchiveEntry> read_zip(const std::string& path);

/// Reads a .tar.gz / .tgz archive (ustar, gzip-compressed). Throws IoError.
std::vector<ArchiveEntry> read_tar_gz(const std::string& path);

}  // namespace skillsentry
