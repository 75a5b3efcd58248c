#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skillsentry {

/// SHA-256 of a byte buffer, lowercase hex.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(std::string_view s);

/// Typed short node/record id: "<prefix>:<first 16 hex chars of sha256>".
std::string short_id(char prefix, std::string_view material);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Collapse all whitespace runs to nothing (used for normalization-stable ids).
std::string strip_ws(std::string_view s);

/// Case-insensitive glob with '*' wildcards only.
bool glob_match(std::string_view pattern, std::string_view text);

inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '$';
}

/// True when s occurs in text at identifier boundaries (neither neighbour is
/// an identifier character).
bool contains_word(std::string_view text, std::string_view word);

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);  // throws IoError
void write_file(const std::string& path, std::string_view content);

}  // namespace skillsentry
