#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace skillsentry {

enum class SsoCategory { Exec, Net, File, Env, Install, Crypto, PromptSideEffect };

const char* to_string(SsoCategory c);
/// Type string used on records and in the taxonomy ("exec", "net", ...).
const char* type_of(SsoCategory c);
SsoCategory category_from_string(const std::string& s);  // throws std::invalid_argument
SsoCategory category_from_type(const std::string& type);

/// The two-level SSO taxonomy: type -> ordered subtype list.
class Taxonomy {
 public:
  static Taxonomy parse(const std::string& text);  // throws IoError on bad header
  static Taxonomy load(const std::string& path);
  static Taxonomy builtin();  // the seed taxonomy shipped with the scanner

  bool contains(const std::string& type, const std::string& subtype) const;
  const std::vector<std::string>& subtypes(const std::string& type) const;
  const std::vector<std::string>& types() const { return type_order_; }

  /// Deterministic rendering used in prompts and for round-trip tests.
  std::string to_text() const;

 private:
  std::vector<std::string> type_order_;
  std::map<std::string, std::vector<std::string>> subtypes_;
};

}  // namespace skillsentry
