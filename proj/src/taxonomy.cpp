#include "skillsentry/taxonomy.hpp"

#include <sstream>
#include <stdexcept>

#include "skillsentry/util.hpp"

namespace skillsentry {

const char* to_string(SsoCategory c) {
  switch (c) {
    case SsoCategory::Exec: return "Exec";
    case SsoCategory::Net: return "Net";
    case SsoCategory::File: return "File";
    case SsoCategory::Env: return "Env";
    case SsoCategory::Install: return "Install";
    case SsoCategory::Crypto: return "Crypto";
    case SsoCategory::PromptSideEffect: return "PromptSideEffect";
  }
  return "Exec";
}

const char* type_of(SsoCategory c) {
  switch (c) {
    case SsoCategory::Exec: return "exec";
    case SsoCategory::Net: return "net";
    case SsoCategory::File: return "file";
    case SsoCategory::Env: return "env";
    case SsoCategory::Install: return "install";
    case SsoCategory::Crypto: return "crypto";
    case SsoCategory::PromptSideEffect: return "prompt_side_effect";
  }
  return "exec";
}

SsoCategory category_from_string(const std::string& s) {
  for (SsoCategory c : {SsoCategory::Exec, SsoCategory::Net, SsoCategory::File, SsoCategory::Env,
                        SsoCategory::Install, SsoCategory::Crypto, SsoCategory::PromptSideEffect})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown SSO category: " + s);
}

SsoCategory category_from_type(const std::string& type) {
  for (SsoCategory c : {SsoCategory::Exec, SsoCategory::Net, SsoCategory::File, SsoCategory::Env,
                        SsoCategory::Install, SsoCategory::Crypto, SsoCategory::PromptSideEffect})
    if (type == type_of(c)) return c;
  throw std::invalid_argument("unknown SSO type: " + type);
}

Taxonomy Taxonomy::parse(const std::string& text) {
  Taxonomy t;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (!header_seen) {
      if (s != "sso-taxonomy v1") throw IoError("taxonomy: missing 'sso-taxonomy v1' header");
      header_seen = true;
      continue;
    }
    auto colon = s.find(':');
    if (colon == std::string::npos) throw IoError("taxonomy: malformed line: " + s);
    std::string type = trim(s.substr(0, colon));
    category_from_type(type);  // validates
    std::vector<std::string> subs;
    for (auto& part : split(s.substr(colon + 1), ',')) {
      std::string sub = trim(part);
      if (!sub.empty()) subs.push_back(sub);
    }
    t.type_order_.push_back(type);
    t.subtypes_[type] = std::move(subs);
  }
  if (!header_seen) throw IoError("taxonomy: empty file");
  return t;
}

Taxonomy Taxonomy::load(const std::string& path) { return parse(read_file(path)); }

Taxonomy Taxonomy::builtin() {
  return parse(
      "sso-taxonomy v1\n"
      "exec: shell_interpreter_execution, process_spawn, code_eval\n"
      "net: outbound_connection, download, socket_connect\n"
      "file: file_read, file_write, file_delete, credential_file_access\n"
      "env: env_read\n"
      "install: package_install, remote_script_install\n"
      "crypto: hash_compute, encrypt, decrypt, encode, key_load\n"
      "prompt_side_effect: implied_exfiltration, implied_execution, implied_persistence, "
      "implied_collection\n");
}

bool Taxonomy::contains(const std::string& type, const std::string& subtype) const {
  auto it = subtypes_.find(type);
  if (it == subtypes_.end()) return false;
  for (const auto& s : it->second)
    if (s == subtype) return true;
  return false;
}

const std::vector<std::string>& Taxonomy::subtypes(const std::string& type) const {
  static const std::vector<std::string> empty;
  auto it = subtypes_.find(type);
  return it == subtypes_.end() ? empty : it->second;
}

std::string Taxonomy::to_text() const {
  std::string out = "sso-taxonomy v1\n";
  for (const auto& type : type_order_) {
    out += type + ": " + join(subtypes_.at(type), ", ") + "\n";
  }
  return out;
}

}  // namespace skillsentry
