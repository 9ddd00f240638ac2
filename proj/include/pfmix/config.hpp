#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace pfmix {

// Flat `key = value` file with # comments. Lookups record the key so that
// unknown leftovers can be rejected wholesale.
class KeyValues {
 public:
  static KeyValues from_file(const std::string& path);
  static KeyValues from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws if any key present in the file was never requested.
  void reject_unknown() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> seen_;
  std::string origin_;
};

}  // namespace pfmix
