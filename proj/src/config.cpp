#include "pfmix/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pfmix/errors.hpp"

namespace pfmix {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValues KeyValues::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

KeyValues KeyValues::from_string(const std::string& text, const std::string& origin) {
  KeyValues k;
  k.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw IoError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    if (k.kv_.count(key))
      throw IoError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    k.kv_[key] = val;
  }
  return k;
}

bool KeyValues::has(const std::string& key) const {
  seen_.insert(key);
  return kv_.count(key) > 0;
}

std::string KeyValues::get_string(const std::string& key) const {
  seen_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw IoError(origin_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  seen_.insert(key);
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw IoError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
  }
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int KeyValues::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw IoError(origin_ + ": key '" + key + "' is not an integer: '" + v + "'");
  }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return u;
  } catch (const std::exception&) {
    throw IoError(origin_ + ": key '" + key + "' is not an unsigned integer: '" + v + "'");
  }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw IoError(origin_ + ": key '" + key + "' is not a boolean: '" + v + "'");
}

void KeyValues::reject_unknown() const {
  for (const auto& [key, val] : kv_)
    if (!seen_.count(key)) throw IoError(origin_ + ": unknown key '" + key + "'");
}

}  // namespace pfmix
