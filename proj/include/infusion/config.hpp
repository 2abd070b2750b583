#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "infusion/common.hpp"

namespace infusion {

// Plain-text hierarchical configuration: one `key = value` per line, `#`
// comments, hierarchy through dotted keys (e.g. mask.kind). Insertion order
// is preserved so an echoed file is byte-stable.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  static KeyValueConfig parse(const std::string& text,
                              const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config: missing '=' at " + origin + ":" +
                          std::to_string(lineno));
      std::string key = strip(s.substr(0, eq));
      std::string value = strip(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config: empty key at " + origin + ":" +
                          std::to_string(lineno));
      cfg.set(key, value);
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }

  void set_double(const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    set(key, buf);
  }

  void set_int(const std::string& key, std::int64_t v) { set(key, std::to_string(v)); }

  bool has(const std::string& key) const { return find(key).has_value(); }

  std::string get(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError("config: missing key '" + key + "'");
    return *v;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto v = find(key);
    return v ? *v : fallback;
  }

  std::int64_t get_int(const std::string& key) const {
    return parse_int(key, get(key));
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto v = find(key);
    return v ? parse_int(key, *v) : fallback;
  }

  double get_double(const std::string& key) const {
    return parse_number(key, get(key));
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = find(key);
    return v ? parse_number(key, *v) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config: key '" + key + "' is not a boolean: " + *v);
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("config: cannot write " + path);
    f << serialize();
  }

 private:
  static std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      return std::stoll(v);
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not an integer: " + v);
    }
  }

  static double parse_number(const std::string& key, const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not a number: " + v);
    }
  }

  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::optional<std::string> find(const std::string& key) const {
    for (const auto& kv : entries_)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace infusion
