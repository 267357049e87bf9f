#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "mandiff/errors.hpp"
#include "mandiff/rng.hpp"

namespace mandiff {

/// Flat key-value configuration: one `key = value` per line, `#` comments,
/// quoted strings; a TOML-compatible subset (dotted keys form the grammar's
/// tables). The canonical serialization sorts keys, so the config hash is
/// stable under key reordering.
class FlatConfig {
 public:
  static FlatConfig parse_string(const std::string& text) {
    FlatConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = strip_comment(line);
      const std::string trimmed = trim(stripped);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static FlatConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key) const {
    return to_double(key, get_string(key));
  }
  double get_double(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }

  long long get_int(const std::string& key) const {
    const std::string v = get_string(key);
    std::size_t pos = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not an integer: " + v);
    }
    if (pos != v.size())
      throw ConfigError("key " + key + ": not an integer: " + v);
    return out;
  }
  long long get_int(const std::string& key, long long def) const {
    return has(key) ? get_int(key) : def;
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key " + key + ": expected true/false, got " + v);
  }
  bool get_bool(const std::string& key, bool def) const {
    return has(key) ? get_bool(key) : def;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }
  void set(const std::string& key, const char* value) { values_[key] = value; }
  void set(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    values_[key] = buf;
  }
  void set(const std::string& key, long long value) {
    values_[key] = std::to_string(value);
  }
  void set(const std::string& key, int value) {
    values_[key] = std::to_string(value);
  }
  void set(const std::string& key, bool value) {
    values_[key] = value ? "true" : "false";
  }

  /// Accept a raw `key=value` override (CLI flags mirror config keys).
  void set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + assignment);
    std::string value = trim(assignment.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    values_[trim(assignment.substr(0, eq))] = value;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Canonical sorted serialization; strings are quoted, numbers and
  /// booleans stay bare.
  std::string serialize() const {
    std::string out;
    for (const auto& [key, value] : values_) {
      out += key;
      out += " = ";
      if (is_bare(value)) {
        out += value;
      } else {
        out += '"';
        out += value;
        out += '"';
      }
      out += '\n';
    }
    return out;
  }

  std::uint64_t hash() const {
    const std::string canon = serialize();
    return fnv1a64(canon.data(), canon.size());
  }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash()));
    return buf;
  }

 private:
  static std::string strip_comment(const std::string& line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  static double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not a number: " + v);
    }
    if (pos != v.size())
      throw ConfigError("key " + key + ": not a number: " + v);
    return out;
  }

  static bool is_bare(const std::string& v) {
    if (v == "true" || v == "false") return true;
    if (v.empty()) return false;
    std::size_t pos = 0;
    try {
      (void)std::stod(v, &pos);
    } catch (const std::exception&) {
      return false;
    }
    return pos == v.size();
  }

  std::map<std::string, std::string> values_;
};

}  // namespace mandiff
