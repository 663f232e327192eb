#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "bands.hpp"
#include "errors.hpp"

namespace wqed {

// Flat view of a nested key-value file:
//
//   # comment
//   scenario = fig8
//   [lattice]
//   sites = 800
//   [rga]
//   phi = 0.05pi
//
// Keys are addressed as "section.key". Every read is recorded so the resolved
// configuration can be echoed, and leftover keys are reported as unknown.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    int column = 0;
    bool used = false;
  };

  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw, section;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = raw.substr(0, raw.find('#'));
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      const int col = static_cast<int>(first) + 1;
      if (line[first] == '[') {
        if (line[last] != ']') throw ConfigError("section header is missing ']'", line_no, static_cast<int>(last) + 1);
        section = trim(line.substr(first + 1, last - first - 1));
        if (!valid_key(section)) throw ConfigError("invalid section name '" + section + "'", line_no, col + 1);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no, col);
      const std::string key = trim(line.substr(first, eq - first));
      if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line_no, col);
      const std::string value = trim(line.substr(eq + 1));
      const auto vpos = line.find_first_not_of(" \t", eq + 1);
      const int vcol = vpos == std::string::npos ? static_cast<int>(eq) + 2 : static_cast<int>(vpos) + 1;
      if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no, vcol);
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line_no, col);
      cfg.entries_[full] = Entry{value, line_no, vcol, false};
    }
    return cfg;
  }

  // Plain text files, or a run manifest whose "config" object holds resolved values.
  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
      }
      if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("manifest has no config object");
      Config cfg;
      for (const auto& [k, v] : j["config"].items()) cfg.entries_[k] = Entry{v.get<std::string>(), 0, 0, false};
      return cfg;
    }
    return parse(text);
  }

  // "a.b=value"
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq)), value = trim(assignment.substr(eq + 1));
    if (!valid_key(key) || value.empty()) throw ConfigError("malformed override '" + assignment + "'");
    auto& e = entries_[key];
    e.value = value;
    e.line = 0;
    e.column = 0;
    overrides_.push_back(key + "=" + value);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return record(key, lookup(key).value_or(fallback));
  }
  std::string get_string(const std::string& key) { return record(key, require(key)); }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) {
      record(key, fmt_number(fallback));
      return fallback;
    }
    return parse_double_at(key);
  }
  double get_double(const std::string& key) {
    require(key);
    return parse_double_at(key);
  }

  int get_int(const std::string& key, int fallback) {
    const double v = get_double(key, fallback);
    return to_int(key, v);
  }
  int get_int(const std::string& key) { return to_int(key, get_double(key)); }

  bool get_bool(const std::string& key, bool fallback) {
    const std::string v = get_string(key, fallback ? "true" : "false");
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw error_at(key, "expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) {
      std::string s;
      for (std::size_t i = 0; i < fallback.size(); ++i) s += (i ? ", " : "") + fmt_number(fallback[i]);
      record(key, s);
      return fallback;
    }
    auto& e = entries_.at(key);
    e.used = true;
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v;
      if (!parse_number(trim(item), v)) throw error_at(key, "cannot parse list element '" + trim(item) + "'");
      out.push_back(v);
    }
    resolved_[key] = e.value;
    return out;
  }

  // Section names listed under a key, e.g. "emitters = rga1, rga2".
  std::vector<std::string> get_names(const std::string& key, const std::string& fallback) {
    std::vector<std::string> out;
    std::stringstream ss(get_string(key, fallback));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  // Throws on the first key nobody asked for.
  void check_all_used() const {
    for (const auto& [k, e] : entries_)
      if (!e.used) throw ConfigError("unknown key '" + k + "'", e.line, e.line ? 1 : 0);
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  const std::vector<std::string>& overrides() const { return overrides_; }

  static bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::string body = s;
    double factor = 1.0;
    if (body.size() >= 2 && body.substr(body.size() - 2) == "pi") {
      factor = kPi;
      body = trim(body.substr(0, body.size() - 2));
      if (!body.empty() && body.back() == '*') body = trim(body.substr(0, body.size() - 1));
      if (body.empty() || body == "+") body = "1";
      if (body == "-") body = "-1";
    }
    char* end = nullptr;
    const double v = std::strtod(body.c_str(), &end);
    if (end == body.c_str() || *end != '\0') return false;
    out = v * factor;
    return true;
  }

  static std::string fmt_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  static bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
  }

  std::optional<std::string> lookup(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  std::string require(const std::string& key) {
    auto v = lookup(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  std::string record(const std::string& key, const std::string& value) {
    resolved_[key] = value;
    return value;
  }

  ConfigError error_at(const std::string& key, const std::string& what) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return ConfigError(key + ": " + what);
    return ConfigError(key + ": " + what, it->second.line, it->second.column);
  }

  double parse_double_at(const std::string& key) {
    auto& e = entries_.at(key);
    e.used = true;
    double v;
    if (!parse_number(e.value, v)) throw error_at(key, "cannot parse number '" + e.value + "'");
    resolved_[key] = e.value;
    return v;
  }

  int to_int(const std::string& key, double v) const {
    if (v != std::floor(v) || std::abs(v) > 2e9) throw error_at(key, "expected an integer");
    return static_cast<int>(v);
  }

  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> resolved_;
  std::vector<std::string> overrides_;
};

}  // namespace wqed
