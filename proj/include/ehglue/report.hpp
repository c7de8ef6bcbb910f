#pragma once

#include <cmath>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace ehglue {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kReportSchema = 1;

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitBudget = 3 };

// ---------------------------------------------------------------------------
// Canonical JSON: keys sorted (nlohmann objects are std::map backed), floats
// with 17 significant digits, no insignificant whitespace variation.

namespace detail {

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep floats recognisable as floats
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline void write_canonical(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        write_canonical(it.value(), out, indent, depth + 1);
      }
      out += nl;
      out += close;
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric rows stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) {
          out += nl;
          out += pad;
        }
        write_canonical(e, out, indent, depth + 1);
      }
      if (!flat) {
        out += nl;
        out += close;
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_json(const Json& j, int indent = 2) {
  std::string out;
  detail::write_canonical(j, out, indent, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Files

/// Writes to a sibling temporary and renames it over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::invalid_argument("csv_text: row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + detail::format_double(r[i]);
    out += "\n";
  }
  return out;
}

inline const std::vector<std::string>& flow_csv_header() {
  static const std::vector<std::string> h{"t", "epsilon", "pred_sup_rm", "ric_proxy"};
  return h;
}

// ---------------------------------------------------------------------------
// Config files: flat key=value lines, '#' starts a comment.

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries parse_config(const std::string& text) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  ConfigEntries out;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no), "expected key=value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(no), "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'))
        throw ConfigError(key, "invalid character in key");
    if (val.empty()) throw ConfigError(key, "empty value");
    if (seen[key]++) throw ConfigError(key, "duplicate key");
    out.emplace_back(std::move(key), std::move(val));
  }
  return out;
}

inline ConfigEntries read_config_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("config", "cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Reports

enum class CheckKind { Abs, Rel, AtMost, AtLeast, Range };

inline const char* check_kind_name(CheckKind k) {
  switch (k) {
    case CheckKind::Abs: return "abs";
    case CheckKind::Rel: return "rel";
    case CheckKind::AtMost: return "at_most";
    case CheckKind::AtLeast: return "at_least";
    default: return "range";
  }
}

/// Pass flag as a pure function of value, target and tolerance. Range uses
/// [target - tol, target + tol].
inline bool check_passes(CheckKind k, double value, double target, double tol = 0.0) {
  if (!std::isfinite(value)) return false;
  switch (k) {
    case CheckKind::Abs:
    case CheckKind::Range: return std::abs(value - target) <= tol;
    case CheckKind::Rel: return std::abs(value - target) <= tol * std::abs(target);
    case CheckKind::AtMost: return value <= target;
    default: return value >= target;
  }
}

class Report {
 public:
  explicit Report(std::string task) : task_(std::move(task)) {}

  const std::string& task() const { return task_; }

  template <class T>
  void config(const std::string& key, const T& v) {
    config_[key] = v;
  }

  /// Numeric result with an error budget.
  void result(const std::string& name, double value, double error) {
    results_[name] = Json{{"value", value}, {"error", error}};
  }
  /// Numeric result known exactly (closed form or integer arithmetic).
  void exact(const std::string& name, double value) { results_[name] = Json{{"value", value}, {"exact", true}}; }
  void table(const std::string& name, Json rows) { results_[name] = std::move(rows); }
  void note(const std::string& name, const std::string& text) { notes_[name] = text; }

  bool check(const std::string& name, double value, CheckKind kind, double target, double tol = 0.0) {
    const bool pass = check_passes(kind, value, target, tol);
    checks_[name] = Json{{"value", value}, {"target", target}, {"tolerance", tol}, {"kind", check_kind_name(kind)},
                         {"pass", pass}};
    return pass;
  }

  bool all_pass() const {
    for (const auto& [k, c] : checks_.items()) {
      (void)k;
      if (!c["pass"].get<bool>()) return false;
    }
    return true;
  }
  std::vector<std::string> failing() const {
    std::vector<std::string> f;
    for (const auto& [k, c] : checks_.items())
      if (!c["pass"].get<bool>()) f.push_back(k);
    return f;
  }
  const Json& checks() const { return checks_; }
  const Json& results() const { return results_; }

  /// Timing is kept out of the canonical report unless explicitly attached.
  void attach_wall_clock(double seconds) { wall_clock_ = seconds; }

  Json to_json() const {
    Json j;
    j["task"] = task_;
    j["config"] = config_.is_null() ? Json::object() : config_;
    j["results"] = results_.is_null() ? Json::object() : results_;
    j["checks"] = checks_.is_null() ? Json::object() : checks_;
    j["pass"] = all_pass();
    j["versions"] = Json{{"eh_glue", kVersion}, {"schema", kReportSchema}};
    if (!notes_.is_null()) j["notes"] = notes_;
    if (wall_clock_ >= 0.0) j["wall_clock_seconds"] = wall_clock_;
    return j;
  }
  std::string canonical() const { return canonical_json(to_json()); }

 private:
  std::string task_;
  Json config_, results_, checks_, notes_;
  double wall_clock_ = -1.0;
};

/// Several reports under one document keyed by task.
inline Json combine(const std::vector<Report>& reports) {
  Json j;
  bool pass = true;
  for (const Report& r : reports) {
    j["suites"][r.task()] = r.to_json();
    pass = pass && r.all_pass();
  }
  j["pass"] = pass;
  j["versions"] = Json{{"eh_glue", kVersion}, {"schema", kReportSchema}};
  return j;
}

}  // namespace ehglue
