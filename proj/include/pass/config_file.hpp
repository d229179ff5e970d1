#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pass/config.hpp"

namespace pass {

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation, Io };

  ConfigError(Kind kind, int line, const std::string& what)
      : std::runtime_error(format(kind, line, what)), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }  // 0 when not tied to a line

 private:
  static std::string format(Kind kind, int line, const std::string& what) {
    switch (kind) {
      case Kind::Parse: return "PARSE_ERROR line " + std::to_string(line) + ": " + what;
      case Kind::Validation: return "VALIDATION_ERROR: " + what;
      case Kind::Io: return "IO_ERROR: " + what;
    }
    return what;
  }

  Kind kind_;
  int line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline int as_count(double v, const char* key) {
  if (v != std::floor(v) || v < 1.0 || v > 1e6)
    throw ConfigError(ConfigError::Kind::Validation, 0, std::string(key) + " must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Flat `key = value` configuration (a TOML subset: numbers only, `#` comments).
/// Missing keys keep the SystemConfig defaults.
inline SystemConfig parse_config(std::string_view text) {
  static const std::set<std::string, std::less<>> known = {
      "L", "H", "d", "M", "K", "N", "f_c", "n_eff", "sigma2", "sigma2_dbm", "P_max", "P_RF", "gamma", "delta_min"};
  std::map<std::string, double, std::less<>> values;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ConfigError::Kind::Parse, line_no, "expected key = value");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view raw = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(ConfigError::Kind::Parse, line_no, "missing key");
    if (!known.count(key)) throw ConfigError(ConfigError::Kind::Parse, line_no, "unknown key '" + std::string(key) + "'");
    if (values.count(key)) throw ConfigError(ConfigError::Kind::Parse, line_no, "duplicate key '" + std::string(key) + "'");
    double v = 0.0;
    if (!detail::parse_number(raw, v))
      throw ConfigError(ConfigError::Kind::Parse, line_no, "'" + std::string(raw) + "' is not a finite number");
    values.emplace(key, v);
  }

  SystemConfig cfg;
  auto get = [&](std::string_view key, double& field) {
    if (auto it = values.find(key); it != values.end()) field = it->second;
  };
  get("L", cfg.region_side);
  get("H", cfg.height);
  get("d", cfg.waveguide_spacing);
  get("f_c", cfg.carrier_hz);
  get("n_eff", cfg.refractive_index);
  get("P_max", cfg.max_power_w);
  get("P_RF", cfg.rf_chain_power_w);
  get("gamma", cfg.rate_floor);
  get("delta_min", cfg.min_spacing);
  if (values.count("delta_min") && !(cfg.min_spacing > 0.0))
    throw ConfigError(ConfigError::Kind::Validation, 0, "delta_min must be positive");
  if (values.count("sigma2") && values.count("sigma2_dbm"))
    throw ConfigError(ConfigError::Kind::Validation, 0, "give only one of sigma2 and sigma2_dbm");
  get("sigma2", cfg.noise_w);
  if (auto it = values.find("sigma2_dbm"); it != values.end()) cfg.noise_w = std::pow(10.0, (it->second - 30.0) / 10.0);
  const bool has_m = values.count("M") > 0;
  const bool has_k = values.count("K") > 0;
  if (has_m) cfg.waveguides = detail::as_count(values.at("M"), "M");
  if (has_k) cfg.users = detail::as_count(values.at("K"), "K");
  if (has_k && !has_m) cfg.waveguides = cfg.users;
  if (has_m && !has_k) cfg.users = cfg.waveguides;
  if (values.count("N")) cfg.pas_per_waveguide = detail::as_count(values.at("N"), "N");

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::Validation, 0, e.what());
  }
  return cfg;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::Io, 0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SystemConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

/// Shortest decimal that parses back to the same double.
inline std::string exact_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Config text that parse_config maps back to an identical SystemConfig.
inline std::string write_config(const SystemConfig& cfg) {
  std::string out;
  auto put = [&](const char* key, double v) { out += std::string(key) + " = " + exact_number(v) + "\n"; };
  put("L", cfg.region_side);
  put("H", cfg.height);
  put("d", cfg.waveguide_spacing);
  put("M", cfg.waveguides);
  put("K", cfg.users);
  put("N", cfg.pas_per_waveguide);
  put("f_c", cfg.carrier_hz);
  put("n_eff", cfg.refractive_index);
  put("sigma2", cfg.noise_w);
  put("P_max", cfg.max_power_w);
  put("P_RF", cfg.rf_chain_power_w);
  put("gamma", cfg.rate_floor);
  put("delta_min", cfg.spacing());
  return out;
}

}  // namespace pass
