#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pass/config.hpp"
#include "pass/config_file.hpp"
#include "pass/tradeoff.hpp"

#ifndef PASS_VERSION
#define PASS_VERSION "0.0.0"
#endif

namespace pass {

inline constexpr const char* kVersion = PASS_VERSION;

struct RunSpec {
  std::string config_path;  // empty: defaults
  std::string protocol = "all";
  std::uint64_t seed = 1;
  int drops = 10;
  int grid = 12;
  std::string out_dir = "out";
};

inline std::vector<Protocol> selected_protocols(const std::string& selector) {
  if (selector == "all") return {Protocol::Wm, Protocol::Ws, Protocol::Baseline};
  return {parse_protocol(selector)};
}

/// 12 significant digits, C locale; NaN prints as `nan`.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, r.ptr);
}

inline std::string curve_csv(const TradeoffCurve& c) {
  std::string out = "eps_se,se,power_w,ee,feasible\n";
  for (const auto& p : c.points) {
    out += csv_number(p.eps_se) + ',' + csv_number(p.feasible ? p.se : NAN) + ',' +
           csv_number(p.feasible ? p.power : NAN) + ',' + csv_number(p.feasible ? p.ee : NAN) + ',' +
           (p.feasible ? "1" : "0") + '\n';
  }
  return out;
}

inline std::string summary_csv(const std::vector<std::pair<Protocol, std::vector<TradeoffCurve>>>& all) {
  std::string out = "protocol,point,eps_se,se,power_w,ee,feasible_drops\n";
  for (const auto& [protocol, curves] : all) {
    const auto avg = average_curves(curves);
    for (std::size_t i = 0; i < avg.size(); ++i) {
      const auto& a = avg[i];
      out += std::string(to_string(protocol)) + ',' + std::to_string(i) + ',' + csv_number(a.eps_se) + ',' +
             csv_number(a.se) + ',' + csv_number(a.power) + ',' + csv_number(a.ee) + ',' +
             std::to_string(a.feasible_drops) + '\n';
    }
  }
  return out;
}

inline std::string run_line(const RunSpec& spec) {
  return "--protocol " + spec.protocol + " --seed " + std::to_string(spec.seed) + " --drops " +
         std::to_string(spec.drops) + " --grid " + std::to_string(spec.grid);
}

/// meta.txt is itself a loadable config; the run flags ride in a `# run:` comment.
inline std::string meta_text(const RunSpec& spec, const SystemConfig& cfg) {
  std::string out = "# pass " + std::string(kVersion) + "\n";
  out += "# run: " + run_line(spec) + "\n";
  out += write_config(cfg);
  return out;
}

/// Recovers protocol, seed, drops and grid from a meta.txt `# run:` line.
inline void apply_meta_run_line(const std::string& text, RunSpec& spec) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# run:", 0) != 0) continue;
    std::istringstream words(line.substr(6));
    std::string flag;
    while (words >> flag) {
      std::string value;
      if (!(words >> value)) throw ConfigError(ConfigError::Kind::Parse, 0, "truncated run line in meta file");
      if (flag == "--protocol") spec.protocol = value;
      else if (flag == "--seed") spec.seed = std::stoull(value);
      else if (flag == "--drops") spec.drops = std::stoi(value);
      else if (flag == "--grid") spec.grid = std::stoi(value);
      else throw ConfigError(ConfigError::Kind::Parse, 0, "unknown flag '" + flag + "' in meta file");
    }
    return;
  }
  throw ConfigError(ConfigError::Kind::Parse, 0, "meta file has no run line");
}

inline std::string drop_file_name(Protocol p, int drop) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", drop);
  return std::string(to_string(p)) + "_drop" + buf + ".csv";
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(ConfigError::Kind::Io, 0, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError(ConfigError::Kind::Io, 0, "write failed for '" + path.string() + "'");
}

/// Sweeps every selected protocol over every drop and writes the CSVs.
/// Returns 0, or 2 when some curve has no feasible point. Throws on errors.
inline int run_sweeps(const RunSpec& spec, const SystemConfig& cfg, std::ostream* log = nullptr) {
  if (spec.drops < 1) throw ConfigError(ConfigError::Kind::Validation, 0, "drops must be at least 1");
  if (spec.grid < 1) throw ConfigError(ConfigError::Kind::Validation, 0, "grid must be at least 1");
  const auto protocols = selected_protocols(spec.protocol);
  const std::filesystem::path dir(spec.out_dir);
  std::filesystem::create_directories(dir);

  std::vector<std::pair<Protocol, std::vector<TradeoffCurve>>> all;
  for (auto p : protocols) all.emplace_back(p, std::vector<TradeoffCurve>{});
  bool empty_curve = false;
  for (int drop = 0; drop < spec.drops; ++drop) {
    const UserSet users = drop_users(cfg, spec.seed, drop);
    for (auto& [protocol, curves] : all) {
      auto curve = sweep(protocol, users, cfg, spec.grid, spec.seed, drop);
      bool any = false;
      for (const auto& pt : curve.points) any = any || pt.feasible;
      empty_curve = empty_curve || !any;
      write_file(dir / drop_file_name(protocol, drop), curve_csv(curve));
      if (log) *log << to_string(protocol) << " drop " << drop << ": se_max " << csv_number(curve.se_max) << '\n';
      curves.push_back(std::move(curve));
    }
  }
  write_file(dir / "summary.csv", summary_csv(all));
  write_file(dir / "meta.txt", meta_text(spec, cfg));
  return empty_curve ? 2 : 0;
}

}  // namespace pass
