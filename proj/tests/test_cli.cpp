#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pass/config_file.hpp"
#include "pass/run.hpp"

using namespace pass;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pass_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ConfigError::Kind error_kind(const std::string& text, int* line = nullptr) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ConfigError::Kind::Io;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PASS_CLI_PATH) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

RunSpec tiny_spec(const fs::path& out) {
  RunSpec spec;
  spec.drops = 1;
  spec.grid = 3;
  spec.out_dir = out.string();
  return spec;
}

SystemConfig tiny_config() {
  SystemConfig cfg;
  cfg.pas_per_waveguide = 2;
  return cfg;
}

}  // namespace

TEST(ConfigParse, EmptyGivesDefaults) {
  const auto cfg = parse_config("");
  const SystemConfig def;
  EXPECT_EQ(cfg.region_side, 10.0);
  EXPECT_EQ(cfg.height, 3.0);
  EXPECT_EQ(cfg.waveguides, 2);
  EXPECT_EQ(cfg.users, 2);
  EXPECT_EQ(cfg.pas_per_waveguide, 4);
  EXPECT_EQ(cfg.noise_w, def.noise_w);
  EXPECT_EQ(cfg.max_power_w, 0.1);
  EXPECT_EQ(cfg.rf_chain_power_w, 0.0316);
  EXPECT_EQ(cfg.rate_floor, 1.0);
  EXPECT_EQ(cfg.spacing(), cfg.wavelength() / 2.0);
}

TEST(ConfigParse, CommentsAndWhitespace) {
  const auto cfg = parse_config("# desk\n\n  N = 6   # per waveguide\r\nP_max=0.2\n");
  EXPECT_EQ(cfg.pas_per_waveguide, 6);
  EXPECT_EQ(cfg.max_power_w, 0.2);
}

TEST(ConfigParse, NoiseInDbm) {
  EXPECT_NEAR(parse_config("sigma2_dbm = -90").noise_w, 1e-12, 1e-24);
  EXPECT_EQ(error_kind("sigma2 = 1e-12\nsigma2_dbm = -90"), ConfigError::Kind::Validation);
}

TEST(ConfigParse, UsersFollowWaveguides) {
  const auto a = parse_config("K = 3");
  EXPECT_EQ(a.waveguides, 3);
  const auto b = parse_config("M = 3");
  EXPECT_EQ(b.users, 3);
  EXPECT_EQ(error_kind("M = 2\nK = 3"), ConfigError::Kind::Validation);
}

TEST(ConfigParse, UnknownKeyReportsLine) {
  int line = 0;
  EXPECT_EQ(error_kind("L = 10\n\nbandwidth = 5\n", &line), ConfigError::Kind::Parse);
  EXPECT_EQ(line, 3);
  try {
    parse_config("L = 10\n\nbandwidth = 5\n");
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("PARSE_ERROR line 3:", 0), 0u) << e.what();
  }
}

TEST(ConfigParse, SyntaxErrors) {
  int line = 0;
  EXPECT_EQ(error_kind("L 10", &line), ConfigError::Kind::Parse);
  EXPECT_EQ(line, 1);
  EXPECT_EQ(error_kind("L = ten", &line), ConfigError::Kind::Parse);
  EXPECT_EQ(error_kind("L = 1\nL = 2", &line), ConfigError::Kind::Parse);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(error_kind("= 4"), ConfigError::Kind::Parse);
  EXPECT_EQ(error_kind("H = inf"), ConfigError::Kind::Parse);
}

TEST(ConfigParse, ValidationErrors) {
  EXPECT_EQ(error_kind("P_max = -1"), ConfigError::Kind::Validation);
  EXPECT_EQ(error_kind("N = 2.5"), ConfigError::Kind::Validation);
  EXPECT_EQ(error_kind("N = 0"), ConfigError::Kind::Validation);
  EXPECT_EQ(error_kind("N = 1000"), ConfigError::Kind::Validation);
  EXPECT_EQ(error_kind("H = 0"), ConfigError::Kind::Validation);
  try {
    parse_config("P_max = -1");
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("VALIDATION_ERROR:", 0), 0u) << e.what();
  }
}

TEST(ConfigParse, WriteReadRoundTrip) {
  SystemConfig cfg;
  cfg.region_side = 12.5;
  cfg.pas_per_waveguide = 3;
  cfg.waveguides = 3;
  cfg.users = 3;
  cfg.noise_w = 1.0 / 3.0 * 1e-12;
  cfg.carrier_hz = 27.7e9;
  const auto back = parse_config(write_config(cfg));
  EXPECT_EQ(back.region_side, cfg.region_side);
  EXPECT_EQ(back.users, 3);
  EXPECT_EQ(back.noise_w, cfg.noise_w);
  EXPECT_EQ(back.carrier_hz, cfg.carrier_hz);
  EXPECT_EQ(back.spacing(), cfg.spacing());
}

TEST(CsvFormat, TwelveDigitsAndNan) {
  EXPECT_EQ(csv_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(csv_number(2.0), "2");
  EXPECT_EQ(csv_number(1.5e-12), "1.5e-12");
  EXPECT_EQ(csv_number(NAN), "nan");
}

TEST(Run, WritesEveryFile) {
  const auto out = scratch("all");
  auto spec = tiny_spec(out);
  spec.drops = 2;
  ASSERT_EQ(run_sweeps(spec, tiny_config()), 0);
  for (const char* p : {"wm", "ws", "baseline"})
    for (const char* d : {"00", "01"}) {
      const fs::path f = out / (std::string(p) + "_drop" + d + ".csv");
      ASSERT_TRUE(fs::exists(f)) << f;
      const auto rows = csv_rows(slurp(f));
      ASSERT_EQ(rows.size(), 4u);
      EXPECT_EQ(rows[0], (std::vector<std::string>{"eps_se", "se", "power_w", "ee", "feasible"}));
    }
  const auto summary = csv_rows(slurp(out / "summary.csv"));
  EXPECT_EQ(summary.size(), 1u + 3u * 3u);
  EXPECT_EQ(summary[0].size(), 7u);
  EXPECT_TRUE(fs::exists(out / "meta.txt"));
}

TEST(Run, ByteIdenticalReruns) {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  ASSERT_EQ(run_sweeps(tiny_spec(a), tiny_config()), 0);
  ASSERT_EQ(run_sweeps(tiny_spec(b), tiny_config()), 0);
  for (const auto& entry : fs::directory_iterator(a))
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
}

TEST(Run, SingleUserEeRecomputedFromCsv) {
  const auto out = scratch("k1");
  SystemConfig cfg = tiny_config();
  cfg.users = 1;
  cfg.waveguides = 1;
  auto spec = tiny_spec(out);
  spec.protocol = "ws";
  ASSERT_EQ(run_sweeps(spec, cfg), 0);
  const auto rows = csv_rows(slurp(out / "ws_drop00.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i][4], "1");
    const double se = std::stod(rows[i][1]);
    const double power = std::stod(rows[i][2]);
    const double ee = std::stod(rows[i][3]);
    EXPECT_NEAR(ee, se / (power + cfg.rf_chain_power_w), 1e-9 * ee);
  }
}

TEST(Run, EeColumnConsistentAt12Digits) {
  const auto out = scratch("ee");
  auto spec = tiny_spec(out);
  spec.protocol = "wm";
  const auto cfg = tiny_config();
  ASSERT_EQ(run_sweeps(spec, cfg), 0);
  const auto rows = csv_rows(slurp(out / "wm_drop00.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double se = std::stod(rows[i][1]);
    const double power = std::stod(rows[i][2]);
    EXPECT_NEAR(std::stod(rows[i][3]), se / (power + cfg.users * cfg.rf_chain_power_w), 1e-9 * std::stod(rows[i][3]));
  }
}

TEST(Run, MetaReplayReproduces) {
  const auto a = scratch("replay_a");
  auto spec = tiny_spec(a);
  spec.protocol = "ws";
  spec.seed = 99;
  ASSERT_EQ(run_sweeps(spec, tiny_config()), 0);
  const std::string meta = slurp(a / "meta.txt");
  RunSpec back;
  apply_meta_run_line(meta, back);
  EXPECT_EQ(back.protocol, "ws");
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.drops, 1);
  EXPECT_EQ(back.grid, 3);
  const auto b = scratch("replay_b");
  back.out_dir = b.string();
  ASSERT_EQ(run_sweeps(back, parse_config(meta)), 0);
  EXPECT_EQ(slurp(a / "ws_drop00.csv"), slurp(b / "ws_drop00.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Run, AllInfeasibleCurveExitsTwo) {
  const auto out = scratch("infeasible");
  SystemConfig cfg = tiny_config();
  cfg.rate_floor = 30.0;
  auto spec = tiny_spec(out);
  spec.protocol = "ws";
  EXPECT_EQ(run_sweeps(spec, cfg), 2);
  const auto rows = csv_rows(slurp(out / "ws_drop00.csv"));
  EXPECT_EQ(rows[1][1], "nan");
  EXPECT_EQ(rows[1][4], "0");
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  write_file(dir / "bad.toml", "L = 10\nfoo = 1\n");
  write_file(dir / "invalid.toml", "P_max = -1\n");
  write_file(dir / "hard.toml", "N = 2\ngamma = 30\n");
  write_file(dir / "ok.toml", "N = 2\n");
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("--config " + (dir / "bad.toml").string() + out), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "invalid.toml").string() + out), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.toml").string() + out), 1);
  EXPECT_EQ(run_cli("--protocol tdma" + out), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "hard.toml").string() + " --protocol ws --drops 1 --grid 2" + out), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "ok.toml").string() + " --protocol ws --drops 1 --grid 2" + out), 0);
  EXPECT_EQ(run_cli("--replay " + (dir / "out" / "meta.txt").string() + " --out " + (dir / "again").string()), 0);
  EXPECT_EQ(slurp(dir / "out" / "ws_drop00.csv"), slurp(dir / "again" / "ws_drop00.csv"));
}
