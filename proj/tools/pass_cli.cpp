// Command-line front end: pass_cli --config PATH --protocol all --seed 1 --drops 10 --grid 12 --out DIR
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pass/config_file.hpp"
#include "pass/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SE-EE tradeoff sweeps for pinching-antenna downlinks"};
  pass::RunSpec spec;
  std::string meta;
  bool quiet = false;
  app.add_option("--config", spec.config_path, "flat key = value config file (defaults if omitted)");
  app.add_option("--protocol", spec.protocol, "wm, ws, baseline or all")
      ->check(CLI::IsMember({"wm", "ws", "baseline", "all"}));
  app.add_option("--seed", spec.seed, "master seed");
  app.add_option("--drops", spec.drops, "number of user drops")->check(CLI::PositiveNumber);
  app.add_option("--grid", spec.grid, "SE grid points per curve")->check(CLI::PositiveNumber);
  app.add_option("--out", spec.out_dir, "output directory");
  app.add_option("--replay", meta, "rerun from a meta.txt (config and run flags)")->excludes("--config");
  app.add_flag("--quiet", quiet, "no progress lines");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    pass::SystemConfig cfg;
    if (!meta.empty()) {
      const std::string text = pass::read_text_file(meta);
      cfg = pass::parse_config(text);
      pass::apply_meta_run_line(text, spec);
    } else if (!spec.config_path.empty()) {
      cfg = pass::load_config(spec.config_path);
    }
    const int code = pass::run_sweeps(spec, cfg, quiet ? nullptr : &std::cerr);
    if (code == 2) std::cerr << "warning: at least one curve has no feasible point\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
