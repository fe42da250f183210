// zpm: protective-measurement simulator and analysis driver.
//
//   zpm table1|exact|simulate|analyze|sweep|table2 --config PATH --out DIR [--seed N]

#include <iostream>

#include <CLI11.hpp>

#include "zpm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Zeno protective measurement of photon polarization with a temporal pointer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::vector<double> extra_tau;

  for (const char* name : {"table1", "exact", "simulate", "analyze", "sweep", "table2"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override experiment.seed");
    if (std::string_view(name) == "table1")
      sub->add_option("--tau-tilde-grid", extra_tau, "extra tau~ values appended to the table")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : zpm::exit_code::kValidation;
  }

  const auto* sub = app.get_subcommands().front();
  zpm::RunManifest m;
  m.command = *zpm::parse_command(sub->get_name());
  if (!config_path.empty()) m.config_path = config_path;
  m.output_dir = out_dir;
  if (sub->count("--seed")) m.seed_override = seed;
  m.extra_tau_tilde = extra_tau;
  return zpm::run_command(m, std::cerr);
}
