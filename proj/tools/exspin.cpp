#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "exspin/commands.hpp"
#include "exspin/config.hpp"
#include "exspin/error.hpp"
#include "exspin/exchange.hpp"

int main(int argc, char** argv) {
  CLI::App app{"exspin: triplet exciton / Cu spin dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::string preset;

  app.add_option("--config", config_path, "config file (key = value, [section] headers)");
  app.add_option("--out", out_path, "output file, '-' for stdout");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "detuning-ensemble seed (echo)");
  app.add_option("--preset", preset, "'table1': shipped functional table")->check(CLI::IsMember({"table1"}));

  app.fallthrough();  // common flags may follow the subcommand
  app.add_subcommand("spectrum", "energy levels and degeneracies");
  app.add_subcommand("exchange-report", "coherence verdicts for the functional table");
  app.add_subcommand("evolve", "time evolution of spin observables");
  app.add_subcommand("echo", "integrated Hahn echo versus tau");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  exspin::RunConfig config;
  try {
    if (!config_path.empty()) config = exspin::parse_config(config_path);
    else if (preset.empty() && command != "spectrum")
      throw exspin::ConfigError("no --config given (use --preset table1 for exchange-report)");
    if (!preset.empty()) config.exchange.table = exspin::shipped_table_path();
    if (!out_path.empty()) config.output.path = out_path;
    if (!format.empty()) config.output.format = format;
    if (seed) config.echo.seed = *seed;
  } catch (const exspin::ConfigError& e) {
    std::cerr << "exspin: " << e.what() << '\n';
    return 1;
  }
  return exspin::run_command(command, config, std::cout, std::cerr);
}
