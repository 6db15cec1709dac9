#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "exspin/config.hpp"
#include "exspin/echo.hpp"

namespace exspin {

enum class OutputFormat { Csv, Json };

OutputFormat parse_format(const std::string& name);

void cmd_spectrum(const RunConfig& config, std::ostream& out, OutputFormat format);
void cmd_exchange_report(const RunConfig& config, std::ostream& out, OutputFormat format);
void cmd_evolve(const RunConfig& config, std::ostream& out, OutputFormat format);
void cmd_echo(const RunConfig& config, std::ostream& out, OutputFormat format);

/// Runs `spectrum`, `exchange-report`, `evolve` or `echo` and writes the
/// result to config.output.path ("-" is `out`). The file is only written once
/// the command has succeeded. Returns the process exit code: 0 success,
/// 1 usage/config error, 2 numerical failure; diagnostics go to `err`.
int run_command(const std::string& name, const RunConfig& config, std::ostream& out, std::ostream& err);

// Scenario builders, shared with the tests.
std::vector<double> evolve_times(const EvolveConfig& config);
EchoExperiment echo_experiment(const RunConfig& config);
EchoSetup echo_setup(const RunConfig& config);

}  // namespace exspin
