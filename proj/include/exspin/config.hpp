#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exspin {

struct SystemConfig {
  double j_meV = 0.0;
  double field_tesla = 0.0;
  double g_triplet = 2.0;
  double g_cu = 2.0;
  double lifetime_ns = 35.0;
  // Initial product state, stored as 2m.
  int initial_triplet_twice_m = 2;
  int initial_cu_twice_m = -1;
};

struct EvolveConfig {
  double t_end_ns = 0.01;
  int n_points = 101;
  std::vector<std::string> observables{"sz_cu"};
  bool decay = false;
  std::optional<double> dt_max_ns;
};

struct EchoConfig {
  std::optional<double> carrier_ghz;  // default: Cu Larmor frequency
  double prep_duration_ns = 0.1;
  double refocus_duration_ns = 0.1;
  double prep_flip_deg = 90.0;
  double refocus_flip_deg = 180.0;
  double tau_start_ns = 1.0;
  double tau_step_ns = 5e-5;
  int n_tau = 64;
  std::optional<double> window_ns;  // default: 4 x prep duration
  double sigma_ghz = 0.01;
  int n_samples = 64;
  std::uint64_t seed = 42;
  bool decay = false;
  std::optional<double> dt_max_ns;
};

struct ExchangeConfig {
  std::optional<std::filesystem::path> table;  // default: shipped fixture
};

struct OutputConfig {
  std::string path = "-";
  std::string format = "csv";
};

struct RunConfig {
  SystemConfig system;
  EvolveConfig evolve;
  EchoConfig echo;
  ExchangeConfig exchange;
  OutputConfig output;
};

/// Reads a `key = value` file with `[section]` headers. Relative paths inside
/// the file resolve against the file's directory. Throws ConfigError.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});

/// Bounds and consistency checks; throws ConfigError naming the field.
void validate_config(const RunConfig& config);

/// Keys accepted in each section, in documentation order.
std::vector<std::pair<std::string, std::vector<std::string>>> config_schema();

}  // namespace exspin
