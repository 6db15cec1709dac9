#include "exspin/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "exspin/constants.hpp"
#include "exspin/error.hpp"
#include "exspin/exchange.hpp"
#include "exspin/numfmt.hpp"

namespace exspin {

using nlohmann::json;

namespace {

// JSON numbers carry the same 12 significant digits as the CSV output.
json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return *parse_number(format_number(x));
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_number(row[k]);
    out << '\n';
  }
}

void write_json_table(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  json doc;
  doc["columns"] = header;
  doc["rows"] = json::array();
  for (const auto& row : rows) {
    json r = json::array();
    for (const double v : row) r.push_back(num(v));
    doc["rows"].push_back(std::move(r));
  }
  out << doc.dump(2) << '\n';
}

void write_table(std::ostream& out, OutputFormat format, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  if (format == OutputFormat::Csv) write_csv(out, header, rows);
  else write_json_table(out, header, rows);
}

SpinSystem bare_system(const SystemConfig& s) { return SpinSystem::triplet_and_copper(s.g_triplet, s.g_cu); }

Operator bare_hamiltonian(const SystemConfig& s, const SpinSystem& system) {
  return heisenberg(s.j_meV, system, 0, 1) + zeeman(s.field_tesla, system);
}

StateVector initial_state(const SystemConfig& s, const SpinSystem& system) {
  const int m[] = {s.initial_triplet_twice_m, s.initial_cu_twice_m};
  return StateVector::product(system, m);
}

Operator named_observable(const std::string& name, const SiteOperatorSet& sites, const Operator& s2) {
  if (name == "s2_total") return s2;
  const auto us = name.find('_');
  const auto& site = sites.site(name.substr(us + 1) == "cu" ? "cu" : "triplet");
  const auto comp = name.substr(0, us);
  if (comp == "sx") return site.sx;
  if (comp == "sy") return site.sy;
  return site.sz;
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw ConfigError("unknown output format '" + name + "' (csv or json)");
}

// ---------------------------------------------------------------------------

void cmd_spectrum(const RunConfig& config, std::ostream& out, OutputFormat format) {
  const auto system = bare_system(config.system);
  const auto levels = energy_levels(bare_hamiltonian(config.system, system));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < levels.size(); ++i)
    rows.push_back({static_cast<double>(i), levels[i].energy, static_cast<double>(levels[i].degeneracy)});
  write_table(out, format, {"level_index", "energy_meV", "degeneracy"}, rows);
}

void cmd_exchange_report(const RunConfig& config, std::ostream& out, OutputFormat format) {
  const auto path = config.exchange.table.value_or(shipped_table_path());
  if (!std::filesystem::exists(path)) throw ConfigError("functional table not found: " + path.string());
  std::vector<FunctionalRecord> records;
  try {
    records = load_functional_table(path);
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const auto rep = report(records, config.system.lifetime_ns);

  if (format == OutputFormat::Csv) {
    out << "functional,j_meV,hbar_over_T_meV,ratio,oscillation_period_ps,oscillations_within_lifetime,survives\n";
    for (const auto& r : records) {
      out << r.name;
      if (!r.j_meV) {
        out << ",-,-,-,-,-,not_converged\n";
        continue;
      }
      const auto v = coherence_check(*r.j_meV, rep.lifetime_ns);
      out << ',' << format_number(v.j_meV) << ',' << format_number(v.hbar_over_T_meV) << ','
          << format_number(v.ratio) << ',' << format_number(v.oscillation_period_ps) << ','
          << format_number(v.oscillations_within_lifetime) << ',' << (v.survives ? "true" : "false") << '\n';
    }
    return;
  }

  json doc;
  doc["lifetime_ns"] = num(rep.lifetime_ns);
  doc["records"] = json::array();
  for (const auto& [name, v] : rep.verdicts) {
    doc["records"].push_back({{"functional", name},
                              {"j_meV", num(v.j_meV)},
                              {"hbar_over_T_meV", num(v.hbar_over_T_meV)},
                              {"ratio", num(v.ratio)},
                              {"oscillation_period_ps", num(v.oscillation_period_ps)},
                              {"oscillations_within_lifetime", num(v.oscillations_within_lifetime)},
                              {"survives", v.survives}});
  }
  doc["not_converged"] = rep.not_converged;
  auto range = [](const std::optional<double>& lo, const std::optional<double>& hi) -> json {
    if (!lo || !hi) return nullptr;
    return json::array({num(*lo), num(*hi)});
  };
  doc["abs_j_range_meV"] = range(rep.min_abs_j_meV, rep.max_abs_j_meV);
  doc["period_range_ps"] = range(rep.min_period_ps, rep.max_period_ps);
  doc["all_survive"] = rep.all_survive;
  out << doc.dump(2) << '\n';
}

std::vector<double> evolve_times(const EvolveConfig& config) {
  std::vector<double> times;
  if (config.n_points == 1) return {0.0};
  const double dt = config.t_end_ns / static_cast<double>(config.n_points - 1);
  for (int k = 0; k < config.n_points; ++k) times.push_back(dt * k);
  times.back() = config.t_end_ns;
  return times;
}

void cmd_evolve(const RunConfig& config, std::ostream& out, OutputFormat format) {
  const auto& sc = config.system;
  const auto system = bare_system(sc);
  const Operator h = bare_hamiltonian(sc, system);
  const auto psi0 = initial_state(sc, system);
  const auto times = evolve_times(config.evolve);

  Trajectory traj;
  if (!config.evolve.decay) {
    const auto sites = SiteOperatorSet::from_system(system);
    const Operator s2 = total_spin_squared(system);
    std::vector<Observable> obs;
    for (const auto& name : config.evolve.observables) obs.push_back({name, named_observable(name, sites, s2)});
    traj = evolve_closed(h, psi0, times, obs);
  } else {
    const ExtendedSystem ext(system);
    const auto model = build_decay_model(ext, h, sc.lifetime_ns, sc.field_tesla);
    const auto sites = ext.site_operators();
    const Operator s2 = ext.lift_exciton(total_spin_squared(system)) + ext.lift_ground(total_spin_squared(ext.ground_system()));
    std::vector<Observable> obs;
    for (const auto& name : config.evolve.observables) obs.push_back({name, named_observable(name, sites, s2)});
    obs.push_back({"exciton_population", ext.projector()});
    const double dt = config.evolve.dt_max_ns.value_or(default_dt_max(model));
    traj = evolve_lindblad(model, ext.lift_state(DensityMatrix::pure(psi0)), times, dt, obs);
  }

  std::vector<std::string> header{"t_ns"};
  header.insert(header.end(), traj.keys().begin(), traj.keys().end());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<double> row{traj.times()[i]};
    row.insert(row.end(), traj.rows()[i].begin(), traj.rows()[i].end());
    rows.push_back(std::move(row));
  }
  write_table(out, format, header, rows);
}

EchoExperiment echo_experiment(const RunConfig& config) {
  const auto& e = config.echo;
  const auto& s = config.system;
  const double carrier = e.carrier_ghz.value_or(larmor_frequency_ghz(s.g_cu, std::abs(s.field_tesla)));
  std::vector<double> taus;
  for (int k = 0; k < e.n_tau; ++k) taus.push_back(e.tau_start_ns + e.tau_step_ns * k);
  const double deg = std::numbers::pi / 180.0;
  auto exp = EchoExperiment::hahn(s.g_cu, carrier, e.prep_duration_ns, e.refocus_duration_ns, std::move(taus),
                                  {e.sigma_ghz, e.n_samples, e.seed}, e.prep_flip_deg * deg,
                                  e.refocus_flip_deg * deg);
  if (e.window_ns) exp.detection_window_ns = *e.window_ns;
  return exp;
}

EchoSetup echo_setup(const RunConfig& config) {
  const auto& s = config.system;
  const auto system = bare_system(s);
  const Operator h = bare_hamiltonian(s, system);
  const auto rho0 = DensityMatrix::pure(initial_state(s, system));
  const double dt = config.echo.dt_max_ns.value_or(0.0);
  if (!config.echo.decay) return {SiteOperatorSet::from_system(system), LindbladModel{h, {}, std::nullopt}, rho0, "cu", dt};
  const ExtendedSystem ext(system);
  return {ext.site_operators(), build_decay_model(ext, h, s.lifetime_ns, s.field_tesla), ext.lift_state(rho0), "cu", dt};
}

void cmd_echo(const RunConfig& config, std::ostream& out, OutputFormat format) {
  const auto exp = echo_experiment(config);
  const auto trace = integrated_echo(exp, echo_setup(config), config.system.j_meV);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < trace.taus.size(); ++i) rows.push_back({trace.taus[i], trace.integrated_echo[i]});
  write_table(out, format, {"tau_ns", "integrated_echo"}, rows);
}

// ---------------------------------------------------------------------------

int run_command(const std::string& name, const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const OutputFormat format = parse_format(config.output.format);
    std::ostringstream buf;
    if (name == "spectrum") cmd_spectrum(config, buf, format);
    else if (name == "exchange-report") cmd_exchange_report(config, buf, format);
    else if (name == "evolve") cmd_evolve(config, buf, format);
    else if (name == "echo") cmd_echo(config, buf, format);
    else throw ConfigError("unknown command '" + name + "'");

    if (config.output.path == "-") {
      out << buf.str();
      out.flush();
    } else {
      std::ofstream file(config.output.path, std::ios::binary | std::ios::trunc);
      if (!file) throw ConfigError("cannot write output file " + config.output.path);
      file << buf.str();
      if (!file.flush()) throw ConfigError("failed writing output file " + config.output.path);
    }
    return 0;
  } catch (const NumericalError& e) {
    err << "exspin: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "exspin: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "exspin: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    err << "exspin: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "exspin: error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace exspin
