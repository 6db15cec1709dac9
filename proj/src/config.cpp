#include "exspin/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "exspin/error.hpp"
#include "exspin/numfmt.hpp"

namespace exspin {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string unquote(std::string_view v, int line) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
  if (!v.empty() && (v.front() == '"' || v.back() == '"')) fail(line, "unbalanced quote");
  return std::string(v);
}

double number(std::string_view v, const std::string& key, int line) {
  const auto x = parse_number(v);
  if (!x || !std::isfinite(*x)) fail(line, key + ": expected a number, got '" + std::string(v) + "'");
  return *x;
}

// Plain numbers are ns; "ps" and "ns" suffixes are accepted.
double time_ns(std::string_view v, const std::string& key, int line) {
  double scale = 1.0;
  if (v.size() > 2 && (v.ends_with("ps") || v.ends_with("ns"))) {
    scale = v.ends_with("ps") ? 1e-3 : 1.0;
    v = trim(v.substr(0, v.size() - 2));
  }
  return number(v, key, line) * scale;
}

int integer(std::string_view v, const std::string& key, int line) {
  const double x = number(v, key, line);
  if (x != std::floor(x) || std::abs(x) > 1e9) fail(line, key + ": expected an integer");
  return static_cast<int>(x);
}

bool boolean(std::string_view v, const std::string& key, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, key + ": expected true or false");
}

// "1", "-1/2", "+1/2", "0.5" -> 2m
int twice_m(std::string_view v, const std::string& key, int line) {
  if (const auto slash = v.find('/'); slash != std::string_view::npos) {
    if (trim(v.substr(slash + 1)) != "2") fail(line, key + ": only halves are allowed");
    return integer(trim(v.substr(0, slash)), key, line);
  }
  const double x = number(v, key, line);
  if (2.0 * x != std::round(2.0 * x)) fail(line, key + ": expected an integer or half-integer");
  return static_cast<int>(std::lround(2.0 * x));
}

std::vector<std::string> list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto end = v.find(',', start);
    if (end == std::string_view::npos) end = v.size();
    out.emplace_back(trim(v.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, int, const std::filesystem::path&)>;

const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Setter>>>>& table() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Setter>>>> t = {
      {"system",
       {{"j_meV", [](RunConfig& c, std::string_view v, int l, auto&) { c.system.j_meV = number(v, "system.j_meV", l); }},
        {"field_tesla",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.system.field_tesla = number(v, "system.field_tesla", l); }},
        {"g_triplet",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.system.g_triplet = number(v, "system.g_triplet", l); }},
        {"g_cu", [](RunConfig& c, std::string_view v, int l, auto&) { c.system.g_cu = number(v, "system.g_cu", l); }},
        {"lifetime_ns",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.system.lifetime_ns = time_ns(v, "system.lifetime_ns", l); }},
        {"initial_triplet_m",
         [](RunConfig& c, std::string_view v, int l, auto&) {
           c.system.initial_triplet_twice_m = twice_m(v, "system.initial_triplet_m", l);
         }},
        {"initial_cu_m", [](RunConfig& c, std::string_view v, int l, auto&) {
           c.system.initial_cu_twice_m = twice_m(v, "system.initial_cu_m", l);
         }}}},
      {"evolve",
       {{"t_end", [](RunConfig& c, std::string_view v, int l, auto&) { c.evolve.t_end_ns = time_ns(v, "evolve.t_end", l); }},
        {"n_points",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.evolve.n_points = integer(v, "evolve.n_points", l); }},
        {"observables", [](RunConfig& c, std::string_view v, int, auto&) { c.evolve.observables = list(v); }},
        {"decay", [](RunConfig& c, std::string_view v, int l, auto&) { c.evolve.decay = boolean(v, "evolve.decay", l); }},
        {"dt_max", [](RunConfig& c, std::string_view v, int l, auto&) {
           c.evolve.dt_max_ns = time_ns(v, "evolve.dt_max", l);
         }}}},
      {"echo",
       {{"carrier_ghz",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.carrier_ghz = number(v, "echo.carrier_ghz", l); }},
        {"prep_duration",
         [](RunConfig& c, std::string_view v, int l, auto&) {
           c.echo.prep_duration_ns = time_ns(v, "echo.prep_duration", l);
         }},
        {"refocus_duration",
         [](RunConfig& c, std::string_view v, int l, auto&) {
           c.echo.refocus_duration_ns = time_ns(v, "echo.refocus_duration", l);
         }},
        {"prep_flip_deg",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.prep_flip_deg = number(v, "echo.prep_flip_deg", l); }},
        {"refocus_flip_deg",
         [](RunConfig& c, std::string_view v, int l, auto&) {
           c.echo.refocus_flip_deg = number(v, "echo.refocus_flip_deg", l);
         }},
        {"tau_start",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.tau_start_ns = time_ns(v, "echo.tau_start", l); }},
        {"tau_step",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.tau_step_ns = time_ns(v, "echo.tau_step", l); }},
        {"n_tau", [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.n_tau = integer(v, "echo.n_tau", l); }},
        {"window", [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.window_ns = time_ns(v, "echo.window", l); }},
        {"sigma_ghz",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.sigma_ghz = number(v, "echo.sigma_ghz", l); }},
        {"n_samples",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.n_samples = integer(v, "echo.n_samples", l); }},
        {"seed",
         [](RunConfig& c, std::string_view v, int l, auto&) {
           const int s = integer(v, "echo.seed", l);
           if (s < 0) fail(l, "echo.seed must be non-negative");
           c.echo.seed = static_cast<std::uint64_t>(s);
         }},
        {"decay", [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.decay = boolean(v, "echo.decay", l); }},
        {"dt_max",
         [](RunConfig& c, std::string_view v, int l, auto&) { c.echo.dt_max_ns = time_ns(v, "echo.dt_max", l); }}}},
      {"exchange",
       {{"table",
         [](RunConfig& c, std::string_view v, int l, const std::filesystem::path& base) {
           std::filesystem::path p = unquote(v, l);
           if (p.empty()) fail(l, "exchange.table is empty");
           c.exchange.table = p.is_relative() && !base.empty() ? base / p : p;
         }}}},
      {"output",
       {{"path", [](RunConfig& c, std::string_view v, int l, const std::filesystem::path& base) {
           const std::string p = unquote(v, l);
           c.output.path = (p == "-" || base.empty() || std::filesystem::path(p).is_absolute())
                               ? p
                               : (base / p).string();
         }},
        {"format", [](RunConfig& c, std::string_view v, int l, auto&) { c.output.format = unquote(v, l); }}}},
  };
  return t;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::string>>> config_schema() {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& [section, keys] : table()) {
    std::vector<std::string> names;
    for (const auto& k : keys) names.push_back(k.first);
    out.emplace_back(section, std::move(names));
  }
  return out;
}

RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  RunConfig config;
  const std::vector<std::pair<std::string, Setter>>* section = nullptr;
  std::string section_name;
  std::set<std::string> seen;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section_name = std::string(trim(line.substr(1, line.size() - 2)));
      section = nullptr;
      for (const auto& [name, keys] : table())
        if (name == section_name) section = &keys;
      if (!section) fail(line_no, "unknown section [" + section_name + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key");
    if (!section) fail(line_no, "key '" + key + "' outside a section");
    if (value.empty()) fail(line_no, section_name + "." + key + ": missing value");

    const Setter* setter = nullptr;
    for (const auto& [name, s] : *section)
      if (name == key) setter = &s;
    if (!setter) fail(line_no, "unknown key '" + key + "' in [" + section_name + "]");
    if (!seen.insert(section_name + "." + key).second)
      fail(line_no, "duplicate key " + section_name + "." + key);
    (*setter)(config, value, line_no, base_dir);
  }
  validate_config(config);
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

void validate_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  const auto& s = c.system;
  require(std::abs(s.j_meV) <= 1e3, "system.j_meV out of bounds: |J| must be <= 1e3 meV");
  require(std::abs(s.field_tesla) <= 20.0, "system.field_tesla out of bounds: |B| must be <= 20 T");
  require(s.lifetime_ns > 0.0 && s.lifetime_ns <= 1e6, "system.lifetime_ns out of bounds: must lie in (0, 1e6] ns");
  require(s.g_triplet > 0.0 && s.g_triplet <= 10.0, "system.g_triplet out of bounds: must lie in (0, 10]");
  require(s.g_cu > 0.0 && s.g_cu <= 10.0, "system.g_cu out of bounds: must lie in (0, 10]");
  require(s.initial_triplet_twice_m == 2 || s.initial_triplet_twice_m == 0 || s.initial_triplet_twice_m == -2,
          "system.initial_triplet_m must be 1, 0 or -1");
  require(s.initial_cu_twice_m == 1 || s.initial_cu_twice_m == -1, "system.initial_cu_m must be 1/2 or -1/2");

  const auto& e = c.evolve;
  require(e.t_end_ns >= 0.0 && e.t_end_ns <= 1e6, "evolve.t_end must lie in [0, 1e6] ns");
  require(e.n_points >= 1 && e.n_points <= 1000000, "evolve.n_points must lie in [1, 1e6]");
  require((e.n_points == 1) == (e.t_end_ns == 0.0), "evolve.n_points must be 1 exactly when evolve.t_end = 0");
  require(!e.observables.empty(), "evolve.observables is empty");
  const std::set<std::string> known{"sx_cu", "sy_cu", "sz_cu", "sx_triplet", "sy_triplet", "sz_triplet", "s2_total"};
  std::set<std::string> dup;
  for (const auto& o : e.observables) {
    require(known.contains(o), "evolve.observables: unknown observable '" + o + "'");
    require(dup.insert(o).second, "evolve.observables: duplicate observable '" + o + "'");
  }
  require(!e.dt_max_ns || *e.dt_max_ns > 0.0, "evolve.dt_max must be positive");

  const auto& x = c.echo;
  require(!x.carrier_ghz || (*x.carrier_ghz >= 0.0 && *x.carrier_ghz <= 1e4), "echo.carrier_ghz must lie in [0, 1e4]");
  require(x.prep_duration_ns > 0.0, "echo.prep_duration must be positive");
  require(x.refocus_duration_ns > 0.0, "echo.refocus_duration must be positive");
  require(x.prep_flip_deg > 0.0 && x.prep_flip_deg <= 360.0, "echo.prep_flip_deg must lie in (0, 360]");
  require(x.refocus_flip_deg > 0.0 && x.refocus_flip_deg <= 360.0, "echo.refocus_flip_deg must lie in (0, 360]");
  require(x.tau_start_ns > 0.0, "echo.tau_start must be positive");
  require(x.tau_step_ns > 0.0, "echo.tau_step must be positive");
  require(x.n_tau >= 1 && x.n_tau <= 100000, "echo.n_tau must lie in [1, 1e5]");
  require(!x.window_ns || *x.window_ns > 0.0, "echo.window must be positive");
  require(x.sigma_ghz >= 0.0 && x.sigma_ghz <= 1e3, "echo.sigma_ghz must lie in [0, 1e3]");
  require(x.n_samples >= 1 && x.n_samples <= 100000, "echo.n_samples must lie in [1, 1e5]");
  require(!x.dt_max_ns || *x.dt_max_ns > 0.0, "echo.dt_max must be positive");

  require(c.output.format == "csv" || c.output.format == "json", "output.format must be csv or json");
  require(!c.output.path.empty(), "output.path is empty");
}

}  // namespace exspin
