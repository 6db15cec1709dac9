#include "exspin/exchange.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "exspin/constants.hpp"
#include "exspin/error.hpp"

namespace exspin {

double j_energy_difference(double e_fm_mev, double e_afm_mev) { return e_fm_mev - e_afm_mev; }

double j_spin_projected(double e_hs_mev, double e_bs_mev, double s2_hs, double s2_bs) {
  if (!(s2_hs > s2_bs))
    throw std::domain_error("spin projection is degenerate: <S^2>_HS must exceed <S^2>_BS");
  return 2.0 * (e_hs_mev - e_bs_mev) / (s2_hs - s2_bs);
}

double oscillation_period_ps(double j_mev) {
  if (j_mev == 0.0) throw std::domain_error("oscillation period undefined for J = 0");
  const double hbar_meV_ps = ns_to_ps(constants::hbar);
  return 2.0 * constants::two_pi * hbar_meV_ps / (3.0 * std::abs(j_mev));
}

CoherenceVerdict coherence_check(double j_mev, double lifetime_ns) {
  if (!(lifetime_ns > 0.0)) throw std::domain_error("lifetime must be positive");
  CoherenceVerdict v;
  v.j_meV = j_mev;
  v.lifetime_ns = lifetime_ns;
  v.hbar_over_T_meV = constants::hbar / lifetime_ns;
  v.ratio = std::abs(j_mev) / v.hbar_over_T_meV;
  if (j_mev == 0.0) {
    v.oscillation_period_ps = std::numeric_limits<double>::infinity();
    v.oscillations_within_lifetime = 0.0;
  } else {
    v.oscillation_period_ps = oscillation_period_ps(j_mev);
    v.oscillations_within_lifetime = ns_to_ps(lifetime_ns) / v.oscillation_period_ps;
  }
  v.survives = std::abs(j_mev) > v.hbar_over_T_meV;
  return v;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMissing = "-";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const char* column, int line) {
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError(std::string("unparsable number '") + cell + "' in column " + column, line);
  return v;
}

std::optional<double> parse_optional(const std::string& cell, const char* column, int line) {
  if (cell == kMissing) return std::nullopt;
  return parse_number(cell, column, line);
}

std::string format_shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_shortest(*v) : std::string(kMissing);
}

}  // namespace

std::vector<FunctionalRecord> parse_functional_table(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::vector<FunctionalRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      std::string joined;
      for (std::size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
      if (joined != kFunctionalTableHeader)
        throw ParseError(std::string("expected header '") + kFunctionalTableHeader + "'", lineno);
      header_seen = true;
      continue;
    }
    if (cells.size() != 5)
      throw ParseError("expected 5 columns, found " + std::to_string(cells.size()), lineno);
    FunctionalRecord r;
    r.name = cells[0];
    if (r.name.empty()) throw ParseError("empty functional name", lineno);
    r.e_triplet_eV = parse_number(cells[1], "e_triplet_eV", lineno);
    r.s2_fm = parse_optional(cells[2], "s2_fm", lineno);
    r.s2_afm = parse_optional(cells[3], "s2_afm", lineno);
    r.j_meV = parse_optional(cells[4], "j_meV", lineno);
    if (!r.j_meV && r.s2_afm)
      throw ParseError("s2_afm given for a record without J (non-converged AFM state)", lineno);
    if (r.s2_fm && (*r.s2_fm < 3.0 || *r.s2_fm > 4.5))
      throw ParseError("s2_fm outside sanity band [3.0, 4.5]", lineno);
    if (r.s2_afm && (*r.s2_afm < 1.0 || *r.s2_afm > 2.5))
      throw ParseError("s2_afm outside sanity band [1.0, 2.5]", lineno);
    out.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing header row", std::max(lineno, 1));
  return out;
}

std::vector<FunctionalRecord> load_functional_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open functional table '" + path.string() + "'");
  try {
    return parse_functional_table(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" (line")),
                     e.line());
  }
}

void write_functional_table(std::ostream& out, const std::vector<FunctionalRecord>& records) {
  out << kFunctionalTableHeader << '\n';
  for (const auto& r : records) {
    out << r.name << ',' << format_shortest(r.e_triplet_eV) << ',' << format_optional(r.s2_fm) << ','
        << format_optional(r.s2_afm) << ',' << format_optional(r.j_meV) << '\n';
  }
}

std::filesystem::path shipped_table_path() { return std::filesystem::path(EXSPIN_DATA_DIR) / "table1.csv"; }

// ---------------------------------------------------------------------------

ExchangeReport report(const std::vector<FunctionalRecord>& records, double lifetime_ns) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  ExchangeReport rep;
  rep.lifetime_ns = lifetime_ns;
  for (const auto& r : records) {
    if (!r.j_meV) {
      rep.not_converged.push_back(r.name);
      continue;
    }
    rep.verdicts.push_back({r.name, coherence_check(*r.j_meV, lifetime_ns)});
  }
  rep.all_survive = !rep.verdicts.empty();
  for (const auto& [name, v] : rep.verdicts) {
    const double aj = std::abs(v.j_meV);
    rep.min_abs_j_meV = rep.min_abs_j_meV ? std::min(*rep.min_abs_j_meV, aj) : aj;
    rep.max_abs_j_meV = rep.max_abs_j_meV ? std::max(*rep.max_abs_j_meV, aj) : aj;
    if (std::isfinite(v.oscillation_period_ps)) {
      const double p = v.oscillation_period_ps;
      rep.min_period_ps = rep.min_period_ps ? std::min(*rep.min_period_ps, p) : p;
      rep.max_period_ps = rep.max_period_ps ? std::max(*rep.max_period_ps, p) : p;
    }
    rep.all_survive = rep.all_survive && v.survives;
  }
  return rep;
}

}  // namespace exspin
