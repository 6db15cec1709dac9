#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace exspin {

// Sign convention: H = J S.s, so J < 0 is ferromagnetic (quartet ground
// manifold) and J > 0 antiferromagnetic (doublet ground manifold).

/// J = E_FM - E_AFM.
double j_energy_difference(double e_fm_mev, double e_afm_mev);

/// Spin-projected estimate 2 (E_HS - E_BS) / (<S^2>_HS - <S^2>_BS).
/// Throws std::domain_error if s2_hs <= s2_bs.
double j_spin_projected(double e_hs_mev, double e_bs_mev, double s2_hs, double s2_bs);

/// Beat period (ps) of the quartet-doublet gap 3|J|/2. Throws std::domain_error for J = 0.
double oscillation_period_ps(double j_mev);

inline constexpr double kDefaultLifetimeNs = 35.0;
inline constexpr double kLongLifetimeNs = 50.0;

struct CoherenceVerdict {
  double j_meV = 0.0;
  double lifetime_ns = 0.0;
  double hbar_over_T_meV = 0.0;
  double ratio = 0.0;                  // |J| / (hbar/T)
  double oscillation_period_ps = 0.0;  // +inf when J = 0
  double oscillations_within_lifetime = 0.0;
  bool survives = false;               // strict |J| > hbar/T
};

CoherenceVerdict coherence_check(double j_mev, double lifetime_ns);

/// One functional's row of the comparison table. Absent values were printed
/// as "-" (the broken-symmetry state did not converge).
struct FunctionalRecord {
  std::string name;
  double e_triplet_eV = 0.0;
  std::optional<double> s2_fm;
  std::optional<double> s2_afm;
  std::optional<double> j_meV;

  bool converged_afm() const { return j_meV.has_value(); }

  friend bool operator==(const FunctionalRecord&, const FunctionalRecord&) = default;
};

inline constexpr const char* kFunctionalTableHeader = "functional,e_triplet_eV,s2_fm,s2_afm,j_meV";

/// Parses the comma-separated table; throws ParseError (with line) on malformed rows.
std::vector<FunctionalRecord> parse_functional_table(std::istream& in);
std::vector<FunctionalRecord> load_functional_table(const std::filesystem::path& path);

void write_functional_table(std::ostream& out, const std::vector<FunctionalRecord>& records);

/// Path of the bundled comparison table.
std::filesystem::path shipped_table_path();

struct RecordVerdict {
  std::string name;
  CoherenceVerdict verdict;
};

struct ExchangeReport {
  double lifetime_ns = 0.0;
  std::vector<RecordVerdict> verdicts;
  std::vector<std::string> not_converged;
  // Ranges over records with J; unset when there are none.
  std::optional<double> min_abs_j_meV, max_abs_j_meV;
  std::optional<double> min_period_ps, max_period_ps;
  bool all_survive = false;
};

/// Throws std::invalid_argument for an empty record list.
ExchangeReport report(const std::vector<FunctionalRecord>& records, double lifetime_ns);

}  // namespace exspin
