#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace exspin {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Spin quantum number stored as 2s so half-integers stay exact.
class SpinValue {
 public:
  constexpr explicit SpinValue(int twice_spin = 0) : twice_(twice_spin) {
    if (twice_spin < 0) throw std::invalid_argument("spin must be non-negative");
  }
  static constexpr SpinValue half() { return SpinValue(1); }
  static constexpr SpinValue one() { return SpinValue(2); }

  constexpr int twice_spin() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr int multiplicity() const { return twice_ + 1; }
  constexpr double casimir() const { return value() * (value() + 1.0); }

  friend constexpr bool operator==(SpinValue, SpinValue) = default;

 private:
  int twice_;
};

struct SpinSite {
  SpinValue spin;
  double g_factor = 2.0;
  std::string label;

  SpinSite(SpinValue s, double g = 2.0, std::string name = {});
};

/// Ordered list of sites. The product basis is row-major with site 0 varying
/// slowest; within a site the basis runs m = s, s-1, ..., -s.
class SpinSystem {
 public:
  explicit SpinSystem(std::vector<SpinSite> sites);

  /// Triplet exciton (spin-1) coupled to the Cu spin-1/2, both g = 2.
  static SpinSystem triplet_and_copper(double g_triplet = 2.0, double g_cu = 2.0);

  const std::vector<SpinSite>& sites() const { return sites_; }
  const SpinSite& site(std::size_t i) const { return sites_.at(i); }
  std::size_t size() const { return sites_.size(); }
  Eigen::Index dimension() const { return dim_; }

  /// Index of the site with this label; throws if absent.
  std::size_t index_of(const std::string& label) const;

  /// Basis index of the product state with the given per-site 2m values.
  Eigen::Index basis_index(std::span<const int> twice_m) const;

 private:
  std::vector<SpinSite> sites_;
  Eigen::Index dim_ = 1;
};

/// Dense complex operator. `hermitian_hint` is verified on construction.
class Operator {
 public:
  Operator() = default;
  explicit Operator(Matrix m, bool hermitian = false);

  static Operator zero(Eigen::Index dim);
  static Operator identity(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  bool hermitian_hint() const { return hermitian_; }

  /// max|A - A^dagger| / max|A| (0 for the zero operator).
  double hermiticity_residual() const;
  Operator adjoint() const;

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(double s, const Operator& a);
  friend Operator operator*(cplx s, const Operator& a);
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  Matrix m_;
  bool hermitian_ = false;
};

/// Normalized pure state.
class StateVector {
 public:
  explicit StateVector(Vector v);
  static StateVector basis(Eigen::Index dim, Eigen::Index k);
  static StateVector product(const SpinSystem& system, std::span<const int> twice_m);

  Eigen::Index dim() const { return v_.size(); }
  const Vector& vector() const { return v_; }

 private:
  Vector v_;
};

/// Hermitian, unit-trace, positive semidefinite (to 1e-8) density matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho);
  static DensityMatrix pure(const StateVector& psi);
  /// Skips validation; for integrator internals that report positivity themselves.
  static DensityMatrix unchecked(Matrix rho);

  Eigen::Index dim() const { return rho_.rows(); }
  const Matrix& matrix() const { return rho_; }
  double min_eigenvalue() const;

 private:
  struct Unchecked {};
  DensityMatrix(Matrix rho, Unchecked) : rho_(std::move(rho)) {}
  Matrix rho_;
};

struct SpinOperators {
  Operator sx, sy, sz, splus, sminus;
};

SpinOperators spin_operators(SpinValue s);

Operator embed(const Operator& op, std::size_t site_index, const SpinSystem& system);

/// H = J S_a . S_b, energies in meV.
Operator heisenberg(double j_mev, const SpinSystem& system, std::size_t a, std::size_t b);

/// H_Z = sum_i g_i mu_B B_z Sz_i.
Operator zeeman(double b_tesla, const SpinSystem& system);

/// <(sum_i S_i)^2>
double total_spin_squared_expectation(const StateVector& state, const SpinSystem& system);
double total_spin_squared_expectation(const DensityMatrix& state, const SpinSystem& system);

/// Total-spin Casimir (sum_i S_i)^2 over the whole system.
Operator total_spin_squared(const SpinSystem& system);

struct Eigensystem {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // orthonormal columns, largest component real-positive
};

Eigensystem eigensystem(const Operator& op);

struct EnergyLevel {
  double energy;
  int degeneracy;
};

/// Eigenvalues grouped into degenerate levels (relative tolerance on the
/// spectral width, absolute floor 1e-12 meV).
std::vector<EnergyLevel> energy_levels(const Operator& h, double rel_tol = 1e-9);

/// Spin operators of each site expressed in a (possibly larger) working
/// Hilbert space. Lets drives and frames work the same on the bare spin
/// system and on the extended space with a decay manifold.
struct SiteOperatorSet {
  struct Site {
    std::string label;
    double g_factor;
    Operator sx, sy, sz;
  };

  Eigen::Index dim = 0;
  std::vector<Site> sites;

  static SiteOperatorSet from_system(const SpinSystem& system);

  const Site& site(const std::string& label) const;
  Operator total_sx() const;
  Operator total_sy() const;
  Operator total_sz() const;
};

Operator zeeman(double b_tesla, const SiteOperatorSet& sites);

/// Re Tr(O rho) and Tr(O rho).
double expectation(const Operator& op, const DensityMatrix& rho);
double expectation(const Operator& op, const StateVector& psi);
cplx expectation_complex(const Operator& op, const Matrix& rho);

}  // namespace exspin
