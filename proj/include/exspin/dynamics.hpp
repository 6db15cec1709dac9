#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exspin/spin_core.hpp"

namespace exspin {

struct Observable {
  std::string name;
  Operator op;
};

/// Time-stamped observable records. Built by the evolution routines and
/// read-only afterwards.
class Trajectory {
 public:
  explicit Trajectory(std::vector<std::string> keys = {});

  void append(double t_ns, std::vector<double> values, std::optional<Matrix> state = std::nullopt);

  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<Matrix>& states() const { return states_; }
  std::size_t size() const { return times_.size(); }

  std::vector<double> column(const std::string& key) const;

  // Integrator diagnostics (Lindblad runs).
  double min_eigenvalue() const { return min_eigenvalue_; }
  double max_trace_drift() const { return max_trace_drift_; }
  void record_diagnostics(double min_eig, double trace_drift);

 private:
  std::vector<std::string> keys_;
  std::vector<double> times_;
  std::vector<std::vector<double>> rows_;
  std::vector<Matrix> states_;
  double min_eigenvalue_ = 0.0;
  double max_trace_drift_ = 0.0;
  bool has_diagnostics_ = false;
};

/// exp(-i h dt / hbar) by eigendecomposition; dt in ns.
Operator propagator(const Operator& h, double dt_ns);

/// Exact unitary evolution sampled at `times_ns` (ascending).
Trajectory evolve_closed(const Operator& h, const StateVector& psi0, std::span<const double> times_ns,
                         std::span<const Observable> observables, bool store_states = false);

/// (Exciton spin) x (persistent spins)  (+)  (ground) x (persistent spins).
///
/// Site 0 of the exciton system is the exciton spin; the remaining sites
/// persist after the exciton decays. Basis: the exciton block first, in the
/// exciton system's own product order, followed by the ground block in the
/// persistent sites' product order.
class ExtendedSystem {
 public:
  explicit ExtendedSystem(SpinSystem exciton_system);

  const SpinSystem& exciton_system() const { return exciton_; }
  const SpinSystem& ground_system() const { return ground_; }
  Eigen::Index dim() const { return exciton_.dimension() + ground_.dimension(); }
  Eigen::Index exciton_dim() const { return exciton_.dimension(); }
  Eigen::Index ground_dim() const { return ground_.dimension(); }

  /// Orthogonal projector onto the exciton block.
  Operator projector() const;
  Operator lift_exciton(const Operator& op) const;
  Operator lift_ground(const Operator& op) const;
  DensityMatrix lift_state(const DensityMatrix& exciton_state) const;

  /// Spin operators in the extended space. The exciton spin acts on the
  /// exciton block only; persistent spins act on both blocks.
  SiteOperatorSet site_operators() const;

  Eigen::Index exciton_index(Eigen::Index exciton_level, Eigen::Index persistent_index) const;
  Eigen::Index ground_index(Eigen::Index persistent_index) const;

 private:
  SpinSystem exciton_;
  SpinSystem ground_;
};

struct CollapseOperator {
  Operator op;
  double rate = 0.0;  // 1/ns
};

struct LindbladModel {
  Operator hamiltonian;
  std::vector<CollapseOperator> collapse;
  std::optional<double> lifetime_ns;  // set for exciton-decay models

  Eigen::Index dim() const { return hamiltonian.dim(); }
  /// Throws std::invalid_argument on negative rates or dimension mismatch.
  void validate() const;
};

/// Cu-spin-preserving decay of every exciton level into the ground block:
/// L_{m,s} = |g,s><t_m,s| at rate 1/lifetime. `ground_field_tesla` adds the
/// Zeeman term of the persistent spins on the ground block.
LindbladModel build_decay_model(const ExtendedSystem& extended, const Operator& h_exciton, double lifetime_ns,
                                double ground_field_tesla = 0.0);

/// Default RK4 step: 1/200 of the period of the largest gap of H, or
/// 1/(200 sum of rates) when H has no spread.
double default_dt_max(const LindbladModel& model);

/// Largest stable step allowed by the guard dt |H| / hbar <= 0.1.
double max_stable_dt(const Operator& h);

/// Integrates the Lindblad equation with fixed-step classical RK4
/// (step <= dt_max) and samples observables at `times_ns`.
/// Throws NumericalError if the step violates the stability guard or if
/// positivity is lost beyond 1e-7.
Trajectory evolve_lindblad(const LindbladModel& model, const DensityMatrix& rho0, std::span<const double> times_ns,
                           double dt_max_ns, std::span<const Observable> observables, bool store_states = false);

/// Phenomenological fast path: scales the closed-trajectory observables by
/// exp(-t/T) and appends an `exciton_population` column.
Trajectory apply_decay_envelope(const Trajectory& closed, double lifetime_ns);

// Building blocks shared with the pulse engine. Density matrices are
// column-stacked when vectorized.
namespace lindblad {

/// Superoperator L with vec(d rho/dt) = L vec(rho).
Matrix liouvillian(const Matrix& h, std::span<const CollapseOperator> collapse);

/// Right-hand side of the master equation evaluated directly on rho.
Matrix rhs(const Matrix& h, std::span<const CollapseOperator> collapse, const Matrix& rho);

/// One classical RK4 step of a static linear system as a matrix:
/// I + x + x^2/2 + x^3/6 + x^4/24 with x = dt L.
Matrix rk4_step_matrix(const Matrix& liouvillian, double dt);

Matrix matrix_power(const Matrix& m, std::uint64_t n);

/// Fixed-step RK4 transfer matrix over `duration` with steps <= dt_max.
Matrix transfer(const Matrix& liouvillian, double duration_ns, double dt_max_ns);

Vector vec(const Matrix& rho);
Matrix unvec(const Vector& v, Eigen::Index dim);

/// Fixed-step RK4 propagation of dv/dt = G v for arbitrary durations: whole
/// steps of dt_max (applied through cached repeated squares of the step
/// matrix) followed by one shorter remainder step. Not thread-safe; use one
/// instance per thread.
class StaticRk4Propagator {
 public:
  StaticRk4Propagator(Matrix generator, double dt_max_ns);

  Vector apply(const Vector& v, double duration_ns) const;
  double dt_max() const { return dt_; }

 private:
  Matrix gen_;
  double dt_;
  mutable std::vector<Matrix> squares_;  // step^(2^k)
};

}  // namespace lindblad

}  // namespace exspin
