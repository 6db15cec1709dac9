#include "exspin/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "exspin/constants.hpp"
#include "exspin/error.hpp"

namespace exspin {

namespace {

constexpr double kStabilityGuard = 0.1;
constexpr double kPositivityFloor = -1e-7;

void check_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
      throw std::invalid_argument("times must be finite and non-negative");
    if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("times must be strictly increasing");
  }
}

std::vector<std::string> names_of(std::span<const Observable> observables) {
  std::vector<std::string> keys;
  for (const auto& o : observables) keys.push_back(o.name);
  return keys;
}

double spectral_norm(const Operator& h) {
  if (h.dim() == 0) return 0.0;
  const auto es = eigensystem(h);
  return std::max(std::abs(es.values(0)), std::abs(es.values(es.values.size() - 1)));
}

}  // namespace

// ---------------------------------------------------------------------------

Trajectory::Trajectory(std::vector<std::string> keys) : keys_(std::move(keys)) {}

void Trajectory::append(double t_ns, std::vector<double> values, std::optional<Matrix> state) {
  if (values.size() != keys_.size()) throw std::invalid_argument("trajectory record has the wrong number of values");
  if (!times_.empty() && !(t_ns > times_.back()))
    throw std::invalid_argument("trajectory times must be strictly increasing");
  times_.push_back(t_ns);
  rows_.push_back(std::move(values));
  if (state) states_.push_back(std::move(*state));
}

std::vector<double> Trajectory::column(const std::string& key) const {
  for (std::size_t k = 0; k < keys_.size(); ++k) {
    if (keys_[k] != key) continue;
    std::vector<double> col;
    col.reserve(rows_.size());
    for (const auto& r : rows_) col.push_back(r[k]);
    return col;
  }
  throw std::invalid_argument("trajectory has no observable '" + key + "'");
}

void Trajectory::record_diagnostics(double min_eig, double trace_drift) {
  if (!has_diagnostics_) {
    min_eigenvalue_ = min_eig;
    max_trace_drift_ = trace_drift;
    has_diagnostics_ = true;
    return;
  }
  min_eigenvalue_ = std::min(min_eigenvalue_, min_eig);
  max_trace_drift_ = std::max(max_trace_drift_, trace_drift);
}

// ---------------------------------------------------------------------------

Operator propagator(const Operator& h, double dt_ns) {
  const auto es = eigensystem(h);
  Vector phases(es.values.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::polar(1.0, -es.values(k) * dt_ns / constants::hbar);
  Matrix u = es.vectors * phases.asDiagonal() * es.vectors.adjoint();
  const double residual = (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (residual > 1e-10) throw NumericalError("propagator lost unitarity");
  return Operator(std::move(u));
}

Trajectory evolve_closed(const Operator& h, const StateVector& psi0, std::span<const double> times_ns,
                         std::span<const Observable> observables, bool store_states) {
  if (h.dim() != psi0.dim()) throw std::invalid_argument("evolve_closed: state and Hamiltonian dimensions differ");
  for (const auto& o : observables)
    if (o.op.dim() != h.dim()) throw std::invalid_argument("evolve_closed: observable '" + o.name + "' has wrong dimension");
  check_times(times_ns);

  const auto es = eigensystem(h);
  const Vector c0 = es.vectors.adjoint() * psi0.vector();
  Trajectory traj(names_of(observables));
  for (const double t : times_ns) {
    Vector ct(c0.size());
    for (Eigen::Index k = 0; k < ct.size(); ++k) ct(k) = c0(k) * std::polar(1.0, -es.values(k) * t / constants::hbar);
    Vector psi = es.vectors * ct;
    psi /= psi.norm();
    std::vector<double> values;
    values.reserve(observables.size());
    for (const auto& o : observables) values.push_back(psi.dot(o.op.matrix() * psi).real());
    std::optional<Matrix> state;
    if (store_states) state = Matrix(psi);
    traj.append(t, std::move(values), std::move(state));
  }
  return traj;
}

// ---------------------------------------------------------------------------

namespace {

SpinSystem persistent_sites(const SpinSystem& exciton) {
  if (exciton.size() < 2) throw std::invalid_argument("extended system needs persistent spins besides the exciton");
  std::vector<SpinSite> rest(exciton.sites().begin() + 1, exciton.sites().end());
  return SpinSystem(std::move(rest));
}

}  // namespace

ExtendedSystem::ExtendedSystem(SpinSystem exciton_system)
    : exciton_(std::move(exciton_system)), ground_(persistent_sites(exciton_)) {}

Operator ExtendedSystem::projector() const {
  Matrix p = Matrix::Zero(dim(), dim());
  p.topLeftCorner(exciton_dim(), exciton_dim()).setIdentity();
  return Operator(std::move(p), true);
}

Operator ExtendedSystem::lift_exciton(const Operator& op) const {
  if (op.dim() != exciton_dim()) throw std::invalid_argument("lift_exciton: dimension mismatch");
  Matrix m = Matrix::Zero(dim(), dim());
  m.topLeftCorner(exciton_dim(), exciton_dim()) = op.matrix();
  return Operator(std::move(m), op.hermitian_hint());
}

Operator ExtendedSystem::lift_ground(const Operator& op) const {
  if (op.dim() != ground_dim()) throw std::invalid_argument("lift_ground: dimension mismatch");
  Matrix m = Matrix::Zero(dim(), dim());
  m.bottomRightCorner(ground_dim(), ground_dim()) = op.matrix();
  return Operator(std::move(m), op.hermitian_hint());
}

DensityMatrix ExtendedSystem::lift_state(const DensityMatrix& exciton_state) const {
  if (exciton_state.dim() != exciton_dim()) throw std::invalid_argument("lift_state: dimension mismatch");
  Matrix m = Matrix::Zero(dim(), dim());
  m.topLeftCorner(exciton_dim(), exciton_dim()) = exciton_state.matrix();
  return DensityMatrix(std::move(m));
}

SiteOperatorSet ExtendedSystem::site_operators() const {
  SiteOperatorSet set;
  set.dim = dim();
  const auto exc = SiteOperatorSet::from_system(exciton_);
  const auto gnd = SiteOperatorSet::from_system(ground_);
  for (std::size_t i = 0; i < exc.sites.size(); ++i) {
    const auto& e = exc.sites[i];
    if (i == 0) {
      set.sites.push_back({e.label, e.g_factor, lift_exciton(e.sx), lift_exciton(e.sy), lift_exciton(e.sz)});
    } else {
      const auto& g = gnd.sites[i - 1];
      set.sites.push_back({e.label, e.g_factor, lift_exciton(e.sx) + lift_ground(g.sx),
                           lift_exciton(e.sy) + lift_ground(g.sy), lift_exciton(e.sz) + lift_ground(g.sz)});
    }
  }
  return set;
}

Eigen::Index ExtendedSystem::exciton_index(Eigen::Index exciton_level, Eigen::Index persistent_index) const {
  const Eigen::Index levels = exciton_.site(0).spin.multiplicity();
  if (exciton_level < 0 || exciton_level >= levels || persistent_index < 0 || persistent_index >= ground_dim())
    throw std::invalid_argument("exciton_index out of range");
  return exciton_level * ground_dim() + persistent_index;
}

Eigen::Index ExtendedSystem::ground_index(Eigen::Index persistent_index) const {
  if (persistent_index < 0 || persistent_index >= ground_dim()) throw std::invalid_argument("ground_index out of range");
  return exciton_dim() + persistent_index;
}

// ---------------------------------------------------------------------------

void LindbladModel::validate() const {
  for (const auto& c : collapse) {
    if (c.op.dim() != hamiltonian.dim()) throw std::invalid_argument("collapse operator dimension mismatch");
    if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) throw std::invalid_argument("collapse rates must be non-negative");
  }
  if (hamiltonian.hermiticity_residual() > 1e-12) throw std::invalid_argument("model Hamiltonian is not Hermitian");
}

LindbladModel build_decay_model(const ExtendedSystem& extended, const Operator& h_exciton, double lifetime_ns,
                                double ground_field_tesla) {
  if (!(lifetime_ns > 0.0)) throw std::invalid_argument("lifetime must be positive");
  LindbladModel model;
  model.hamiltonian = extended.lift_exciton(h_exciton);
  if (ground_field_tesla != 0.0)
    model.hamiltonian = model.hamiltonian + extended.lift_ground(zeeman(ground_field_tesla, extended.ground_system()));
  const Eigen::Index levels = extended.exciton_system().site(0).spin.multiplicity();
  for (Eigen::Index m = 0; m < levels; ++m) {
    for (Eigen::Index s = 0; s < extended.ground_dim(); ++s) {
      Matrix l = Matrix::Zero(extended.dim(), extended.dim());
      l(extended.ground_index(s), extended.exciton_index(m, s)) = 1.0;
      model.collapse.push_back({Operator(std::move(l)), 1.0 / lifetime_ns});
    }
  }
  model.lifetime_ns = lifetime_ns;
  return model;
}

double default_dt_max(const LindbladModel& model) {
  const auto es = eigensystem(model.hamiltonian);
  const double gap = es.values.size() ? es.values(es.values.size() - 1) - es.values(0) : 0.0;
  double dt = std::numeric_limits<double>::infinity();
  if (gap > 1e-12) {
    dt = constants::two_pi * constants::hbar / gap / 200.0;
  } else {
    double total_rate = 0.0;
    for (const auto& c : model.collapse) total_rate += c.rate;
    if (total_rate > 0.0) dt = 1.0 / (200.0 * total_rate);
  }
  return std::min(dt, max_stable_dt(model.hamiltonian));
}

double max_stable_dt(const Operator& h) {
  const double norm = spectral_norm(h);
  return norm > 0.0 ? kStabilityGuard * constants::hbar / norm : std::numeric_limits<double>::infinity();
}

Trajectory evolve_lindblad(const LindbladModel& model, const DensityMatrix& rho0, std::span<const double> times_ns,
                           double dt_max_ns, std::span<const Observable> observables, bool store_states) {
  model.validate();
  if (rho0.dim() != model.dim()) throw std::invalid_argument("evolve_lindblad: initial state has wrong dimension");
  for (const auto& o : observables)
    if (o.op.dim() != model.dim())
      throw std::invalid_argument("evolve_lindblad: observable '" + o.name + "' has wrong dimension");
  if (!(dt_max_ns > 0.0)) throw std::invalid_argument("dt_max must be positive");
  check_times(times_ns);

  const double stable = max_stable_dt(model.hamiltonian);
  if (dt_max_ns > stable) {
    std::ostringstream msg;
    msg << "RK4 step too large: dt_max = " << dt_max_ns << " ns gives dt |H|/hbar > " << kStabilityGuard
        << "; use dt_max <= " << stable << " ns";
    throw NumericalError(msg.str());
  }

  const Eigen::Index dim = model.dim();
  const Matrix liou = lindblad::liouvillian(model.hamiltonian.matrix(), model.collapse);

  Trajectory traj(names_of(observables));
  Matrix rho = rho0.matrix();
  double t_prev = 0.0;
  double cached_interval = -1.0;
  Matrix cached;
  for (const double t : times_ns) {
    const double interval = t - t_prev;
    if (interval > 0.0) {
      if (std::abs(interval - cached_interval) > 1e-12 * interval) {
        cached = lindblad::transfer(liou, interval, dt_max_ns);
        cached_interval = interval;
      }
      rho = lindblad::unvec(cached * lindblad::vec(rho), dim);
      rho = (0.5 * (rho + rho.adjoint())).eval();
    }
    t_prev = t;

    const auto state = DensityMatrix::unchecked(rho);
    const double min_eig = state.min_eigenvalue();
    const double drift = std::abs(rho.trace().real() - rho0.matrix().trace().real());
    traj.record_diagnostics(min_eig, drift);
    if (min_eig < kPositivityFloor) {
      std::ostringstream msg;
      msg << "density matrix lost positivity at t = " << t << " ns (min eigenvalue " << min_eig << ")";
      throw NumericalError(msg.str());
    }
    std::vector<double> values;
    values.reserve(observables.size());
    for (const auto& o : observables) values.push_back(expectation_complex(o.op, rho).real());
    std::optional<Matrix> stored;
    if (store_states) stored = rho;
    traj.append(t, std::move(values), std::move(stored));
  }
  return traj;
}

Trajectory apply_decay_envelope(const Trajectory& closed, double lifetime_ns) {
  if (!(lifetime_ns > 0.0)) throw std::invalid_argument("lifetime must be positive");
  auto keys = closed.keys();
  keys.push_back("exciton_population");
  Trajectory out(std::move(keys));
  for (std::size_t i = 0; i < closed.size(); ++i) {
    const double survival = std::exp(-closed.times()[i] / lifetime_ns);
    auto row = closed.rows()[i];
    for (auto& v : row) v *= survival;
    row.push_back(survival);
    out.append(closed.times()[i], std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace lindblad {

Vector vec(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }

Matrix unvec(const Vector& v, Eigen::Index dim) { return Eigen::Map<const Matrix>(v.data(), dim, dim); }

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

Matrix liouvillian(const Matrix& h, std::span<const CollapseOperator> collapse) {
  // vec(A X B) = (B^T (x) A) vec(X) for column-stacked vec.
  const Eigen::Index d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  const cplx minus_i_over_hbar(0.0, -1.0 / constants::hbar);
  Matrix l = minus_i_over_hbar * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& c : collapse) {
    if (c.rate == 0.0) continue;
    const Matrix& op = c.op.matrix();
    const Matrix ldl = op.adjoint() * op;
    l += c.rate * (kron(op.conjugate(), op) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id));
  }
  return l;
}

Matrix rhs(const Matrix& h, std::span<const CollapseOperator> collapse, const Matrix& rho) {
  const cplx minus_i_over_hbar(0.0, -1.0 / constants::hbar);
  Matrix out = minus_i_over_hbar * (h * rho - rho * h);
  for (const auto& c : collapse) {
    if (c.rate == 0.0) continue;
    const Matrix& op = c.op.matrix();
    const Matrix ldl = op.adjoint() * op;
    out += c.rate * (op * rho * op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

Matrix rk4_step_matrix(const Matrix& liouvillian, double dt) {
  const Eigen::Index n = liouvillian.rows();
  const Matrix x = dt * liouvillian;
  // Horner form of 1 + x + x^2/2 + x^3/6 + x^4/24.
  Matrix p = Matrix::Identity(n, n) + x / 4.0;
  p = Matrix::Identity(n, n) + (x * p) / 3.0;
  p = Matrix::Identity(n, n) + (x * p) / 2.0;
  p = Matrix::Identity(n, n) + x * p;
  return p;
}

Matrix matrix_power(const Matrix& m, std::uint64_t n) {
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (n > 0) {
    if (n & 1u) result = (result * base).eval();
    n >>= 1u;
    if (n > 0) base = (base * base).eval();
  }
  return result;
}

Matrix transfer(const Matrix& liouvillian, double duration_ns, double dt_max_ns) {
  if (!(duration_ns >= 0.0)) throw std::invalid_argument("transfer: negative duration");
  if (duration_ns == 0.0) return Matrix::Identity(liouvillian.rows(), liouvillian.cols());
  const auto steps = static_cast<std::uint64_t>(std::ceil(duration_ns / dt_max_ns - 1e-9));
  const std::uint64_t n = std::max<std::uint64_t>(steps, 1);
  return matrix_power(rk4_step_matrix(liouvillian, duration_ns / static_cast<double>(n)), n);
}

StaticRk4Propagator::StaticRk4Propagator(Matrix generator, double dt_max_ns) : gen_(std::move(generator)), dt_(dt_max_ns) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw std::invalid_argument("StaticRk4Propagator: dt_max must be positive");
  squares_.push_back(rk4_step_matrix(gen_, dt_));
}

Vector StaticRk4Propagator::apply(const Vector& v, double duration_ns) const {
  if (!(duration_ns >= 0.0)) throw std::invalid_argument("StaticRk4Propagator: negative duration");
  const double ratio = duration_ns / dt_;
  auto whole = static_cast<std::uint64_t>(std::floor(ratio + 1e-9));
  double remainder = duration_ns - static_cast<double>(whole) * dt_;
  if (remainder < 1e-9 * dt_) remainder = 0.0;

  Vector out = v;
  for (std::size_t k = 0; whole > 0; ++k, whole >>= 1u) {
    if (k == squares_.size()) squares_.push_back(squares_.back() * squares_.back());
    if (whole & 1u) out = squares_[k] * out;
  }
  if (remainder > 0.0) {
    const Vector k1 = gen_ * out;
    const Vector k2 = gen_ * (out + 0.5 * remainder * k1);
    const Vector k3 = gen_ * (out + 0.5 * remainder * k2);
    const Vector k4 = gen_ * (out + remainder * k3);
    out += (remainder / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

}  // namespace lindblad

}  // namespace exspin
