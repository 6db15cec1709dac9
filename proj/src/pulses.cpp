#include "exspin/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "exspin/constants.hpp"
#include "exspin/error.hpp"

namespace exspin {

PulseSegment PulseSegment::drive(double duration_ns, double b1_tesla, double frequency_ghz, double phase_rad) {
  if (!(duration_ns > 0.0)) throw std::invalid_argument("pulse duration must be positive");
  if (!(b1_tesla >= 0.0)) throw std::invalid_argument("drive amplitude must be non-negative");
  if (!(frequency_ghz >= 0.0)) throw std::invalid_argument("drive frequency must be non-negative");
  return {Kind::Drive, duration_ns, b1_tesla, frequency_ghz, phase_rad};
}

PulseSegment PulseSegment::delay(double duration_ns) {
  if (!(duration_ns > 0.0)) throw std::invalid_argument("delay duration must be positive");
  return {Kind::Delay, duration_ns, 0.0, 0.0, 0.0};
}

PulseSequence::PulseSequence(std::vector<PulseSegment> segments) : segments_(std::move(segments)) {
  for (const auto& s : segments_) {
    if (!(s.duration_ns > 0.0)) throw std::invalid_argument("segment duration must be positive");
    total_ += s.duration_ns;
  }
}

// ---------------------------------------------------------------------------

Operator drive_hamiltonian(const PulseSegment& segment, double t_ns, const SiteOperatorSet& sites) {
  if (!segment.is_drive()) throw std::invalid_argument("drive_hamiltonian called on a delay segment");
  const double envelope = std::cos(constants::two_pi * segment.frequency_ghz * t_ns + segment.phase_rad);
  Operator h = Operator::zero(sites.dim);
  for (const auto& s : sites.sites) h = h + (s.g_factor * constants::mu_bohr * segment.b1_tesla * envelope) * s.sx;
  return h;
}

Operator rotating_frame(const Operator& h_static, double frequency_ghz, const SiteOperatorSet& sites) {
  if (h_static.dim() != sites.dim) throw std::invalid_argument("rotating_frame: dimension mismatch");
  const Matrix sz = sites.total_sz().matrix();
  const Matrix& h = h_static.matrix();
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h * sz - sz * h).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("static Hamiltonian does not commute with total Sz; use the lab frame");
  return h_static - ghz_to_mev(frequency_ghz) * sites.total_sz();
}

Operator rwa_drive(const PulseSegment& segment, const SiteOperatorSet& sites) {
  if (!segment.is_drive()) throw std::invalid_argument("rwa_drive called on a delay segment");
  Operator h = Operator::zero(sites.dim);
  const double c = std::cos(segment.phase_rad), s = std::sin(segment.phase_rad);
  for (const auto& site : sites.sites) {
    const double amp = 0.5 * site.g_factor * constants::mu_bohr * segment.b1_tesla;
    h = h + (amp * c) * site.sx + (amp * s) * site.sy;
  }
  return h;
}

double nutation_frequency_ghz(double g, double b1_tesla) {
  return g * constants::mu_bohr * b1_tesla / (2.0 * constants::planck_h);
}

double pi_pulse_duration(double g, double b1_tesla) {
  if (!(b1_tesla > 0.0)) throw std::domain_error("pi pulse needs a positive drive amplitude");
  if (!(g > 0.0)) throw std::domain_error("g-factor must be positive");
  return constants::planck_h / (g * constants::mu_bohr * b1_tesla);
}

double b1_for_flip(double g, double duration_ns, double angle_rad) {
  if (!(duration_ns > 0.0) || !(g > 0.0)) throw std::domain_error("b1_for_flip: duration and g must be positive");
  // angle = (g mu_B b1 / 2) duration / hbar
  return 2.0 * constants::hbar * angle_rad / (g * constants::mu_bohr * duration_ns);
}

double larmor_frequency_ghz(double g, double b_tesla) { return mev_to_ghz(g * constants::mu_bohr * b_tesla); }

// ---------------------------------------------------------------------------

Matrix to_rotating_frame(const Matrix& rho_lab, double frequency_ghz, double t_ns, const SiteOperatorSet& sites) {
  const Matrix sz = sites.total_sz().matrix();
  // Sz_tot is diagonal in every product basis used here.
  Vector phase(sz.rows());
  for (Eigen::Index k = 0; k < sz.rows(); ++k)
    phase(k) = std::polar(1.0, constants::two_pi * frequency_ghz * t_ns * sz(k, k).real());
  return phase.asDiagonal() * rho_lab * phase.conjugate().asDiagonal();
}

double state_fidelity(const Matrix& a, const Matrix& b) {
  auto sqrt_psd = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Matrix(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint());
  };
  const Matrix sa = sqrt_psd(a);
  const Matrix inner = sa * b * sa;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

namespace {

std::vector<double> record(const Matrix& rho, std::span<const Observable> observables) {
  std::vector<double> values;
  values.reserve(observables.size());
  for (const auto& o : observables) values.push_back(expectation_complex(o.op, rho).real());
  return values;
}

std::vector<std::string> names_of(std::span<const Observable> observables) {
  std::vector<std::string> keys;
  for (const auto& o : observables) keys.push_back(o.name);
  return keys;
}

// Static evolution over `duration`: exact unitary without dissipation,
// fixed-step RK4 otherwise.
Matrix evolve_static(const Matrix& rho, const Operator& h, std::span<const CollapseOperator> collapse,
                     double duration, double dt_cap) {
  const bool dissipative = std::any_of(collapse.begin(), collapse.end(), [](const auto& c) { return c.rate > 0.0; });
  if (!dissipative) {
    const Matrix u = propagator(h, duration).matrix();
    return u * rho * u.adjoint();
  }
  const double dt = std::min(dt_cap, max_stable_dt(h));
  const Matrix m = lindblad::transfer(lindblad::liouvillian(h.matrix(), collapse), duration, dt);
  Matrix out = lindblad::unvec(m * lindblad::vec(rho), rho.rows());
  return 0.5 * (out + out.adjoint());
}

// Lab-frame drive segment: RK4 with H(t) evaluated at the stage times.
Matrix evolve_driven_lab(const Matrix& rho0, const Operator& h0, const PulseSegment& seg, double t_start,
                         std::span<const CollapseOperator> collapse, const SiteOperatorSet& sites, double dt_cap,
                         double steps_per_cycle) {
  double dt = dt_cap;
  if (seg.frequency_ghz > 0.0) dt = std::min(dt, 1.0 / (std::max(50.0, steps_per_cycle) * seg.frequency_ghz));
  const Operator peak = h0 + drive_hamiltonian(PulseSegment::drive(seg.duration_ns, seg.b1_tesla, 0.0), 0.0, sites);
  dt = std::min(dt, std::min(max_stable_dt(h0), max_stable_dt(peak)));
  const auto n = static_cast<long>(std::ceil(seg.duration_ns / dt - 1e-9));
  const double h = seg.duration_ns / static_cast<double>(std::max(n, 1L));

  auto hamiltonian_at = [&](double t) { return (h0 + drive_hamiltonian(seg, t, sites)).matrix(); };
  Matrix rho = rho0;
  double t = t_start;
  for (long k = 0; k < std::max(n, 1L); ++k) {
    const Matrix h_start = hamiltonian_at(t);
    const Matrix h_mid = hamiltonian_at(t + 0.5 * h);
    const Matrix h_end = hamiltonian_at(t + h);
    const Matrix k1 = lindblad::rhs(h_start, collapse, rho);
    const Matrix k2 = lindblad::rhs(h_mid, collapse, rho + 0.5 * h * k1);
    const Matrix k3 = lindblad::rhs(h_mid, collapse, rho + 0.5 * h * k2);
    const Matrix k4 = lindblad::rhs(h_end, collapse, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = (0.5 * (rho + rho.adjoint())).eval();
    t = t_start + static_cast<double>(k + 1) * h;
  }
  return rho;
}

}  // namespace

SequenceRun run_sequence(const PulseSequence& sequence, const DensityMatrix& initial, const LindbladModel& model,
                         const SiteOperatorSet& sites, std::span<const Observable> observables,
                         const SequenceOptions& options) {
  model.validate();
  if (initial.dim() != model.dim() || sites.dim != model.dim())
    throw std::invalid_argument("run_sequence: state, model and site operators must share a dimension");

  std::optional<double> carrier = options.carrier_ghz;
  for (const auto& seg : sequence.segments()) {
    if (!seg.is_drive()) continue;
    if (!carrier) carrier = seg.frequency_ghz;
    else if (options.frame == Frame::Rotating && !options.carrier_ghz && seg.frequency_ghz != *carrier)
      throw std::invalid_argument("rotating frame needs a common carrier frequency for all drive segments");
  }

  const double dt_cap = options.dt_max_ns.value_or(default_dt_max(model));
  const Operator h_static =
      options.frame == Frame::Rotating ? rotating_frame(model.hamiltonian, carrier.value_or(0.0), sites) : model.hamiltonian;

  Trajectory traj(names_of(observables));
  Matrix rho = initial.matrix();
  traj.append(0.0, record(rho, observables));
  double t = 0.0;
  for (const auto& seg : sequence.segments()) {
    if (!seg.is_drive()) {
      rho = evolve_static(rho, h_static, model.collapse, seg.duration_ns, dt_cap);
    } else if (options.frame == Frame::Rotating) {
      const Operator h_seg = h_static + rwa_drive(seg, sites);
      const double dt = options.dt_max_ns.value_or(default_dt_max(LindbladModel{h_seg, model.collapse, std::nullopt}));
      rho = evolve_static(rho, h_seg, model.collapse, seg.duration_ns, dt);
    } else {
      rho = evolve_driven_lab(rho, h_static, seg, t, model.collapse, sites, dt_cap, options.lab_steps_per_cycle);
    }
    t += seg.duration_ns;
    const auto state = DensityMatrix::unchecked(rho);
    const double min_eig = state.min_eigenvalue();
    traj.record_diagnostics(min_eig, std::abs(rho.trace().real() - 1.0));
    if (min_eig < -1e-7) throw NumericalError("pulse sequence lost positivity of the density matrix");
    traj.append(t, record(rho, observables));
  }

  const bool too_long = model.lifetime_ns && sequence.exceeds_lifetime(*model.lifetime_ns);
  return {std::move(traj), DensityMatrix::unchecked(rho), too_long};
}

}  // namespace exspin
