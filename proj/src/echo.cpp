#include "exspin/echo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>

#include "exspin/constants.hpp"
#include "exspin/exchange.hpp"

namespace exspin {

EchoExperiment EchoExperiment::hahn(double g, double carrier_ghz, double prep_duration_ns, double refocus_duration_ns,
                                    std::vector<double> tau_grid, DetuningEnsemble ensemble, double prep_flip_rad,
                                    double refocus_flip_rad) {
  EchoExperiment exp;
  exp.prep = PulseSegment::drive(prep_duration_ns, b1_for_flip(g, prep_duration_ns, prep_flip_rad), carrier_ghz);
  exp.refocus =
      PulseSegment::drive(refocus_duration_ns, b1_for_flip(g, refocus_duration_ns, refocus_flip_rad), carrier_ghz);
  exp.tau_grid = std::move(tau_grid);
  exp.detection_window_ns = 4.0 * prep_duration_ns;
  exp.ensemble = ensemble;
  return exp;
}

std::vector<double> draw_detunings(const DetuningEnsemble& ensemble) {
  if (ensemble.n_samples < 1) throw std::invalid_argument("detuning ensemble is empty");
  if (!(ensemble.sigma_ghz >= 0.0)) throw std::invalid_argument("detuning width must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(ensemble.n_samples), 0.0);
  if (ensemble.sigma_ghz == 0.0) return out;
  std::mt19937_64 rng(ensemble.seed);
  std::normal_distribution<double> normal(0.0, ensemble.sigma_ghz);
  for (auto& d : out) d = normal(rng);
  return out;
}

void validate_experiment(const EchoExperiment& exp, double j_mev) {
  if (!exp.prep.is_drive() || !exp.refocus.is_drive()) throw std::invalid_argument("echo pulses must be drive segments");
  if (exp.prep.frequency_ghz != exp.refocus.frequency_ghz)
    throw std::invalid_argument("prep and refocus pulses must share the carrier frequency");
  if (exp.ensemble.n_samples < 1) throw std::invalid_argument("detuning ensemble is empty");
  if (!(exp.detection_window_ns > 0.0)) throw std::invalid_argument("detection window must be positive");
  if (exp.tau_grid.empty()) throw std::invalid_argument("tau grid is empty");
  const double min_tau = std::max(0.5 * (exp.prep.duration_ns + exp.refocus.duration_ns),
                                  0.5 * (exp.refocus.duration_ns + exp.detection_window_ns));
  double max_step = 0.0;
  for (std::size_t i = 0; i < exp.tau_grid.size(); ++i) {
    const double tau = exp.tau_grid[i];
    if (!(tau >= min_tau)) throw std::invalid_argument("tau too short for the pulses and detection window");
    if (i > 0) {
      if (!(tau > exp.tau_grid[i - 1])) throw std::invalid_argument("tau grid must be strictly ascending");
      max_step = std::max(max_step, tau - exp.tau_grid[i - 1]);
    }
  }
  if (j_mev != 0.0 && exp.tau_grid.size() > 1) {
    const double period_ns = ps_to_ns(oscillation_period_ps(j_mev));
    if (!(max_step < 0.25 * period_ns))
      throw std::invalid_argument("tau grid does not resolve the exchange beat (step must be < period/4)");
  }
}

namespace {

// Integral over [0, w] of exp(-i omega t).
cplx window_kernel(double omega, double w) {
  const double x = omega * w;
  if (std::abs(x) < 1e-4) {
    const cplx i(0.0, 1.0);
    return w * (1.0 - i * x / 2.0 - x * x / 6.0 + i * x * x * x / 24.0);
  }
  return (1.0 - std::polar(1.0, -x)) / cplx(0.0, omega);
}

std::vector<cplx> closed_sample(const EchoExperiment& exp, const Matrix& rho0, const Operator& h_frame,
                                const Operator& h_prep, const Operator& h_refocus, const Matrix& splus) {
  const auto es = eigensystem(h_frame);
  const Matrix& v = es.vectors;
  const Eigen::Index d = v.rows();
  const Matrix u_prep = propagator(h_prep, exp.prep.duration_ns).matrix();
  const Matrix u_ref = v.adjoint() * propagator(h_refocus, exp.refocus.duration_ns).matrix() * v;
  const Matrix rho_prep = v.adjoint() * (u_prep * rho0 * u_prep.adjoint()) * v;
  const Matrix obs = v.adjoint() * splus * v;

  Matrix omega(d, d);  // (lambda_k - lambda_l) / hbar
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l) omega(k, l) = (es.values(k) - es.values(l)) / constants::hbar;
  auto free_evolve = [&](const Matrix& rho, double t) {
    Matrix out(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = 0; l < d; ++l) out(k, l) = rho(k, l) * std::polar(1.0, -omega(k, l).real() * t);
    return out;
  };

  const double w = exp.detection_window_ns;
  Matrix kernel(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l) kernel(k, l) = window_kernel(omega(k, l).real(), w);

  std::vector<cplx> out;
  out.reserve(exp.tau_grid.size());
  for (const double tau : exp.tau_grid) {
    const double d1 = tau - 0.5 * exp.prep.duration_ns - 0.5 * exp.refocus.duration_ns;
    const double d2 = tau - 0.5 * exp.refocus.duration_ns - 0.5 * w;
    const Matrix r1 = free_evolve(rho_prep, d1);
    const Matrix r2 = u_ref * r1 * u_ref.adjoint();
    const Matrix r3 = free_evolve(r2, d2);
    // sum_kl rho_kl O_lk K_kl
    out.push_back((r3.cwiseProduct(obs.transpose()).cwiseProduct(kernel)).sum());
  }
  return out;
}

std::vector<cplx> dissipative_sample(const EchoExperiment& exp, const EchoSetup& setup, const Operator& h_frame,
                                     const Operator& h_prep, const Operator& h_refocus, const Matrix& splus) {
  const Eigen::Index d = h_frame.dim();
  const auto& collapse = setup.model.collapse;
  LindbladModel frame_model{h_frame, collapse, setup.model.lifetime_ns};
  double dt = setup.dt_max_ns > 0.0 ? setup.dt_max_ns : default_dt_max(frame_model);
  dt = std::min({dt, max_stable_dt(h_frame), max_stable_dt(h_prep), max_stable_dt(h_refocus)});

  const Matrix l_free = lindblad::liouvillian(h_frame.matrix(), collapse);
  const lindblad::StaticRk4Propagator free(l_free, dt);
  const Matrix m_prep = lindblad::transfer(lindblad::liouvillian(h_prep.matrix(), collapse), exp.prep.duration_ns, dt);
  const Matrix m_ref =
      lindblad::transfer(lindblad::liouvillian(h_refocus.matrix(), collapse), exp.refocus.duration_ns, dt);

  // Augmented generator: the extra component accumulates Tr(s+ rho) dt.
  const Eigen::Index n = d * d;
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = l_free;
  aug.block(n, 0, 1, n) = lindblad::vec(splus.transpose()).transpose();
  const Matrix m_window = lindblad::transfer(aug, exp.detection_window_ns, dt);

  const Vector v_prep = m_prep * lindblad::vec(setup.initial.matrix());
  std::vector<cplx> out;
  out.reserve(exp.tau_grid.size());
  for (const double tau : exp.tau_grid) {
    const double d1 = tau - 0.5 * exp.prep.duration_ns - 0.5 * exp.refocus.duration_ns;
    const double d2 = tau - 0.5 * exp.refocus.duration_ns - 0.5 * exp.detection_window_ns;
    const Vector v2 = free.apply(m_ref * free.apply(v_prep, d1), d2);
    Vector a = Vector::Zero(n + 1);
    a.head(n) = v2;
    out.push_back((m_window.row(n) * a)(0));
  }
  return out;
}

bool dissipative(const LindbladModel& model) {
  return std::any_of(model.collapse.begin(), model.collapse.end(), [](const auto& c) { return c.rate > 0.0; });
}

EchoTrace reduce(const EchoExperiment& exp, const std::vector<std::vector<cplx>>& per_sample) {
  EchoTrace trace;
  trace.taus = exp.tau_grid;
  const double n = static_cast<double>(per_sample.size());
  for (std::size_t t = 0; t < exp.tau_grid.size(); ++t) {
    cplx sum{};
    for (const auto& s : per_sample) sum += s[t];
    trace.integrated_echo.push_back(std::abs(sum / n));
  }
  return trace;
}

}  // namespace

std::vector<cplx> echo_sample(const EchoExperiment& exp, const EchoSetup& setup, double detuning_ghz) {
  const auto& observed = setup.sites.site(setup.observed_site);
  const Operator h_frame = rotating_frame(setup.model.hamiltonian, exp.prep.frequency_ghz, setup.sites) +
                           ghz_to_mev(detuning_ghz) * observed.sz;
  const Operator h_prep = h_frame + rwa_drive(exp.prep, setup.sites);
  const Operator h_refocus = h_frame + rwa_drive(exp.refocus, setup.sites);
  const Matrix splus = observed.sx.matrix() + cplx(0.0, 1.0) * observed.sy.matrix();
  if (dissipative(setup.model)) return dissipative_sample(exp, setup, h_frame, h_prep, h_refocus, splus);
  return closed_sample(exp, setup.initial.matrix(), h_frame, h_prep, h_refocus, splus);
}

EchoTrace integrated_echo_serial(const EchoExperiment& exp, const EchoSetup& setup, double j_mev) {
  validate_experiment(exp, j_mev);
  const auto detunings = draw_detunings(exp.ensemble);
  std::vector<std::vector<cplx>> per_sample;
  per_sample.reserve(detunings.size());
  for (const double delta : detunings) per_sample.push_back(echo_sample(exp, setup, delta));
  return reduce(exp, per_sample);
}

EchoTrace integrated_echo(const EchoExperiment& exp, const EchoSetup& setup, double j_mev) {
  validate_experiment(exp, j_mev);
  const auto detunings = draw_detunings(exp.ensemble);
  const auto n = static_cast<long>(detunings.size());
  std::vector<std::vector<cplx>> per_sample(detunings.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    try {
      per_sample[static_cast<std::size_t>(k)] = echo_sample(exp, setup, detunings[static_cast<std::size_t>(k)]);
    } catch (...) {
#pragma omp critical(exspin_echo_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(exp, per_sample);
}

// ---------------------------------------------------------------------------

double dominant_frequency(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 4) throw std::invalid_argument("dominant_frequency needs >= 4 matching samples");
  const std::size_t n = x.size();
  const double span = x.back() - x.front();
  const double dx = span / static_cast<double>(n - 1);
  if (!(dx > 0.0)) throw std::invalid_argument("dominant_frequency: x must be ascending");
  // Variance explained by the best fit c0 + c1 cos + c2 sin at frequency f.
  // Unlike the plain periodogram this carries no bias from the image at -f.
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  auto power = [&](double f) {
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = constants::two_pi * f * (x[i] - x.front());
      basis.row(static_cast<Eigen::Index>(i)) << 1.0, std::cos(phase), std::sin(phase);
    }
    const Eigen::Vector3d coef = (basis.transpose() * basis).ldlt().solve(basis.transpose() * yv);
    return (basis * coef).squaredNorm();
  };

  const double f_lo = 1.0 / span;
  const double f_hi = 0.5 / dx;
  const std::size_t grid = 40 * n;
  const double df = (f_hi - f_lo) / static_cast<double>(grid);
  double best_f = f_lo, best_p = -1.0;
  for (std::size_t k = 0; k <= grid; ++k) {
    const double f = f_lo + df * static_cast<double>(k);
    const double p = power(f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  // Golden-section refinement around the grid maximum.
  double a = std::max(f_lo, best_f - df), b = std::min(f_hi, best_f + df);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a), e = a + ratio * (b - a);
  double pc = power(c), pe = power(e);
  for (int it = 0; it < 80; ++it) {
    if (pc > pe) {
      b = e;
      e = c;
      pe = pc;
      c = b - ratio * (b - a);
      pc = power(c);
    } else {
      a = c;
      c = e;
      pc = pe;
      e = a + ratio * (b - a);
      pe = power(e);
    }
  }
  return 0.5 * (a + b);
}

double echo_beat_gap_mev(const EchoTrace& trace) {
  const double per_tau = dominant_frequency(trace.taus, trace.integrated_echo);
  return ghz_to_mev(0.5 * per_tau);
}

}  // namespace exspin
