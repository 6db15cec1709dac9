#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exspin/dynamics.hpp"
#include "exspin/pulses.hpp"

namespace exspin {

/// Static Gaussian detuning of the observed spin (inhomogeneous broadening).
struct DetuningEnsemble {
  double sigma_ghz = 0.01;
  int n_samples = 64;
  std::uint64_t seed = 42;
};

/// Hahn echo swept over tau: prep - tau - refocus - tau - [window].
///
/// Delays are measured between pulse centres, so the nominal echo sits at
/// prep.duration/2 + 2 tau after the start of the prep pulse and the
/// detection window is centred there.
struct EchoExperiment {
  PulseSegment prep;
  std::vector<double> tau_grid;
  PulseSegment refocus;
  double detection_window_ns = 0.0;
  DetuningEnsemble ensemble;

  /// Flip-angle parametrized experiment on a site with factor `g`: the window
  /// defaults to four prep durations.
  static EchoExperiment hahn(double g, double carrier_ghz, double prep_duration_ns, double refocus_duration_ns,
                             std::vector<double> tau_grid, DetuningEnsemble ensemble = {},
                             double prep_flip_rad = 1.5707963267948966, double refocus_flip_rad = 3.141592653589793);

  double nominal_echo_time(double tau_ns) const { return 0.5 * prep.duration_ns + 2.0 * tau_ns; }
};

/// What the experiment acts on.
struct EchoSetup {
  SiteOperatorSet sites;
  LindbladModel model;  // lab-frame static Hamiltonian (+ decay)
  DensityMatrix initial;
  std::string observed_site = "cu";
  /// Cap on the RK4 step for dissipative models; 0 picks default_dt_max.
  double dt_max_ns = 0.0;
};

struct EchoTrace {
  std::vector<double> taus;
  /// |ensemble average of the window integral of <s+>| in ns.
  std::vector<double> integrated_echo;
};

/// Detunings (GHz) drawn for the ensemble, in sample order.
std::vector<double> draw_detunings(const DetuningEnsemble& ensemble);

/// Window integrals (complex, ns) of one detuning sample for every tau.
std::vector<cplx> echo_sample(const EchoExperiment& exp, const EchoSetup& setup, double detuning_ghz);

/// OpenMP over ensemble samples; reduction in sample order, so the result is
/// bit-identical to integrated_echo_serial.
EchoTrace integrated_echo(const EchoExperiment& exp, const EchoSetup& setup, double j_mev);
EchoTrace integrated_echo_serial(const EchoExperiment& exp, const EchoSetup& setup, double j_mev);

/// Throws std::invalid_argument for an empty ensemble, non-ascending taus,
/// delays too short for the pulses/window, or (J != 0) a tau step not below a
/// quarter of the exchange beat period.
void validate_experiment(const EchoExperiment& exp, double j_mev);

/// Frequency (cycles per unit of x) of the strongest non-DC Fourier component
/// of y(x), x uniformly spaced.
double dominant_frequency(std::span<const double> x, std::span<const double> y);

/// Exchange gap (meV) read off the echo trace. The exchange phase builds up
/// over the echo time 2 tau, so the trace beats at twice the gap frequency per
/// unit tau.
double echo_beat_gap_mev(const EchoTrace& trace);

}  // namespace exspin
