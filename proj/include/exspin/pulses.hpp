#pragma once

#include <optional>
#include <span>
#include <vector>

#include "exspin/dynamics.hpp"
#include "exspin/spin_core.hpp"

namespace exspin {

struct PulseSegment {
  enum class Kind { Drive, Delay };

  Kind kind = Kind::Delay;
  double duration_ns = 0.0;
  double b1_tesla = 0.0;
  double frequency_ghz = 0.0;
  double phase_rad = 0.0;

  static PulseSegment drive(double duration_ns, double b1_tesla, double frequency_ghz, double phase_rad = 0.0);
  static PulseSegment delay(double duration_ns);

  bool is_drive() const { return kind == Kind::Drive; }
};

class PulseSequence {
 public:
  PulseSequence() = default;
  explicit PulseSequence(std::vector<PulseSegment> segments);

  const std::vector<PulseSegment>& segments() const { return segments_; }
  double total_duration() const { return total_; }
  bool empty() const { return segments_.empty(); }

  /// The whole sequence must finish before the exciton decays.
  bool exceeds_lifetime(double lifetime_ns) const { return total_ >= lifetime_ns; }

 private:
  std::vector<PulseSegment> segments_;
  double total_ = 0.0;
};

/// Lab-frame linearly polarized drive:
/// H_d(t) = sum_i g_i mu_B b1 cos(2 pi f t + phi) Sx_i.
Operator drive_hamiltonian(const PulseSegment& segment, double t_ns, const SiteOperatorSet& sites);

/// h_static - h f Sz_tot. Throws std::invalid_argument when h_static does not
/// commute with Sz_tot (the lab-frame path must be used then).
Operator rotating_frame(const Operator& h_static, double frequency_ghz, const SiteOperatorSet& sites);

/// Co-rotating half of the drive in the frame rotating at the carrier:
/// sum_i (g_i mu_B b1 / 2) (cos phi Sx_i + sin phi Sy_i).
Operator rwa_drive(const PulseSegment& segment, const SiteOperatorSet& sites);

/// RWA nutation frequency g mu_B b1 / (2 h), GHz.
double nutation_frequency_ghz(double g, double b1_tesla);

/// Half a nutation cycle: h / (g mu_B b1), ns.
double pi_pulse_duration(double g, double b1_tesla);

/// b1 that rotates a spin with this g by `angle_rad` in `duration_ns`.
double b1_for_flip(double g, double duration_ns, double angle_rad);

/// Larmor frequency g mu_B B / h, GHz.
double larmor_frequency_ghz(double g, double b_tesla);

enum class Frame { Lab, Rotating };

struct SequenceOptions {
  Frame frame = Frame::Rotating;
  /// Rotating-frame carrier; defaults to the drive segments' common frequency.
  std::optional<double> carrier_ghz;
  /// Cap on the RK4 step; defaults to default_dt_max of each segment's
  /// Hamiltonian (rotating frame) or of the model (lab frame).
  std::optional<double> dt_max_ns;
  /// Lab-frame drive steps per carrier cycle (at least 50).
  double lab_steps_per_cycle = 50.0;
};

struct SequenceRun {
  /// Observables at t = 0 and at the end of every segment. In the rotating
  /// frame the states are rotating-frame states.
  Trajectory trajectory;
  DensityMatrix final_state;
  /// Set when a decaying model's lifetime is not longer than the sequence.
  bool exceeds_lifetime = false;
};

SequenceRun run_sequence(const PulseSequence& sequence, const DensityMatrix& initial, const LindbladModel& model,
                         const SiteOperatorSet& sites, std::span<const Observable> observables,
                         const SequenceOptions& options = {});

/// R rho R^dagger with R = exp(i 2 pi f t Sz_tot): lab state -> rotating frame.
Matrix to_rotating_frame(const Matrix& rho_lab, double frequency_ghz, double t_ns, const SiteOperatorSet& sites);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double state_fidelity(const Matrix& a, const Matrix& b);

}  // namespace exspin
