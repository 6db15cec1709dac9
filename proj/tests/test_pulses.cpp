#include "doctest.h"

#include <cmath>

#include "exspin/constants.hpp"
#include "exspin/pulses.hpp"
#include "oracles.hpp"

using namespace exspin;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

struct HalfSpin {
  SpinSystem system{{SpinSite(SpinValue::half(), 2.0, "e")}};
  SiteOperatorSet sites = SiteOperatorSet::from_system(system);
  double field = 0.35;
  double larmor = larmor_frequency_ghz(2.0, 0.35);
  LindbladModel model{zeeman(0.35, system), {}, std::nullopt};
  DensityMatrix down = DensityMatrix::pure(StateVector::basis(2, 1));
  std::vector<Observable> obs{{"sx", sites.site("e").sx}, {"sy", sites.site("e").sy}, {"sz", sites.site("e").sz}};
};

}  // namespace

TEST_SUITE("pulses") {
  TEST_CASE("segments and sequences") {
    CHECK_THROWS_AS(PulseSegment::drive(0.0, 1e-3, 9.8), std::invalid_argument);
    CHECK_THROWS_AS(PulseSegment::drive(1.0, -1e-3, 9.8), std::invalid_argument);
    CHECK_THROWS_AS(PulseSegment::delay(-1.0), std::invalid_argument);
    const PulseSequence seq({PulseSegment::drive(0.1, 0.1, 9.8), PulseSegment::delay(1.0),
                             PulseSegment::drive(0.2, 0.1, 9.8), PulseSegment::delay(1.0)});
    CHECK(seq.total_duration() == doctest::Approx(2.3).epsilon(1e-12));
    CHECK_FALSE(seq.exceeds_lifetime(2.31));
    CHECK(seq.exceeds_lifetime(seq.total_duration()));
    CHECK(seq.exceeds_lifetime(1.0));
  }

  TEST_CASE("lab-frame drive operator") {
    const HalfSpin s;
    CHECK(max_abs(drive_hamiltonian(PulseSegment::drive(1.0, 0.0, 9.8), 0.3, s.sites).matrix()) == 0.0);
    const auto seg = PulseSegment::drive(1.0, 1e-3, 9.8);
    const double quarter = 0.25 / 9.8;
    CHECK(max_abs(drive_hamiltonian(seg, quarter, s.sites).matrix()) < 1e-12 * 1e-4);
    const double peak = max_abs(drive_hamiltonian(seg, 0.0, s.sites).matrix());
    CHECK(peak == doctest::Approx(2.0 * oracle::mu_b * 1e-3 / 2.0).epsilon(1e-14));
    CHECK(peak == doctest::Approx(5.788e-5).epsilon(1e-4));
    CHECK_THROWS_AS(drive_hamiltonian(PulseSegment::delay(1.0), 0.0, s.sites), std::invalid_argument);
  }

  TEST_CASE("rotating frame") {
    const HalfSpin s;
    const Operator frame = rotating_frame(s.model.hamiltonian, s.larmor, s.sites);
    CHECK(max_abs(frame.matrix()) < 1e-15);
    const Operator total = frame + rwa_drive(PulseSegment::drive(1.0, 1e-3, s.larmor), s.sites);
    CHECK(std::abs(total.matrix()(0, 1).real() - 0.5 * 2.0 * oracle::mu_b * 1e-3 * 0.5) < 1e-18);
    CHECK(std::abs(total.matrix()(0, 0)) < 1e-15);

    const auto sys = SpinSystem::triplet_and_copper();
    const auto sites = SiteOperatorSet::from_system(sys);
    const Operator ex = heisenberg(-1.5, sys, 0, 1);
    CHECK(max_abs((rotating_frame(ex, 9.8, sites) + ghz_to_mev(9.8) * sites.total_sz() - ex).matrix()) < 1e-15);

    const Operator tilted = ex + 0.01 * sites.total_sx();
    CHECK_THROWS_AS(rotating_frame(tilted, 9.8, sites), std::invalid_argument);
  }

  TEST_CASE("RWA nutation frequency") {
    const HalfSpin s;
    const double b1 = 5e-3;
    CHECK(nutation_frequency_ghz(2.0, b1) == doctest::Approx(2.0 * oracle::mu_b * b1 / (2.0 * oracle::planck)).epsilon(1e-14));
    // Drive a sequence of short segments and compare with the analytic Rabi solution.
    std::vector<PulseSegment> segs(20, PulseSegment::drive(0.5, b1, s.larmor));
    const auto run = run_sequence(PulseSequence(segs), s.down, s.model, s.sites, s.obs);
    const auto sz = run.trajectory.column("sz");
    for (std::size_t i = 0; i < sz.size(); ++i)
      CHECK(sz[i] == doctest::Approx(oracle::rabi_sz(2.0, b1, run.trajectory.times()[i])).epsilon(1e-9));
  }

  TEST_CASE("pi pulse duration is half a nutation cycle") {
    CHECK(pi_pulse_duration(2.0, 1e-3) == doctest::Approx(oracle::planck / (2.0 * oracle::mu_b * 1e-3)).epsilon(1e-14));
    CHECK(pi_pulse_duration(2.0, 1e-3) == doctest::Approx(35.72).epsilon(1e-3));
    CHECK(pi_pulse_duration(2.0, 2e-3) == doctest::Approx(0.5 * pi_pulse_duration(2.0, 1e-3)).epsilon(1e-14));
    CHECK(pi_pulse_duration(2.0, 1e-3) == doctest::Approx(0.5 / nutation_frequency_ghz(2.0, 1e-3)).epsilon(1e-14));
    const double b1 = oracle::planck / (2.0 * oracle::mu_b * 0.1);
    CHECK(b1 == doctest::Approx(0.3572).epsilon(1e-3));
    CHECK(b1_for_flip(2.0, 0.1, M_PI) == doctest::Approx(b1).epsilon(1e-9));
    CHECK_THROWS_AS(pi_pulse_duration(2.0, 0.0), std::domain_error);

    // The duration really is a pi rotation.
    const HalfSpin s;
    const auto seg = PulseSegment::drive(pi_pulse_duration(2.0, 1e-3), 1e-3, s.larmor);
    const auto run = run_sequence(PulseSequence({seg}), s.down, s.model, s.sites, s.obs);
    CHECK(run.trajectory.column("sz").back() == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("empty sequence leaves the state alone") {
    const HalfSpin s;
    const auto run = run_sequence(PulseSequence(), s.down, s.model, s.sites, s.obs);
    CHECK(run.trajectory.size() == 1);
    CHECK(max_abs(run.final_state.matrix() - s.down.matrix()) == 0.0);
  }

  TEST_CASE("RWA pi pulse flips the spin") {
    const HalfSpin s;
    const double b1 = b1_for_flip(2.0, 0.1, M_PI);
    const auto run = run_sequence(PulseSequence({PulseSegment::drive(0.1, b1, s.larmor)}), s.down, s.model, s.sites, s.obs);
    CHECK(run.trajectory.column("sz").front() == -0.5);
    CHECK(run.trajectory.column("sz").back() == doctest::Approx(0.5).epsilon(1e-10));
    const Matrix up = DensityMatrix::pure(StateVector::basis(2, 0)).matrix();
    CHECK(state_fidelity(run.final_state.matrix(), up) >= 0.999);
  }

  TEST_CASE("lab frame agrees with RWA when nutation/carrier <= 0.01") {
    const HalfSpin s;
    const double nu1 = 0.01 * s.larmor;
    const double b1 = 2.0 * oracle::planck * nu1 / (2.0 * oracle::mu_b);
    CHECK(nutation_frequency_ghz(2.0, b1) / s.larmor == doctest::Approx(0.01).epsilon(1e-12));
    for (const double flip : {M_PI / 2, M_PI}) {
      const double dur = flip / (constants::two_pi * nu1);
      const PulseSequence seq({PulseSegment::drive(dur, b1, s.larmor)});
      const auto rwa = run_sequence(seq, s.down, s.model, s.sites, s.obs);
      SequenceOptions lab;
      lab.frame = Frame::Lab;
      const auto labrun = run_sequence(seq, s.down, s.model, s.sites, s.obs, lab);
      CHECK(std::abs(labrun.trajectory.column("sz").back() - rwa.trajectory.column("sz").back()) <= 1e-3);
      const Matrix lab_in_frame = to_rotating_frame(labrun.final_state.matrix(), s.larmor, dur, s.sites);
      CHECK(state_fidelity(lab_in_frame, rwa.final_state.matrix()) >= 0.999);
    }
  }

  TEST_CASE("phase covariance of a pi/2 pulse") {
    const HalfSpin s;
    const double b1 = b1_for_flip(2.0, 0.1, M_PI / 2);
    for (const double phi : {0.0, 0.3, 1.2}) {
      const auto a = run_sequence(PulseSequence({PulseSegment::drive(0.1, b1, s.larmor, phi)}), s.down, s.model, s.sites, s.obs);
      const auto b = run_sequence(PulseSequence({PulseSegment::drive(0.1, b1, s.larmor, phi + M_PI)}), s.down, s.model, s.sites, s.obs);
      const double sy_a = a.trajectory.column("sy").back(), sy_b = b.trajectory.column("sy").back();
      CHECK(std::abs(sy_a + sy_b) <= 1e-6);
      CHECK(std::hypot(a.trajectory.column("sx").back(), sy_a) == doctest::Approx(0.5).epsilon(1e-9));
    }
  }

  TEST_CASE("sequence-too-long flag") {
    const ExtendedSystem ext(SpinSystem::triplet_and_copper());
    const auto model = build_decay_model(ext, Operator::zero(6), 2.0);
    const auto sites = ext.site_operators();
    const int m[] = {2, -1};
    const auto rho0 = ext.lift_state(DensityMatrix::pure(StateVector::product(ext.exciton_system(), m)));
    const double b1 = b1_for_flip(2.0, 0.1, M_PI);
    const auto just_under = run_sequence(PulseSequence({PulseSegment::drive(0.1, b1, 0.0), PulseSegment::delay(1.89)}),
                                         rho0, model, sites, {});
    CHECK_FALSE(just_under.exceeds_lifetime);
    const auto equal = run_sequence(PulseSequence({PulseSegment::drive(0.1, b1, 0.0), PulseSegment::delay(1.9)}),
                                    rho0, model, sites, {});
    CHECK(equal.exceeds_lifetime);
    CHECK(equal.final_state.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("rotating frame needs a common carrier") {
    const HalfSpin s;
    const PulseSequence seq({PulseSegment::drive(0.1, 0.1, 9.0), PulseSegment::drive(0.1, 0.1, 9.5)});
    CHECK_THROWS_AS(run_sequence(seq, s.down, s.model, s.sites, s.obs), std::invalid_argument);
  }
}
