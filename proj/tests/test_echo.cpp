#include "doctest.h"

#include <cmath>

#include "exspin/commands.hpp"
#include "exspin/constants.hpp"
#include "exspin/echo.hpp"
#include "exspin/exchange.hpp"

using namespace exspin;

namespace {

RunConfig base(double j, double sigma = 0.01) {
  RunConfig c;
  c.system.j_meV = j;
  c.system.field_tesla = 0.35;
  c.echo.sigma_ghz = sigma;
  return c;
}

// tau grid of n points, `per_period` points per exchange beat in tau.
RunConfig beat_grid(double j, int n, int per_period) {
  RunConfig c = base(j);
  c.echo.n_samples = 8;
  c.echo.tau_step_ns = ps_to_ns(oscillation_period_ps(j)) / per_period;
  c.echo.n_tau = n;
  return c;
}

EchoTrace run(const RunConfig& c) { return integrated_echo(echo_experiment(c), echo_setup(c), c.system.j_meV); }

}  // namespace

TEST_SUITE("echo") {
  TEST_CASE("detuning draws") {
    const DetuningEnsemble e{0.2, 16, 9};
    const auto a = draw_detunings(e);
    CHECK(a.size() == 16);
    CHECK(a == draw_detunings(e));
    CHECK(a != draw_detunings({0.2, 16, 10}));
    CHECK(draw_detunings({0.0, 4, 1}) == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(draw_detunings({0.1, 0, 1}), std::invalid_argument);
  }

  TEST_CASE("experiment validation") {
    RunConfig c = base(-1.5);
    c.echo.tau_step_ns = 1e-4;
    c.echo.n_tau = 8;
    auto exp = echo_experiment(c);
    CHECK_NOTHROW(validate_experiment(exp, -1.5));
    CHECK(exp.detection_window_ns == doctest::Approx(0.4));
    CHECK(exp.nominal_echo_time(1.0) == doctest::Approx(2.05));

    auto unresolved = exp;
    unresolved.tau_grid = {1.0, 1.0 + 0.3 * ps_to_ns(oscillation_period_ps(-1.5))};
    CHECK_THROWS_AS(validate_experiment(unresolved, -1.5), std::invalid_argument);
    CHECK_NOTHROW(validate_experiment(unresolved, 0.0));

    auto descending = exp;
    descending.tau_grid = {1.0001, 1.0};
    CHECK_THROWS_AS(validate_experiment(descending, -1.5), std::invalid_argument);

    auto short_tau = exp;
    short_tau.tau_grid = {0.2};
    CHECK_THROWS_AS(validate_experiment(short_tau, 0.0), std::invalid_argument);

    auto empty = exp;
    empty.ensemble.n_samples = 0;
    CHECK_THROWS_AS(validate_experiment(empty, 0.0), std::invalid_argument);
  }

  TEST_CASE("Hahn refocusing at J = 0") {
    // sigma W stays small so the window itself does not dephase the signal.
    RunConfig c = base(0.0, 0.1);
    c.echo.tau_step_ns = 0.1;
    c.echo.n_tau = 4;
    const auto broad = run(c);
    c.echo.sigma_ghz = 0.0;
    const auto sharp = run(c);
    for (std::size_t i = 0; i < broad.taus.size(); ++i) {
      CHECK(sharp.integrated_echo[i] > 0.1);
      CHECK(broad.integrated_echo[i] >= 0.95 * sharp.integrated_echo[i]);
    }
    // Without refocusing the broadened signal has dephased.
    c.echo.sigma_ghz = 0.5;
    c.echo.n_samples = 2048;
    c.echo.refocus_flip_deg = 1.0;
    const auto free = run(c);
    for (std::size_t i = 0; i < free.taus.size(); ++i) CHECK(free.integrated_echo[i] < 0.1 * sharp.integrated_echo[i]);
  }

  TEST_CASE("echo trace beats at twice the exchange gap per unit tau") {
    for (const double j : {-0.5, -1.5, -9.1}) {
      CAPTURE(j);
      const auto trace = run(beat_grid(j, 64, 8));
      const double gap = 1.5 * std::abs(j);
      CHECK(echo_beat_gap_mev(trace) == doctest::Approx(gap).epsilon(0.02));
      const double f_tau = dominant_frequency(trace.taus, trace.integrated_echo);
      CHECK(f_tau == doctest::Approx(2.0 * mev_to_ghz(gap)).epsilon(0.02));
    }
  }

  TEST_CASE("decay suppresses the echo by exp(-2 tau / T)") {
    RunConfig c = base(-1.5);
    c.echo.n_samples = 4;
    c.echo.tau_step_ns = ps_to_ns(oscillation_period_ps(-1.5)) / 8;
    c.echo.n_tau = 4;
    const auto closed = run(c);
    c.echo.decay = true;
    const auto open = run(c);
    for (std::size_t i = 0; i < closed.taus.size(); ++i) {
      const double expected = std::exp(-2.0 * closed.taus[i] / c.system.lifetime_ns);
      CHECK(open.integrated_echo[i] / closed.integrated_echo[i] == doctest::Approx(expected).epsilon(0.05));
    }
  }

  TEST_CASE("fixed seed is bit-identical; parallel equals serial") {
    RunConfig c = beat_grid(-1.5, 16, 8);
    const auto exp = echo_experiment(c);
    const auto setup = echo_setup(c);
    const auto a = integrated_echo(exp, setup, -1.5);
    const auto b = integrated_echo(exp, setup, -1.5);
    const auto s = integrated_echo_serial(exp, setup, -1.5);
    CHECK(a.integrated_echo == b.integrated_echo);
    CHECK(a.integrated_echo == s.integrated_echo);
    CHECK(a.taus == exp.tau_grid);
    c.echo.seed = 43;
    CHECK(run(c).integrated_echo != a.integrated_echo);
  }

  TEST_CASE("dominant frequency of a synthetic trace") {
    std::vector<double> x, y;
    for (int k = 0; k < 80; ++k) {
      x.push_back(0.5 + 0.01 * k);
      y.push_back(3.0 + std::cos(constants::two_pi * 7.3 * x.back() + 0.4) + 0.2 * std::cos(constants::two_pi * 21.0 * x.back()));
    }
    CHECK(dominant_frequency(x, y) == doctest::Approx(7.3).epsilon(1e-3));
    CHECK_THROWS_AS(dominant_frequency(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
  }
}
