#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "exspin/constants.hpp"
#include "exspin/error.hpp"
#include "exspin/exchange.hpp"
#include "oracles.hpp"

using namespace exspin;

namespace {

std::vector<FunctionalRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_functional_table(in);
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("exchange") {
  TEST_CASE("energy difference") {
    CHECK(j_energy_difference(0.0, 9.1) == -9.1);
    CHECK(j_energy_difference(5.0, 5.0) == 0.0);
    CHECK(j_energy_difference(34.6, 0.0) == 34.6);
    for (double a : {-3.0, 0.25, 17.0})
      for (double b : {-1.0, 4.5}) CHECK(j_energy_difference(a, b) == -j_energy_difference(b, a));
  }

  TEST_CASE("spin-projected exchange") {
    CHECK(j_spin_projected(-9.1, 0.0, 3.75, 1.75) == doctest::Approx(j_energy_difference(-9.1, 0.0)).epsilon(1e-15));
    const double b3lyp = 2.0 * (-9.1) / (3.770 - 1.776);
    CHECK(j_spin_projected(-9.1, 0.0, 3.770, 1.776) == doctest::Approx(b3lyp).epsilon(1e-14));
    CHECK(b3lyp == doctest::Approx(-9.127).epsilon(1e-4));
    CHECK_THROWS_AS(j_spin_projected(1.0, 0.0, 2.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(j_spin_projected(1.0, 0.0, 1.75, 3.75), std::domain_error);
  }

  TEST_CASE("oscillation period") {
    const double hbar_ps = oracle::hbar * 1e3;
    CHECK(oscillation_period_ps(1.5) == doctest::Approx(4.0 * M_PI * hbar_ps / 4.5).epsilon(1e-14));
    CHECK(oscillation_period_ps(-1.5) == doctest::Approx(1.8379).epsilon(1e-4));
    CHECK(oscillation_period_ps(34.6) == doctest::Approx(0.07968).epsilon(1e-3));
    CHECK_THROWS_AS(oscillation_period_ps(0.0), std::domain_error);
  }

  TEST_CASE("coherence verdicts") {
    const auto v10 = coherence_check(-1.5, 10.0);
    CHECK(v10.hbar_over_T_meV == doctest::Approx(6.582119569e-5).epsilon(1e-12));
    CHECK(v10.hbar_over_T_meV < 1e-4);
    CHECK(v10.hbar_over_T_meV > 1e-5);

    const auto v = coherence_check(-9.1, 35.0);
    CHECK(v.ratio == doctest::Approx(9.1 / (oracle::hbar / 35.0)).epsilon(1e-12));
    CHECK(v.ratio == doctest::Approx(4.84e5).epsilon(1e-3));
    CHECK(v.survives);
    CHECK(v.oscillations_within_lifetime ==
          doctest::Approx(35.0 / (v.oscillation_period_ps * 1e-3)).epsilon(1e-9));

    const auto zero = coherence_check(0.0, 35.0);
    CHECK(zero.ratio == 0.0);
    CHECK_FALSE(zero.survives);
    CHECK(std::isinf(zero.oscillation_period_ps));

    // strict threshold
    const double hbar_t = constants::hbar / 20.0;
    CHECK_FALSE(coherence_check(hbar_t, 20.0).survives);
    CHECK(coherence_check(std::nextafter(hbar_t, 1.0), 20.0).survives);

    CHECK_THROWS_AS(coherence_check(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(coherence_check(1.0, -5.0), std::domain_error);
  }

  TEST_CASE("ratio is |J| T / hbar, invariant under J -> cJ, T -> T/c") {
    for (double c : {0.1, 3.0, 250.0}) {
      const double r0 = coherence_check(-6.0, 35.0).ratio;
      CHECK(coherence_check(-6.0 * c, 35.0 / c).ratio == doctest::Approx(r0).epsilon(1e-12));
      CHECK(r0 == doctest::Approx(6.0 * 35.0 / constants::hbar).epsilon(1e-12));
    }
  }

  TEST_CASE("shipped table") {
    const auto recs = load_functional_table(shipped_table_path());
    REQUIRE(recs.size() == 10);
    int with_j = 0, fm = 0, afm = 0;
    std::vector<std::string> missing;
    for (const auto& r : recs) {
      if (r.converged_afm()) {
        ++with_j;
        (*r.j_meV < 0 ? fm : afm)++;
        if (*r.j_meV > 0) CHECK(r.name == "HSE06");
      } else {
        missing.push_back(r.name);
        CHECK_FALSE(r.s2_afm.has_value());
      }
    }
    CHECK(with_j == 6);
    CHECK(fm == 5);
    CHECK(afm == 1);
    CHECK(missing == std::vector<std::string>{"S-VWN", "PW91", "PBE", "BLYP"});

    for (const auto& r : recs) {
      if (r.s2_fm) CHECK((*r.s2_fm >= 3.753 && *r.s2_fm <= 3.794));
      if (r.s2_afm) CHECK((*r.s2_afm >= 1.764 && *r.s2_afm <= 1.802));
    }
  }

  TEST_CASE("every converged record oscillates fast and survives a 35 ns lifetime") {
    for (const auto& r : load_functional_table(shipped_table_path())) {
      if (!r.j_meV) continue;
      const auto v = coherence_check(*r.j_meV, kDefaultLifetimeNs);
      CHECK(v.oscillation_period_ps < 2.0);
      CHECK(v.oscillations_within_lifetime > 1e4);
      CHECK(v.survives);
    }
  }

  TEST_CASE("round trip is byte-stable") {
    const auto path = shipped_table_path();
    const auto recs = load_functional_table(path);
    std::ostringstream out;
    write_functional_table(out, recs);
    CHECK(out.str() == slurp(path));
    CHECK(parse(out.str()) == recs);
  }

  TEST_CASE("malformed rows cite their line") {
    const std::string header = std::string(kFunctionalTableHeader) + "\n";
    CHECK(error_line(header + "X,1.0,3.75\n") == 2);
    CHECK(error_line(header + "A,1.0,3.77,1.78,-1\nB,abc,3.77,1.78,-1\n") == 3);
    CHECK(error_line(header + "A,1.0,3.77,1.78,-1,extra\n") == 2);
    CHECK(error_line(header + "A,1.0,3.77,1.78,-\n") == 2);   // s2_afm without J
    CHECK(error_line(header + "A,1.0,5.0,1.78,-1\n") == 2);   // s2_fm band
    CHECK(error_line(header + "A,1.0,3.77,0.5,-1\n") == 2);   // s2_afm band
    CHECK(error_line("name,e\nA,1,3.7,1.7,1\n") == 1);
    CHECK(error_line("") == 1);
    CHECK_THROWS(load_functional_table("/nonexistent/table1.csv"));
  }

  TEST_CASE("missing values and BOM") {
    const auto recs = parse("\xEF\xBB\xBF" + std::string(kFunctionalTableHeader) + "\nPBE,1.1,3.76,-,-\n");
    REQUIRE(recs.size() == 1);
    CHECK_FALSE(recs[0].converged_afm());
    CHECK(recs[0].s2_fm == 3.76);
  }

  TEST_CASE("report over the shipped table") {
    const auto rep = report(load_functional_table(shipped_table_path()), 35.0);
    CHECK(rep.verdicts.size() == 6);
    CHECK(rep.not_converged.size() == 4);
    CHECK(*rep.min_abs_j_meV == 1.5);
    CHECK(*rep.max_abs_j_meV == 34.6);
    CHECK(*rep.min_period_ps == doctest::Approx(0.0797).epsilon(1e-3));
    CHECK(*rep.max_period_ps == doctest::Approx(1.838).epsilon(1e-3));
    CHECK(rep.all_survive);
  }

  TEST_CASE("report with no converged records") {
    std::vector<FunctionalRecord> recs{{"S-VWN", 1.0, 3.77, std::nullopt, std::nullopt},
                                       {"PBE", 1.0, 3.77, std::nullopt, std::nullopt}};
    const auto rep = report(recs, 35.0);
    CHECK(rep.verdicts.empty());
    CHECK(rep.not_converged.size() == 2);
    CHECK_FALSE(rep.min_abs_j_meV.has_value());
    CHECK_FALSE(rep.all_survive);
    CHECK_THROWS_AS(report({}, 35.0), std::invalid_argument);
  }
}
