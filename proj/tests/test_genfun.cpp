#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "critgw/errors.hpp"
#include "critgw/genfun.hpp"

using namespace critgw;

namespace {
const double kInvSqrtPi = 0.5641895835477563;

ChainModel theta_half_b1() {
  return ChainModel(OffspringLaw::power_fractional(0.5),
                    ImmigrationLaw::constant(1));
}
}  // namespace

TEST_CASE("iterate_f basics") {
  ChainModel m = theta_half_b1();
  CHECK(iterate_f(m, 0.3, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(iterate_f(m, 0.0, 3) == doctest::Approx(15.0 / 16.0).epsilon(1e-14));
  OffspringLaw slack = OffspringLaw::slack(0.5, 2.0 / 3.0);
  CHECK(iterate_f(slack, 0.0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("closed-form iterate values") {
  CHECK(theta_fn_closed(0.5, 0.123, 0) == doctest::Approx(0.123).epsilon(1e-15));
  CHECK(theta_fn_closed(0.5, 0.0, 3) == doctest::Approx(15.0 / 16.0).epsilon(1e-15));
  CHECK(theta_fn_closed(0.5, 0.75, 1) == doctest::Approx(1.0 - 1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("generic iteration matches the closed form to 1e-12 relative") {
  for (double alpha : {0.3, 0.5, 0.7}) {
    OffspringLaw off = OffspringLaw::power_fractional(alpha);
    for (double s : {0.0, 0.5, 0.9, 0.999}) {
      for (std::uint64_t n : {1ull, 10ull, 100ull, 1000ull, 10000ull}) {
        const double u_iter = iterate_f_u(off, 1.0 - s, n);
        const double u_closed = theta_fn_closed_u(alpha, 1.0 - s, n);
        CHECK(std::abs(u_iter - u_closed) <= 1e-12 * u_closed);
      }
    }
  }
}

TEST_CASE("extinction-rate normalization: (alpha n ell)^(1/alpha) (1-f_n(0)) -> 1") {
  // the normalizing constant is the de Bruijn conjugate of the reciprocal
  // slowly varying factor, which is ell_A itself for the constant class
  for (const auto& off : {OffspringLaw::power_fractional(0.5),
                          OffspringLaw::slack(0.5, 2.0 / 3.0),
                          OffspringLaw::slack(0.3, 0.5)}) {
    const double a = off.alpha();
    const double ell = off.ell_a();
    double prev_err = 1e9;
    for (std::uint64_t n : {1000ull, 10'000ull, 100'000ull, 1'000'000ull}) {
      const double u = iterate_f_u(off, 1.0, n);
      const double norm = std::pow(a * static_cast<double>(n) * ell, 1.0 / a) * u;
      const double err = std::abs(norm - 1.0);
      CHECK(err < prev_err * 1.2);  // improving along the grid (some slack)
      prev_err = err;
      if (n == 1'000'000) CHECK(norm == doctest::Approx(1.0).epsilon(0.05));
    }
  }
}

TEST_CASE("stationary pgf: exact alpha=1/2 oracle 1 - sqrt(1-s)") {
  ChainModel m = theta_half_b1();
  for (double s : {0.1, 0.3, 0.5, 0.75, 0.9, 0.99}) {
    const double exact = 1.0 - std::sqrt(1.0 - s);
    CHECK(std::abs(stationary_pgf(m, s, 1e-6) - exact) < 1e-6);
  }
  CHECK(stationary_pgf(m, 0.0, 1e-6) == 0.0);  // B=1 forces X >= 1
}

TEST_CASE("stationary pgf is nondecreasing and approaches 1") {
  ChainModel m(OffspringLaw::slack(0.5, 0.5), ImmigrationLaw::poisson(2.0));
  double prev = 0.0;
  // tail constant here is 8/sqrt(pi), so phi stays small until s is very
  // close to 1: phi(s) ~ exp(-8 sqrt(1-s))
  for (double s : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95, 0.9999}) {
    double v = stationary_pgf(m, s, 1e-4);
    CHECK(v >= prev - 2e-4);
    prev = v;
  }
  CHECK(prev > 0.9);
  CHECK(stationary_pgf(m, 0.0, 1e-4) > 0.0);  // Poisson immigration can be 0
}

TEST_CASE("stationary pgf budget error carries a partial value") {
  ChainModel m = theta_half_b1();
  try {
    stationary_pgf(m, 0.5, 1e-12, 1000);  // budget far too small
    FAIL("expected BudgetExceeded");
  } catch (const BudgetExceeded& e) {
    CHECK(e.partial_value > 0.0);
    CHECK(e.partial_value <= 1.0);
  }
}

TEST_CASE("pgf_to_pmf inverts the exact oracle series") {
  auto pgf = [](std::complex<double> s) { return 1.0 - std::sqrt(1.0 - s); };
  PmfExtraction ext = pgf_to_pmf(pgf, 4);
  CHECK(ext.pmf[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(ext.pmf[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ext.pmf[2] == doctest::Approx(0.125).epsilon(1e-11));
  CHECK(ext.pmf[3] == doctest::Approx(0.0625).epsilon(1e-11));
  CHECK(ext.pmf[4] == doctest::Approx(5.0 / 128.0).epsilon(1e-10));
}

TEST_CASE("pgf_to_pmf on the identity") {
  auto pgf = [](std::complex<double> s) { return s; };
  PmfExtraction ext = pgf_to_pmf(pgf, 3);
  CHECK(ext.pmf[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ext.pmf[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ext.pmf[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pgf_to_pmf cross-checks the slack pmf (cross-module oracle)") {
  OffspringLaw law = OffspringLaw::slack(0.5, 2.0 / 3.0);
  auto pgf = [&](std::complex<double> s) { return law.pgf(s); };
  PmfExtraction ext = pgf_to_pmf(pgf, 16);
  for (std::size_t k = 0; k <= 16; ++k)
    CHECK(std::abs(ext.pmf[k] - law.pmf(k)) < ext.error_bound + 1e-12);
}

TEST_CASE("pgf_to_pmf of the power-fractional law matches the series table") {
  OffspringLaw law = OffspringLaw::power_fractional(0.35);
  auto pgf = [&](std::complex<double> s) { return law.pgf(s); };
  PmfExtraction ext = pgf_to_pmf(pgf, 64);
  for (std::size_t k = 0; k <= 64; ++k)
    CHECK(std::abs(ext.pmf[k] - law.pmf(k)) < ext.error_bound + 1e-12);
}

TEST_CASE("pgf_to_pmf accuracy error paths") {
  auto pgf = [](std::complex<double> s) { return s; };
  CHECK_THROWS_AS(pgf_to_pmf(pgf, 2000, 0.5), AccuracyError);  // r^-K overflow
  CHECK_THROWS_AS(pgf_to_pmf(pgf, 4, 0.5, 64, 0.0, 1e-30), AccuracyError);
}

TEST_CASE("tauberian conversion") {
  TailLaw t1 = tauberian_tail(0.5, 1.0);
  CHECK(t1.index == 0.5);
  CHECK(t1.constant == doctest::Approx(kInvSqrtPi).epsilon(1e-12));
  TailLaw t2 = tauberian_tail(0.5, 2.0);
  CHECK(t2.constant == doctest::Approx(2.0 * kInvSqrtPi).epsilon(1e-12));
  TailLaw t3 = tauberian_tail(0.2, 1.0);
  CHECK(t3.constant == doctest::Approx(0.8589370192246675).epsilon(1e-12));
  CHECK_THROWS_AS(tauberian_tail(1.0, 1.0), UnsupportedRegime);
  CHECK_THROWS_AS(tauberian_tail(0.0, 1.0), UnsupportedRegime);
}

TEST_CASE("de Bruijn conjugate of constants is reciprocal and involutive") {
  CHECK(debruijn_conj(1.0) == 1.0);
  CHECK(debruijn_conj(2.0 / 3.0) == doctest::Approx(1.5).epsilon(1e-15));
  for (double c : {0.1, 0.5, 2.0, 7.3})
    CHECK(debruijn_conj(debruijn_conj(c)) == doctest::Approx(c).epsilon(1e-15));
}

TEST_CASE("fw_check classifies by the local exponent at 1") {
  // heavy immigration: integrand ~ (1-s)^(beta-1-alpha)/c
  FwResult fin = fw_check(ChainModel(OffspringLaw::slack(0.3, 0.5),
                                     ImmigrationLaw::sibuya(0.8)));
  CHECK(fin.classification == Integrability::Finite);
  CHECK(fin.exponent == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(fin.well_conditioned);

  FwResult inf = fw_check(ChainModel(OffspringLaw::slack(0.3, 0.5),
                                     ImmigrationLaw::sibuya(0.2)));
  CHECK(inf.classification == Integrability::Infinite);
  CHECK(inf.exponent == doctest::Approx(-1.1).epsilon(1e-9));

  // finite-mean immigration: integrand ~ g'(1) (1-s)^(-alpha)/c
  FwResult b1 = fw_check(ChainModel(OffspringLaw::slack(0.5, 0.5),
                                    ImmigrationLaw::poisson(2.0)));
  CHECK(b1.classification == Integrability::Finite);
  CHECK(b1.exponent == doctest::Approx(-0.5).epsilon(1e-2));
}

TEST_CASE("predicted stationary tail constants") {
  TailLaw oracle = predicted_stationary_tail(theta_half_b1());
  CHECK(oracle.index == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(oracle.constant == doctest::Approx(kInvSqrtPi).epsilon(1e-12));

  TailLaw b2 = predicted_stationary_tail(ChainModel(
      OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.8)));
  CHECK(b2.index == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b2.constant == doctest::Approx(2.2567583341910251).epsilon(1e-12));

  TailLaw b1 = predicted_stationary_tail(ChainModel(
      OffspringLaw::slack(0.5, 0.5), ImmigrationLaw::poisson(2.0)));
  CHECK(b1.index == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b1.constant == doctest::Approx(4.5135166683820503).epsilon(1e-12));

  CHECK_THROWS_AS(predicted_stationary_tail(ChainModel(
                      OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.2))),
                  UnsupportedRegime);
}

TEST_CASE("tauberian consistency: the exact oracle pgf implies the constant") {
  // 1 - phi(s) = (1-s)^(1/2) exactly, so the conversion with mu=1/2, ell=1
  // must reproduce the predicted stationary tail
  TailLaw via_tauber = tauberian_tail(0.5, 1.0);
  TailLaw via_theorem = predicted_stationary_tail(theta_half_b1());
  CHECK(via_tauber.index == via_theorem.index);
  CHECK(via_tauber.constant == doctest::Approx(via_theorem.constant).epsilon(1e-12));
}

TEST_CASE("predicted progeny tail") {
  TailLaw slack = predicted_progeny_tail(OffspringLaw::slack(0.5, 2.0 / 3.0));
  CHECK(slack.index == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(slack.constant == doctest::Approx(0.48913802243969739).epsilon(1e-12));

  TailLaw pf = predicted_progeny_tail(OffspringLaw::power_fractional(0.5));
  CHECK(pf.index == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(pf.constant == doctest::Approx(0.23515303422822301).epsilon(1e-12));
}

TEST_CASE("predicted sum exponent") {
  SumExponent b1 = predicted_sum_exponent(theta_half_b1());
  CHECK(b1.eta == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(b1.growth == doctest::Approx(1.5).epsilon(1e-15));

  SumExponent b2 = predicted_sum_exponent(ChainModel(
      OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.8)));
  CHECK(b2.eta == doctest::Approx(0.8 / 1.3).epsilon(1e-15));
  CHECK(b2.growth == doctest::Approx(1.625).epsilon(1e-15));

  // heavy immigration approaches the finite-mean value as beta -> 1
  SumExponent near_b1 = predicted_sum_exponent(ChainModel(
      OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.999)));
  CHECK(near_b1.eta == doctest::Approx(1.0 / 1.3).epsilon(1e-3));
}

TEST_CASE("level sequence inverts the predicted tail") {
  ChainModel m = theta_half_b1();
  // gamma = 1/2, constant = 1/sqrt(pi): u_n(1) = (n/sqrt(pi))^2
  CHECK(level_sequence(m, 1.0, 10'000) ==
        doctest::Approx(31830988.618379067).epsilon(1e-12));
  // tau = n * C gives u = 1
  TailLaw tail = predicted_stationary_tail(m);
  CHECK(level_sequence(m, 1000.0 * tail.constant, 1000) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // doubling n multiplies the level by 2^(1/gamma) = 4
  CHECK(level_sequence(m, 1.0, 2000) / level_sequence(m, 1.0, 1000) ==
        doctest::Approx(4.0).epsilon(1e-12));
  // n P(X > u_n(tau)) = tau by construction
  const double u = level_sequence(m, 2.5, 500);
  CHECK(500.0 * tail(u) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("chain model derived constants") {
  ChainModel b1 = theta_half_b1();
  CHECK(b1.gamma() == doctest::Approx(0.5));
  CHECK(b1.eta() == doctest::Approx(2.0 / 3.0));
  CHECK(b1.atom() == 1);
  CHECK(!b1.heavy_immigration());

  ChainModel b2(OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.8));
  CHECK(b2.gamma() == doctest::Approx(0.5));
  CHECK(b2.eta() == doctest::Approx(0.8 / 1.3));
  CHECK(b2.atom() == 1);
  CHECK(b2.heavy_immigration());
  CHECK(b2.ell_b() == 1.0);

  ChainModel pois(OffspringLaw::slack(0.5, 0.5), ImmigrationLaw::poisson(2.0));
  CHECK(pois.atom() == 0);

  ChainModel bad(OffspringLaw::slack(0.3, 0.5), ImmigrationLaw::sibuya(0.2));
  CHECK_THROWS_AS(bad.gamma(), UnsupportedRegime);
}

TEST_CASE("complex stationary product matches the analytic oracle off-axis") {
  ChainModel m = theta_half_b1();
  std::complex<double> s = std::polar(0.5, 1.1);
  std::complex<double> got = stationary_pgf(m, s, 1e-6);
  std::complex<double> exact = 1.0 - std::sqrt(1.0 - s);
  CHECK(std::abs(got - exact) < 1e-5);
}
