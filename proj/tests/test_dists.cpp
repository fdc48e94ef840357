#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "critgw/dists.hpp"
#include "critgw/errors.hpp"
#include "critgw/rng.hpp"
#include "helpers.hpp"

using namespace critgw;
using critgw::testing::chi2_gof;

namespace {
const double kInvSqrtPi = 0.5641895835477563;
}

TEST_CASE("slack pmf head values from the binomial expansion") {
  OffspringLaw law = OffspringLaw::slack(0.5, 2.0 / 3.0);
  CHECK(law.pmf(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(law.pmf(1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(law.pmf(2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(law.pmf(3) == doctest::Approx(1.0 / 24.0).epsilon(1e-13));
}

TEST_CASE("slack pmf obeys the ratio recursion beyond k = 2") {
  OffspringLaw law = OffspringLaw::slack(0.31, 0.44);
  for (std::uint64_t k = 2; k < 200; ++k) {
    const double expect = law.pmf(k) * (static_cast<double>(k) - 1.0 - 0.31) /
                          (static_cast<double>(k) + 1.0);
    CHECK(law.pmf(k + 1) == doctest::Approx(expect).epsilon(1e-11));
  }
}

TEST_CASE("slack at maximal c has p_1 exactly zero") {
  OffspringLaw law = OffspringLaw::slack(0.4, 1.0 / 1.4);
  CHECK(law.pmf(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("slack parameter domain") {
  CHECK_THROWS_AS(OffspringLaw::slack(0.5, 0.7), ParameterError);  // p_1 < 0
  CHECK_THROWS_AS(OffspringLaw::slack(1.0, 0.4), ParameterError);
  CHECK_THROWS_AS(OffspringLaw::slack(0.0, 0.4), ParameterError);
  CHECK_THROWS_AS(OffspringLaw::slack(0.5, 0.0), ParameterError);
}

TEST_CASE("power-fractional pgf closed form") {
  OffspringLaw law = OffspringLaw::power_fractional(0.5);
  CHECK(law.pgf(0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(law.pgf(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // pmf from the series inversion: p0 = 3/4, p1 = 1/8, p2 = 3/64
  CHECK(law.pmf(0) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(law.pmf(1) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(law.pmf(2) == doctest::Approx(3.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("sibuya head probabilities and pgf") {
  ImmigrationLaw law = ImmigrationLaw::sibuya(0.8);
  CHECK(law.pmf(0) == 0.0);
  CHECK(law.pmf(1) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(law.pmf(2) == doctest::Approx(0.8 * 0.2 / 2.0).epsilon(1e-13));
  CHECK(law.pgf(0.5) ==
        doctest::Approx(1.0 - std::pow(0.5, 0.8)).epsilon(1e-14));
  CHECK(law.min_support() == 1);
}

TEST_CASE("constant immigration is degenerate") {
  ImmigrationLaw law = ImmigrationLaw::constant(1);
  CHECK(law.pmf(1) == 1.0);
  CHECK(law.pmf(0) == 0.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 50; ++i) CHECK(law.sample(rng) == 1);
}

TEST_CASE("tail_params only for the infinite-mean family") {
  CHECK(!ImmigrationLaw::poisson(2.0).tail_params().has_value());
  CHECK(!ImmigrationLaw::constant(3).tail_params().has_value());
  auto tp8 = ImmigrationLaw::sibuya(0.8).tail_params();
  REQUIRE(tp8.has_value());
  CHECK(tp8->index == doctest::Approx(0.8));
  CHECK(tp8->constant == doctest::Approx(0.21782488421166726).epsilon(1e-12));
  auto tp5 = ImmigrationLaw::sibuya(0.5).tail_params();
  CHECK(tp5->constant == doctest::Approx(kInvSqrtPi).epsilon(1e-12));
}

TEST_CASE("closed-form pgf agrees with the truncated pmf series") {
  auto check = [](auto law) {
    for (double s : {0.1, 0.5, 0.9}) {
      long double acc = 0.0L, sk = 1.0L;
      for (std::uint64_t k = 0; k < 3000; ++k) {
        acc += static_cast<long double>(law.pmf(k)) * sk;
        sk *= s;
      }
      CHECK(static_cast<double>(acc) ==
            doctest::Approx(law.pgf(s)).epsilon(1e-9));
    }
  };
  check(OffspringLaw::slack(0.5, 2.0 / 3.0));
  check(OffspringLaw::slack(0.3, 0.5));
  check(OffspringLaw::power_fractional(0.5));
  check(OffspringLaw::power_fractional(0.3));
  check(ImmigrationLaw::sibuya(0.8));
  check(ImmigrationLaw::poisson(2.0));
  check(ImmigrationLaw::geometric(0.4));
}

TEST_CASE("criticality: difference quotient at 1 matches 1 - ell * h^alpha") {
  for (auto law : {OffspringLaw::slack(0.3, 0.5), OffspringLaw::slack(0.5, 2.0 / 3.0),
                   OffspringLaw::power_fractional(0.5)}) {
    const double h = 1e-6;
    const double q = law.one_minus_pgf_u(h) / h;
    // next term of the expansion is O(h^(2 alpha)), ~3e-6 at h = 1e-6
    const double expected = 1.0 - law.ell_a() * std::pow(h, law.alpha());
    CHECK(q == doctest::Approx(expected).epsilon(1e-5));
    CHECK(q <= 1.0);
    // quotient increases to 1 along h -> 0
    CHECK(law.one_minus_pgf_u(1e-10) / 1e-10 > q);
  }
}

TEST_CASE("pgf(s) - s stays positive inside (0,1)") {
  for (auto law : {OffspringLaw::slack(0.5, 2.0 / 3.0),
                   OffspringLaw::power_fractional(0.7)}) {
    for (double s = 0.05; s < 1.0; s += 0.05) CHECK(law.drift_u(1.0 - s) > 0.0);
  }
}

TEST_CASE("pmf partial sums approach 1 with survival consistency") {
  OffspringLaw slack = OffspringLaw::slack(0.5, 2.0 / 3.0);
  long double acc = 0.0L;
  for (std::uint64_t k = 0; k <= 5000; ++k) acc += slack.pmf(k);
  CHECK(static_cast<double>(1.0L - acc) ==
        doctest::Approx(slack.survival(5000)).epsilon(1e-9));
  ImmigrationLaw sib = ImmigrationLaw::sibuya(0.8);
  acc = 0.0L;
  for (std::uint64_t k = 0; k <= 5000; ++k) acc += sib.pmf(k);
  CHECK(static_cast<double>(1.0L - acc) ==
        doctest::Approx(sib.survival(5000)).epsilon(1e-9));
}

TEST_CASE("sampler chi-squared GoF on {0..20} at 1e-3, 1e6 draws") {
  auto gof = [](auto law, std::uint64_t stream) {
    return chi2_gof([&](RngStream& g) { return law.sample(g); },
                    [&](std::uint64_t k) { return law.pmf(k); }, 20, 1'000'000,
                    RngStream(20260810, stream));
  };
  CHECK(gof(OffspringLaw::slack(0.5, 2.0 / 3.0), 1).pass);
  CHECK(gof(OffspringLaw::slack(0.3, 0.5), 2).pass);
  CHECK(gof(OffspringLaw::power_fractional(0.5), 3).pass);
  CHECK(gof(ImmigrationLaw::sibuya(0.8), 4).pass);
  CHECK(gof(ImmigrationLaw::poisson(2.0), 5).pass);
  CHECK(gof(ImmigrationLaw::geometric(0.4), 6).pass);
}

TEST_CASE("slack empirical frequency of zero matches p0 within 3 stderr") {
  OffspringLaw law = OffspringLaw::slack(0.5, 2.0 / 3.0);
  RngStream rng(7, 0);
  const std::size_t n = 1'000'000;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) zeros += law.sample(rng) == 0;
  const double p = 2.0 / 3.0;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
  CHECK(std::abs(static_cast<double>(zeros) / n - p) < 3 * se);
}

TEST_CASE("sibuya capped empirical mean keeps growing (infinite mean)") {
  ImmigrationLaw law = ImmigrationLaw::sibuya(0.8);
  RngStream rng(11, 0);
  double sum = 0.0;
  double mean_small = 0.0;
  const std::size_t n = 1'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    sum += static_cast<double>(std::min<std::uint64_t>(law.sample(rng), 1'000'000));
    if (i + 1 == 1000) mean_small = sum / 1000.0;
  }
  CHECK(sum / static_cast<double>(n) > 1.5 * mean_small);
}

TEST_CASE("deep-tail draws follow the conditional survival law") {
  // beyond the cached table the inverter continues the same law: empirical
  // conditional survival ratios deep in the tail match survival(k)/survival(k0)
  ImmigrationLaw law = ImmigrationLaw::sibuya(0.3);
  RngStream rng(3, 9);
  const std::size_t n = 400'000;
  const std::uint64_t k0 = 4'000'000;
  std::size_t above0 = 0, above1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = law.sample(rng);
    above0 += v > k0;
    above1 += v > 16 * k0;
  }
  const double expected_ratio = law.survival(16 * k0) / law.survival(k0);
  REQUIRE(above0 > 200);
  const double observed = static_cast<double>(above1) / static_cast<double>(above0);
  const double se = std::sqrt(expected_ratio * (1 - expected_ratio) /
                              static_cast<double>(above0));
  CHECK(std::abs(observed - expected_ratio) < 4 * se);
}

TEST_CASE("complex pgf evaluation sits on the real closed form on the axis") {
  OffspringLaw law = OffspringLaw::power_fractional(0.4);
  std::complex<double> v = law.pgf(std::complex<double>(0.3, 0.0));
  CHECK(v.real() == doctest::Approx(law.pgf(0.3)).epsilon(1e-14));
  CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-14));
  std::complex<double> off_axis = law.pgf(std::complex<double>(0.2, 0.4));
  CHECK(std::abs(off_axis) < 1.0);
}
