#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "critgw/errors.hpp"
#include "critgw/est.hpp"
#include "critgw/genfun.hpp"
#include "critgw/sim.hpp"
#include "helpers.hpp"

using namespace critgw;
using critgw::testing::pareto_quantile_grid;

TEST_CASE("hill on the worked four-point example") {
  TailEstimate est = hill({8, 4, 2, 1}, 3);
  // mean log spacing over the top 3 is 2 log 2
  CHECK(est.index_hat == doctest::Approx(1.0 / (2.0 * std::log(2.0))).epsilon(1e-12));
  CHECK(est.k_used == 3);
}

TEST_CASE("hill is exact on Pareto quantile grids up to O(1/k)") {
  for (double gamma : {0.5, 1.0, 2.0}) {
    auto xs = pareto_quantile_grid(gamma, 20'000);
    TailEstimate est = hill(xs, 2000);
    CHECK(est.index_hat == doctest::Approx(gamma).epsilon(2e-3));
    // constant close to 1 for the pure power law
    CHECK(est.constant_hat == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("hill input validation") {
  CHECK_THROWS_AS(hill({1, 2, 3}, 1), ParameterError);
  CHECK_THROWS_AS(hill({1, 2, 3}, 3), InsufficientData);  // needs k+1 positive
  CHECK_THROWS_AS(hill({0, 0, 0, 0}, 2), InsufficientData);
}

TEST_CASE("hill scale equivariance: index invariant, constant scales") {
  auto xs = pareto_quantile_grid(0.7, 10'000);
  TailEstimate base = hill(xs, 1000);
  std::vector<double> scaled(xs);
  for (double& v : scaled) v *= 3.0;
  TailEstimate est = hill(scaled, 1000);
  CHECK(est.index_hat == doctest::Approx(base.index_hat).epsilon(1e-12));
  CHECK(est.constant_hat ==
        doctest::Approx(base.constant_hat * std::pow(3.0, base.index_hat))
            .epsilon(1e-9));
}

TEST_CASE("survival log-log fit is exact on exact power-law input") {
  const double g = 0.8, C = 0.4;
  const std::vector<double> thresholds = {10, 20, 40, 80, 160};
  const std::size_t n = 100'000;
  // construct a sample whose empirical survival at the grid is exactly the
  // rounded C x^-g: place the right number of values between thresholds
  std::vector<std::size_t> exceed(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t)
    exceed[t] = static_cast<std::size_t>(
        std::llround(C * std::pow(thresholds[t], -g) * n));
  std::vector<std::uint64_t> values;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const std::size_t next = t + 1 < thresholds.size() ? exceed[t + 1] : 0;
    for (std::size_t i = next; i < exceed[t]; ++i)
      values.push_back(static_cast<std::uint64_t>(thresholds[t]) + 1);
  }
  while (values.size() < n) values.push_back(1);

  TailEstimate est = survival_loglog_fit(std::span<const std::uint64_t>(values),
                                         thresholds);
  // exact up to the integer rounding of counts
  CHECK(est.index_hat == doctest::Approx(g).epsilon(1e-3));
  CHECK(est.constant_hat == doctest::Approx(C).epsilon(1e-2));
  CHECK(est.method == TailEstimate::Method::LogLogRegression);
}

TEST_CASE("survival fit errors name the failing threshold") {
  std::vector<std::uint64_t> values(1000, 5);
  const std::vector<double> thresholds = {1, 2, 3, 4, 1000000};
  try {
    survival_loglog_fit(std::span<const std::uint64_t>(values), thresholds);
    FAIL("expected InsufficientData");
  } catch (const InsufficientData& e) {
    CHECK(std::string(e.what()).find("1e+06") != std::string::npos);
  }
}

TEST_CASE("survival fit censoring semantics") {
  // censored at 100: exact exceedance for thresholds < 100, excluded at and
  // above; here every threshold sits below the cap so survival is flat 0.6
  std::vector<CensoredSample> samples;
  for (int i = 0; i < 300; ++i) samples.push_back({1000, false});
  for (int i = 0; i < 300; ++i) samples.push_back({100, true});
  for (int i = 0; i < 400; ++i) samples.push_back({1, false});
  const std::vector<double> thresholds = {2, 4, 8, 16, 50};
  TailEstimate est = survival_loglog_fit(std::span<const CensoredSample>(samples),
                                         thresholds);
  CHECK(est.index_hat == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(est.constant_hat == doctest::Approx(0.6).epsilon(1e-10));
}

TEST_CASE("tail process: constant stub trajectory has unit ratios") {
  std::vector<std::uint64_t> constant(500, 200);
  TailProcessSummary tps = tail_process_stat(constant, 100.0, 5);
  for (const LagQuantiles& lq : tps.lag_ratios) {
    CHECK(lq.q05 == doctest::Approx(1.0));
    CHECK(lq.q50 == doctest::Approx(1.0));
    CHECK(lq.q95 == doctest::Approx(1.0));
  }
  CHECK(tps.overlapping_windows);
  CHECK(tps.exceedance_count == 500 - 5);
}

TEST_CASE("tail process needs enough exceedances") {
  std::vector<std::uint64_t> values(1000, 1);
  CHECK_THROWS_AS(tail_process_stat(values, 10.0, 5), InsufficientData);
}

TEST_CASE("anticluster: iid Pareto surrogate stays low, needs exceedances") {
  RngStream rng(20260810, 0);
  ParetoIntLaw y{0.5};
  std::vector<std::uint64_t> iid(200'000);
  for (auto& v : iid) v = y.sample(rng);
  // level with survival p = 1e-3: P(hit in window) ~ 1 - (1-p)^(r-m+1)
  const double u = 1e6;
  AnticlusterResult res = anticluster_stat(iid, 5, 100, u);
  const double expected = 1.0 - std::pow(1.0 - 1e-3, 96.0);
  CHECK(res.prob == doctest::Approx(expected).epsilon(0.5));
  CHECK(res.prob < 0.2);

  std::vector<std::uint64_t> flat(1000, 0);
  CHECK_THROWS_AS(anticluster_stat(flat, 5, 100, 1.0), InsufficientData);
  CHECK_THROWS_AS(anticluster_stat(iid, 100, 5, 1.0), ParameterError);
}

TEST_CASE("quantile scaling: deterministic stub S_n = n^2 gives slope 2") {
  std::map<std::uint64_t, std::vector<double>> by_n;
  for (std::uint64_t n : {100ull, 200ull, 400ull, 800ull})
    by_n[n] = std::vector<double>(
        1500, static_cast<double>(n) * static_cast<double>(n));
  ScalingFit fit = quantile_scaling(by_n, 0.5);
  CHECK(fit.growth == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quantile scaling input validation") {
  std::map<std::uint64_t, std::vector<double>> too_few;
  too_few[100] = std::vector<double>(1500, 1.0);
  CHECK_THROWS_AS(quantile_scaling(too_few, 0.5), InsufficientData);
  std::map<std::uint64_t, std::vector<double>> small;
  for (std::uint64_t n : {1ull, 2ull, 4ull, 8ull})
    small[n] = std::vector<double>(10, 1.0);
  CHECK_THROWS_AS(quantile_scaling(small, 0.5), InsufficientData);
}

TEST_CASE("stable tail check flags Gaussian-like samples as non-heavy") {
  RngStream rng(5, 0);
  std::vector<double> gauss(20'000);
  for (auto& v : gauss) {
    double u1 = rng.next_open(), u2 = rng.next_open();
    v = std::abs(std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * M_PI * u2)) + 1.0;
  }
  TailEstimate est = stable_tail_check(gauss, 0.5);
  CHECK(!est.heavy);
  CHECK(est.index_hat > 3.0);
}

TEST_CASE("stable tail check recovers the index of exact Pareto samples") {
  auto xs = pareto_quantile_grid(2.0 / 3.0, 10'000);
  TailEstimate est = stable_tail_check(xs, 2.0 / 3.0);
  CHECK(est.heavy);
  CHECK(est.index_hat == doctest::Approx(2.0 / 3.0).epsilon(0.03));
}

TEST_CASE("estimators are pure: same input twice gives identical output") {
  auto xs = pareto_quantile_grid(0.5, 5000);
  TailEstimate a = hill(xs, 500);
  TailEstimate b = hill(xs, 500);
  CHECK(a.index_hat == b.index_hat);
  CHECK(a.constant_hat == b.constant_hat);
}

TEST_CASE("extremal diagnostic separates the chain from its iid surrogate") {
  ChainModel m(OffspringLaw::power_fractional(0.5), ImmigrationLaw::constant(1));
  ExtremalOptions opts;
  opts.reps = 40;
  opts.burn_in = 1000;
  opts.seed = 4;
  opts.surrogate_reps = 2000;
  const std::uint64_t grid[] = {500, 5000};
  auto rows = extremal_diag(m, grid, 1.0, opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].chain_prob >= rows[0].chain_prob - 0.15);
  CHECK(rows[1].chain_prob > 0.6);
  for (const auto& row : rows) {
    CHECK(row.iid_prob > 0.2);
    CHECK(row.iid_prob < 0.55);
    CHECK(row.u_n ==
          doctest::Approx(std::pow(static_cast<double>(row.n) / std::sqrt(M_PI),
                                   2.0)).epsilon(1e-9));
  }
}

TEST_CASE("tail process on the chain: ratio medians near 1 at high levels") {
  ChainModel m(OffspringLaw::power_fractional(0.5), ImmigrationLaw::constant(1));
  Trajectory traj = run_chain(m, 400'000, 5000, RngStream(20260810, 3));
  std::vector<double> sorted(traj.values.begin(), traj.values.end());
  std::sort(sorted.begin(), sorted.end());
  const double thr = quantile_sorted(sorted, 0.999);
  TailProcessSummary tps =
      tail_process_stat(std::span<const std::uint64_t>(traj.values), thr, 5);
  CHECK(tps.exceedance_count >= 30);
  for (const LagQuantiles& lq : tps.lag_ratios) {
    CHECK(lq.q50 > 0.85);
    CHECK(lq.q50 < 1.15);
  }
}
