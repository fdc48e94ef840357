#ifndef CRITGW_EST_HPP
#define CRITGW_EST_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "critgw/sim.hpp"

namespace critgw {

struct TailEstimate {
  enum class Method { Hill, LogLogRegression };
  double index_hat = 0.0;
  double constant_hat = 0.0;
  std::size_t k_used = 0;
  double stderr_proxy = 0.0;  // index/sqrt(k) for Hill, fit rms for regression
  Method method = Method::Hill;
  bool heavy = true;  // false when the index estimate is not power-law-like
  std::vector<std::pair<std::size_t, double>> hill_plot;
};

/// Hill estimator on the k upper order statistics (descending X_(1) >= ...):
/// index_hat = k / sum_{i<=k} log(X_(i)/X_(k+1)).  Also emits the Hill plot
/// over a geometric k-grid so the plateau can be audited.  Nonpositive
/// samples are ignored; requires k >= 2 and at least k+1 positive values.
TailEstimate hill(std::vector<double> samples, std::size_t k,
                  bool with_plot = true);

/// Least-squares fit of log P_hat(X > x) = log C - gamma log x over the
/// threshold grid.  Censored samples are exact exceedances at thresholds
/// below their value and are excluded entirely at thresholds at or above it.
/// Needs >= 5 thresholds with >= 100 exceedances each.
TailEstimate survival_loglog_fit(std::span<const std::uint64_t> values,
                                 std::span<const double> thresholds);
TailEstimate survival_loglog_fit(std::span<const CensoredSample> samples,
                                 std::span<const double> thresholds);

struct LagQuantiles {
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

struct TailProcessSummary {
  double threshold = 0.0;
  std::size_t horizon = 0;
  std::vector<LagQuantiles> lag_ratios;     // entry j-1: quantiles of X_j/X_0
  std::size_t exceedance_count = 0;
  bool overlapping_windows = false;
  std::vector<double> exceedance_ratios;    // X_0 / threshold at window starts
};

/// Conditional forward windows at exceedances of the threshold: per-lag
/// quantiles of X_j/X_0 plus the law of X_0/threshold.  Windows may overlap
/// (flagged); needs >= 30 exceedances with a full horizon ahead.
TailProcessSummary tail_process_stat(std::span<const std::uint64_t> values,
                                     double threshold, std::size_t horizon);

/// Same statistic pooled over independent trajectories (windows never span
/// a chain boundary).  Replicate chains multiply the number of independent
/// excursions of the level, which is what the exceedance-ratio law needs.
TailProcessSummary tail_process_stat(
    std::span<const std::vector<std::uint64_t>> chains, double threshold,
    std::size_t horizon);

struct AnticlusterResult {
  double prob = 0.0;            // P(max_{m<=k<=r_n} X_k > u | X_0 > u)
  std::size_t exceedances = 0;
};

/// Empirical anti-clustering probe over forward lags [m, r_n].
AnticlusterResult anticluster_stat(std::span<const std::uint64_t> values,
                                   std::size_t m, std::size_t r_n,
                                   double u_level);

struct ExtremalRow {
  std::uint64_t n = 0;
  double u_n = 0.0;
  double chain_prob = 0.0;  // P_hat(M_n <= u_n(tau)) from the chain
  double iid_prob = 0.0;    // same marginal resampled independently
  std::size_t reps = 0;
};

struct ExtremalOptions {
  std::size_t reps = 200;
  std::uint64_t burn_in = 10'000;
  std::uint64_t cap = kValueCap;
  std::uint64_t seed = 0;
  std::size_t surrogate_reps = 10'000;
  int threads = 1;
};

/// For each n: chain estimate of P(M_n <= u_n(tau)) over independent
/// replicates, next to an iid surrogate drawn from the predicted marginal
/// tail (for which P(M_n <= u_n) -> exp(-tau)), isolating dependence from
/// the marginal.
std::vector<ExtremalRow> extremal_diag(const ChainModel& model,
                                       std::span<const std::uint64_t> n_grid,
                                       double tau, const ExtremalOptions& opts);

struct ScalingFit {
  double growth = 0.0;  // fitted slope of log quantile vs log n, estimates 1/eta
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log quantile_q(S_n) against log n; a constant
/// slowly varying factor moves the intercept, not the slope.  Needs >= 4
/// distinct n with >= 1000 samples each.
ScalingFit quantile_scaling(
    const std::map<std::uint64_t, std::vector<double>>& samples_by_n, double q);

/// Hill check that S_n samples have the stable limit's tail index eta;
/// k = 0 picks floor(size^0.7).  The heavy flag goes false for clearly
/// non-power tails (large runaway index estimates).
TailEstimate stable_tail_check(std::vector<double> samples, double eta,
                               std::size_t k = 0);

/// Convenience: censored-aware copy to double (censored values enter as
/// their lower bound).
std::vector<double> to_doubles(std::span<const CensoredSample> samples);
std::vector<double> to_doubles(std::span<const std::uint64_t> values);

}  // namespace critgw

#endif  // CRITGW_EST_HPP
