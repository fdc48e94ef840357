#include "critgw/est.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "critgw/errors.hpp"
#include "critgw/numeric.hpp"
#include "critgw/parallel.hpp"

namespace critgw {

namespace {

double hill_index_from_prefix(const std::vector<double>& log_desc,
                              const std::vector<double>& prefix,
                              std::size_t k) {
  // mean of log X_(1..k) minus log X_(k+1)
  const double mean_top = prefix[k] / static_cast<double>(k);
  return 1.0 / (mean_top - log_desc[k]);
}

}  // namespace

TailEstimate hill(std::vector<double> samples, std::size_t k, bool with_plot) {
  if (k < 2) throw ParameterError("hill: k must be >= 2");
  std::erase_if(samples, [](double v) { return !(v > 0.0); });
  if (samples.size() < k + 1)
    throw InsufficientData("hill: fewer than k+1 positive samples");

  std::sort(samples.begin(), samples.end(), std::greater<>());
  const std::size_t n = samples.size();
  std::vector<double> logs(n), prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = std::log(samples[i]);
    prefix[i + 1] = prefix[i] + logs[i];
  }

  TailEstimate est;
  est.method = TailEstimate::Method::Hill;
  est.k_used = k;
  est.index_hat = hill_index_from_prefix(logs, prefix, k);
  est.stderr_proxy = est.index_hat / std::sqrt(static_cast<double>(k));
  // survival C x^-g matched at the k-th order statistic
  est.constant_hat = static_cast<double>(k) / static_cast<double>(n) *
                     std::pow(samples[k], est.index_hat);
  est.heavy = est.index_hat < 3.0;

  if (with_plot) {
    for (std::size_t kk = 2; kk + 1 < n; kk = kk + kk / 2 + 1)
      est.hill_plot.emplace_back(kk, hill_index_from_prefix(logs, prefix, kk));
  }
  return est;
}

namespace {

struct ThresholdCounts {
  std::uint64_t exceed = 0;
  std::uint64_t effective = 0;
};

TailEstimate fit_from_counts(const std::vector<double>& thresholds,
                             const std::vector<ThresholdCounts>& counts) {
  if (thresholds.size() < 5)
    throw ParameterError("survival_loglog_fit: need at least 5 thresholds");
  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    if (counts[t].exceed < 100) {
      std::ostringstream os;
      os << "survival_loglog_fit: fewer than 100 exceedances at threshold "
         << thresholds[t] << " (" << counts[t].exceed << ")";
      throw InsufficientData(os.str());
    }
    xs.push_back(std::log(thresholds[t]));
    ys.push_back(std::log(static_cast<double>(counts[t].exceed) /
                          static_cast<double>(counts[t].effective)));
  }
  LineFit fit = fit_line(xs, ys);
  TailEstimate est;
  est.method = TailEstimate::Method::LogLogRegression;
  est.index_hat = -fit.slope;
  est.constant_hat = std::exp(fit.intercept);
  est.k_used = thresholds.size();
  est.stderr_proxy = fit.rms_residual;
  est.heavy = est.index_hat < 3.0;
  return est;
}

}  // namespace

TailEstimate survival_loglog_fit(std::span<const std::uint64_t> values,
                                 std::span<const double> thresholds) {
  std::vector<double> thr(thresholds.begin(), thresholds.end());
  std::vector<ThresholdCounts> counts(thr.size());
  for (std::size_t t = 0; t < thr.size(); ++t) {
    std::uint64_t ex = 0;
    for (std::uint64_t v : values)
      ex += static_cast<double>(v) > thr[t];
    counts[t] = {ex, values.size()};
  }
  return fit_from_counts(thr, counts);
}

TailEstimate survival_loglog_fit(std::span<const CensoredSample> samples,
                                 std::span<const double> thresholds) {
  std::vector<double> thr(thresholds.begin(), thresholds.end());
  std::vector<ThresholdCounts> counts(thr.size());
  for (std::size_t t = 0; t < thr.size(); ++t) {
    std::uint64_t ex = 0, eff = 0;
    for (const CensoredSample& s : samples) {
      const double v = static_cast<double>(s.value);
      if (s.censored && v <= thr[t]) continue;  // unusable at this level
      ++eff;
      ex += v > thr[t];
    }
    counts[t] = {ex, eff};
  }
  return fit_from_counts(thr, counts);
}

namespace {

TailProcessSummary tail_process_pooled(
    std::span<const std::span<const std::uint64_t>> chains, double threshold,
    std::size_t horizon) {
  if (horizon < 1) throw ParameterError("tail_process_stat: horizon must be >= 1");

  TailProcessSummary out;
  out.threshold = threshold;
  out.horizon = horizon;
  std::vector<std::vector<double>> lag_pool(horizon);

  for (std::span<const std::uint64_t> values : chains) {
    if (values.size() <= horizon) continue;
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t i = 0; i + horizon < values.size(); ++i) {
      if (!(static_cast<double>(values[i]) > threshold)) continue;
      if (!first && i - prev <= horizon) out.overlapping_windows = true;
      prev = i;
      first = false;
      ++out.exceedance_count;
      out.exceedance_ratios.push_back(static_cast<double>(values[i]) / threshold);
      const double x0 = static_cast<double>(values[i]);
      for (std::size_t j = 1; j <= horizon; ++j)
        lag_pool[j - 1].push_back(static_cast<double>(values[i + j]) / x0);
    }
  }
  if (out.exceedance_count < 30)
    throw InsufficientData("tail_process_stat: fewer than 30 exceedances");

  out.lag_ratios.resize(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    std::sort(lag_pool[j].begin(), lag_pool[j].end());
    out.lag_ratios[j] = {quantile_sorted(lag_pool[j], 0.05),
                         quantile_sorted(lag_pool[j], 0.50),
                         quantile_sorted(lag_pool[j], 0.95)};
  }
  return out;
}

}  // namespace

TailProcessSummary tail_process_stat(std::span<const std::uint64_t> values,
                                     double threshold, std::size_t horizon) {
  const std::span<const std::uint64_t> one[] = {values};
  return tail_process_pooled(one, threshold, horizon);
}

TailProcessSummary tail_process_stat(
    std::span<const std::vector<std::uint64_t>> chains, double threshold,
    std::size_t horizon) {
  std::vector<std::span<const std::uint64_t>> views;
  views.reserve(chains.size());
  for (const auto& c : chains) views.emplace_back(c);
  return tail_process_pooled(views, threshold, horizon);
}

AnticlusterResult anticluster_stat(std::span<const std::uint64_t> values,
                                   std::size_t m, std::size_t r_n,
                                   double u_level) {
  if (!(r_n > m && m >= 1))
    throw ParameterError("anticluster_stat: need r_n > m >= 1");
  std::size_t hits = 0, count = 0;
  for (std::size_t i = 0; i + r_n < values.size(); ++i) {
    if (!(static_cast<double>(values[i]) > u_level)) continue;
    ++count;
    for (std::size_t k = m; k <= r_n; ++k) {
      if (static_cast<double>(values[i + k]) > u_level) {
        ++hits;
        break;
      }
    }
  }
  if (count < 30)
    throw InsufficientData("anticluster_stat: fewer than 30 exceedances");
  return {static_cast<double>(hits) / static_cast<double>(count), count};
}

std::vector<ExtremalRow> extremal_diag(const ChainModel& model,
                                       std::span<const std::uint64_t> n_grid,
                                       double tau, const ExtremalOptions& opts) {
  // Zero extremal index means runs of length n essentially never reach
  // u_n(tau), so an empirical marginal pool recorded from those same runs
  // cannot resolve P(X > u_n) = tau/n at any feasible scale.  The iid
  // column therefore draws from the predicted marginal tail law directly
  // (a Pareto with P(X > u_n(tau)) = tau/n by construction), which is the
  // benchmark the e^-tau limit is derived from.
  const TailLaw tail = predicted_stationary_tail(model);

  std::vector<ExtremalRow> rows;
  rows.reserve(n_grid.size());
  std::uint64_t stream_base = 0;

  for (std::uint64_t n : n_grid) {
    const double u_n = level_sequence(model, tau, n);
    std::vector<std::uint64_t> maxima(opts.reps);
    parallel_for(opts.reps, opts.threads, [&](std::size_t r) {
      RngStream rng(opts.seed, stream_base + r);
      Trajectory traj = run_chain(model, n, opts.burn_in, rng, opts.cap);
      maxima[r] = traj.stats.max_value;
    });
    stream_base += opts.reps;

    std::size_t below = 0;
    for (std::size_t r = 0; r < opts.reps; ++r)
      below += static_cast<double>(maxima[r]) <= u_n;

    // An iid maximum stays below u_n iff the first exceedance time G (a
    // geometric with success probability P(X > u_n)) lands beyond n.
    const double p = tail(u_n);
    std::size_t iid_below = 0;
    RngStream srng(opts.seed, stream_base);
    ++stream_base;
    const double log_q = std::log1p(-p);
    for (std::size_t r = 0; r < opts.surrogate_reps; ++r) {
      const double g = std::floor(std::log(srng.next_open()) / log_q);
      iid_below += g >= static_cast<double>(n);
    }

    ExtremalRow row;
    row.n = n;
    row.u_n = u_n;
    row.reps = opts.reps;
    row.chain_prob = static_cast<double>(below) / static_cast<double>(opts.reps);
    row.iid_prob = static_cast<double>(iid_below) /
                   static_cast<double>(opts.surrogate_reps);
    rows.push_back(row);
  }
  return rows;
}

ScalingFit quantile_scaling(
    const std::map<std::uint64_t, std::vector<double>>& samples_by_n,
    double q) {
  if (samples_by_n.size() < 4)
    throw InsufficientData("quantile_scaling: need >= 4 distinct n");
  std::vector<double> xs, ys;
  for (const auto& [n, samples] : samples_by_n) {
    if (samples.size() < 1000)
      throw InsufficientData("quantile_scaling: need >= 1000 samples per n");
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(quantile_sorted(sorted, q)));
  }
  LineFit fit = fit_line(xs, ys);
  return {fit.slope, fit.intercept, xs.size()};
}

TailEstimate stable_tail_check(std::vector<double> samples, double eta,
                               std::size_t k) {
  if (k == 0)
    k = static_cast<std::size_t>(
        std::pow(static_cast<double>(samples.size()), 0.7));
  TailEstimate est = hill(std::move(samples), k);
  est.heavy = est.index_hat < 3.0 && est.index_hat > 0.0;
  (void)eta;  // comparison against eta is the caller's pass/fail decision
  return est;
}

std::vector<double> to_doubles(std::span<const CensoredSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const CensoredSample& s : samples)
    out.push_back(static_cast<double>(s.value));
  return out;
}

std::vector<double> to_doubles(std::span<const std::uint64_t> values) {
  return {values.begin(), values.end()};
}

}  // namespace critgw
