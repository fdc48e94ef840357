#include "critgw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "critgw/errors.hpp"
#include "critgw/numeric.hpp"
#include "critgw/parallel.hpp"

namespace critgw {

using nlohmann::json;

namespace {

// --------------------------------------------------------------------------
// Config plumbing

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
}

template <typename T>
T get_req(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for '" + key + "'");
  }
}

template <typename T>
T get_opt(const json& obj, const std::string& key, T def, const std::string& ctx) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for '" + key + "'");
  }
}

std::uint64_t scaled_size(std::uint64_t v, double scale) {
  if (scale == 1.0) return v;
  double s = std::round(static_cast<double>(v) * scale);
  return s < 1.0 ? 1 : static_cast<std::uint64_t>(s);
}

// --------------------------------------------------------------------------
// Artifact writing (byte-stable: fixed %.17g formatting, LF newlines)

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot open artifact " + path.string());
    out_ << header << "\n";
  }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, out_ << fmt_cell(cells)), ...);
    out_ << "\n";
  }

 private:
  static std::string fmt_cell(const std::string& s) { return s; }
  static std::string fmt_cell(const char* s) { return s; }
  static std::string fmt_cell(double v) { return fmt(v); }
  static std::string fmt_cell(std::uint64_t v) { return fmt(v); }
  std::ofstream out_;
};

struct Ctx {
  json cfg;
  RunOptions opts;
  Report* report;
  std::string prefix;

  std::filesystem::path artifact(const std::string& suffix) const {
    std::filesystem::path p = std::filesystem::path(opts.out_dir) / (prefix + suffix);
    report->artifacts.push_back(p.string());
    return p;
  }
  std::uint64_t size(const std::string& key, std::uint64_t def) const {
    return scaled_size(get_opt<std::uint64_t>(cfg, key, def, report->experiment),
                       opts.scale);
  }
};

void add_metric(Report& r, const std::string& name, double predicted,
                double estimated, const std::string& tol, bool pass,
                const std::string& claim) {
  r.metrics.push_back({name, predicted, estimated, tol, pass, claim});
}

bool within_abs(double est, double pred, double tol) {
  return std::abs(est - pred) <= tol;
}
bool within_rel(double est, double pred, double tol) {
  return std::abs(est - pred) <= tol * std::abs(pred);
}

std::string tol_abs(double t) { return "abs " + fmt(t); }
std::string tol_rel(double t) { return "rel " + fmt(t); }

double quantile_of_u64(std::vector<std::uint64_t> values, double q) {
  std::sort(values.begin(), values.end());
  std::vector<double> d(values.begin(), values.end());
  return quantile_sorted(d, q);
}

std::uint64_t pick_index(RngStream& rng, std::uint64_t size) {
  // Lemire's multiply-shift; bias < 2^-64 * size, irrelevant here
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng.next_u64()) * size) >> 64);
}

// --------------------------------------------------------------------------
// Experiments

const std::set<std::string> kModelKeys = {"offspring", "immigration"};

void exp_stationary_oracle(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "n", "burn_in", "stride",
                         "k_cells", "chi2_level", "phi_tol", "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto n = ctx.size("n", 1'000'000);
  const auto burn_in = ctx.size("burn_in", 10'000);
  const auto stride = get_opt<std::uint64_t>(ctx.cfg, "stride", 10, ex);
  const auto k_cells = get_opt<std::uint64_t>(ctx.cfg, "k_cells", 4, ex);
  const double level = get_opt<double>(ctx.cfg, "chi2_level", 1e-3, ex);
  const double phi_tol = get_opt<double>(ctx.cfg, "phi_tol", 1e-6, ex);

  Trajectory traj = run_chain(model, n, burn_in, seed_stream(seed, 0), kValueCap, stride);

  auto phi = [&](std::complex<double> s) { return stationary_pgf(model, s, phi_tol); };
  PmfExtraction ext = pgf_to_pmf(phi, k_cells, 0.5, 64, phi_tol);

  const double nobs = static_cast<double>(traj.values.size());
  std::vector<std::uint64_t> counts(k_cells + 1, 0);
  std::uint64_t other = 0;
  for (std::uint64_t v : traj.values) {
    if (v <= k_cells)
      ++counts[static_cast<std::size_t>(v)];
    else
      ++other;
  }

  // chi-squared over cells with expected count >= 5, remainder pooled
  double chi2 = 0.0, other_p = 1.0;
  int cells = 0;
  for (std::uint64_t k = 0; k <= k_cells; ++k) {
    const double pk = ext.pmf[static_cast<std::size_t>(k)];
    if (pk * nobs < 5.0) {
      other += counts[static_cast<std::size_t>(k)];
      continue;
    }
    other_p -= pk;
    ++cells;
    const double expd = pk * nobs;
    const double diff = static_cast<double>(counts[static_cast<std::size_t>(k)]) - expd;
    chi2 += diff * diff / expd;
    add_metric(*ctx.report, "pmf_" + std::to_string(k), pk,
               static_cast<double>(counts[static_cast<std::size_t>(k)]) / nobs,
               "informational (gated by chi2)", true,
               "stationary pmf from the infinite product of immigration pgf at"
               " offspring iterates");
  }
  {
    const double expd = other_p * nobs;
    if (expd >= 5.0) {
      const double diff = static_cast<double>(other) - expd;
      chi2 += diff * diff / expd;
      ++cells;
    }
  }
  const double crit = chi_squared_critical(cells - 1, level);
  add_metric(*ctx.report, "chi2", crit, chi2, "chi2 below critical at " + fmt(level),
             chi2 < crit,
             "chain long-run occupation matches the stationary law");

  if (ctx.opts.write_artifacts) {
    Csv pmf_csv(ctx.artifact("_pmf.csv"), "k,predicted,observed");
    for (std::uint64_t k = 0; k <= k_cells; ++k)
      pmf_csv.row(k, ext.pmf[static_cast<std::size_t>(k)],
                  static_cast<double>(counts[static_cast<std::size_t>(k)]) / nobs);
    Csv chain_csv(ctx.artifact("_chain.csv"), "index,value");
    for (std::size_t i = 0; i < traj.values.size(); ++i)
      chain_csv.row(static_cast<std::uint64_t>(i * stride), traj.values[i]);
  }
}

void exp_stationary_tail(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "n", "burn_in", "cap",
                         "thresholds", "tol_index_abs", "tol_constant_rel",
                         "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto n = ctx.size("n", 10'000'000);
  const auto burn_in = ctx.size("burn_in", 10'000);
  const auto cap = get_opt<std::uint64_t>(ctx.cfg, "cap", kValueCap, ex);
  auto thresholds = get_opt<std::vector<double>>(
      ctx.cfg, "thresholds", {1e2, 3e2, 1e3, 3e3, 1e4}, ex);
  const double tol_idx = get_opt<double>(ctx.cfg, "tol_index_abs", 0.05, ex);
  const double tol_con = get_opt<double>(ctx.cfg, "tol_constant_rel", 0.2, ex);

  TailLaw pred = predicted_stationary_tail(model);
  Trajectory traj = run_chain(model, n, burn_in, seed_stream(seed, 0), cap);
  if (traj.censored)
    throw InsufficientData(ex + ": trajectory censored at cap; raise cap");

  TailEstimate fit = survival_loglog_fit(std::span<const std::uint64_t>(traj.values),
                                         thresholds);
  add_metric(*ctx.report, "tail_index", pred.index, fit.index_hat, tol_abs(tol_idx),
             within_abs(fit.index_hat, pred.index, tol_idx),
             "stationary tail is regularly varying with the predicted index");
  add_metric(*ctx.report, "tail_constant", pred.constant, fit.constant_hat,
             tol_rel(tol_con), within_rel(fit.constant_hat, pred.constant, tol_con),
             "stationary tail constant matches the explicit formula");

  if (ctx.opts.write_artifacts) {
    Csv surv(ctx.artifact("_survival.csv"),
             "threshold,empirical,predicted,ratio,n_effective");
    for (double thr : thresholds) {
      std::uint64_t ex_count = 0;
      for (std::uint64_t v : traj.values) ex_count += static_cast<double>(v) > thr;
      const double emp = static_cast<double>(ex_count) /
                         static_cast<double>(traj.values.size());
      const double prd = pred(thr);
      surv.row(thr, emp, prd, emp / prd,
               static_cast<std::uint64_t>(traj.values.size()));
    }
    TailEstimate h = hill(to_doubles(std::span<const std::uint64_t>(traj.values)),
                          static_cast<std::size_t>(std::pow(
                              static_cast<double>(traj.values.size()), 0.6)));
    Csv hill_csv(ctx.artifact("_hill.csv"), "k,index_hat");
    for (const auto& [k, idx] : h.hill_plot) hill_csv.row(static_cast<std::uint64_t>(k), idx);
  }
}

void exp_progeny_tail(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "reps", "cap",
                         "thresholds", "index_band", "tol_constant_rel",
                         "out_prefix"}, ex);
  const json& mj = get_req<json>(ctx.cfg, "model", ex);
  require_keys(mj, kModelKeys, ex + ".model");
  OffspringLaw off = offspring_from_json(get_req<json>(mj, "offspring", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto reps = ctx.size("reps", 1'000'000);
  const auto cap = get_opt<std::uint64_t>(ctx.cfg, "cap", 100'000'000, ex);
  auto thresholds = get_opt<std::vector<double>>(
      ctx.cfg, "thresholds", {1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5}, ex);
  TailLaw pred = predicted_progeny_tail(off);
  auto band = get_opt<std::vector<double>>(
      ctx.cfg, "index_band", {pred.index - 0.05, pred.index + 0.05}, ex);
  const double tol_con = get_opt<double>(ctx.cfg, "tol_constant_rel", 0.15, ex);

  std::vector<CensoredSample> samples(reps);
  parallel_for(reps, ctx.opts.threads, [&](std::size_t r) {
    RngStream rng(seed, r);
    samples[r] = sample_total_progeny(off, cap, rng);
  });

  TailEstimate fit = survival_loglog_fit(std::span<const CensoredSample>(samples),
                                         thresholds);
  add_metric(*ctx.report, "progeny_index", pred.index, fit.index_hat,
             "in [" + fmt(band[0]) + ", " + fmt(band[1]) + "]",
             fit.index_hat >= band[0] && fit.index_hat <= band[1],
             "total progeny tail has index 1/(1+alpha)");
  add_metric(*ctx.report, "progeny_constant", pred.constant, fit.constant_hat,
             tol_rel(tol_con), within_rel(fit.constant_hat, pred.constant, tol_con),
             "total progeny tail constant from the de Bruijn conjugate");

  if (ctx.opts.write_artifacts) {
    Csv surv(ctx.artifact("_survival.csv"),
             "threshold,empirical,predicted,ratio,n_effective");
    for (double thr : thresholds) {
      std::uint64_t ex_count = 0, eff = 0;
      for (const CensoredSample& s : samples) {
        if (s.censored && static_cast<double>(s.value) <= thr) continue;
        ++eff;
        ex_count += static_cast<double>(s.value) > thr;
      }
      const double emp = static_cast<double>(ex_count) / static_cast<double>(eff);
      surv.row(thr, emp, pred(thr), emp / pred(thr), eff);
    }
  }
}

void exp_tail_process(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "n", "burn_in",
                         "quantiles", "hill_quantiles", "horizon", "ratio_band",
                         "hill_band", "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto n = ctx.size("n", 1'000'000);
  const auto burn_in = ctx.size("burn_in", 10'000);
  auto quantiles = get_opt<std::vector<double>>(ctx.cfg, "quantiles",
                                                {0.999, 0.9999}, ex);
  // The Pareto-factor check needs many independent excursions of the level,
  // which desk-scale runs only deliver at the lowest quantile; higher
  // levels stay useful for the ratio medians.
  auto hill_quantiles = get_opt<std::vector<double>>(
      ctx.cfg, "hill_quantiles", {quantiles.empty() ? 0.999 : quantiles.front()},
      ex);
  const auto horizon = get_opt<std::uint64_t>(ctx.cfg, "horizon", 10, ex);
  const double band = get_opt<double>(ctx.cfg, "ratio_band", 0.05, ex);
  const double hill_band = get_opt<double>(ctx.cfg, "hill_band", 0.1, ex);
  const double gamma = model.gamma();

  Trajectory traj = run_chain(model, n, burn_in, seed_stream(seed, 0), kValueCap);

  std::unique_ptr<Csv> lags;
  if (ctx.opts.write_artifacts)
    lags = std::make_unique<Csv>(ctx.artifact("_lags.csv"),
                                 "threshold,lag,q05,q50,q95");
  for (double q : quantiles) {
    const double thr = quantile_of_u64(traj.values, q);
    TailProcessSummary tps =
        tail_process_stat(std::span<const std::uint64_t>(traj.values),
                          thr, horizon);
    double worst = 0.0;
    for (const LagQuantiles& lq : tps.lag_ratios)
      worst = std::max(worst, std::abs(lq.q50 - 1.0));
    add_metric(*ctx.report, "ratio_median_dev_q" + fmt(q), 0.0, worst,
               "abs " + fmt(band),
               worst <= band,
               "conditioned on a high value, the rescaled forward path is"
               " constant (tail process has all coordinates equal)");

    if (lags)
      for (std::size_t j = 0; j < tps.lag_ratios.size(); ++j)
        lags->row(thr, static_cast<std::uint64_t>(j + 1), tps.lag_ratios[j].q05,
                  tps.lag_ratios[j].q50, tps.lag_ratios[j].q95);
  }
  for (double q : hill_quantiles) {
    const double thr = quantile_of_u64(traj.values, q);
    TailProcessSummary tps =
        tail_process_stat(std::span<const std::uint64_t>(traj.values),
                          thr, horizon);
    // all-exceedance Hill = Pareto MLE of the occupation law; a top-order
    // restriction would see only the largest excursion
    TailEstimate h = hill(tps.exceedance_ratios, tps.exceedance_ratios.size() - 1);
    add_metric(*ctx.report, "exceedance_pareto_index_q" + fmt(q), gamma,
               h.index_hat, tol_abs(hill_band),
               within_abs(h.index_hat, gamma, hill_band),
               "the spectral factor is Pareto with the stationary tail index");
  }
}

void exp_anticluster(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "n", "burn_in", "m",
                         "r_n", "level_quantile", "chain_min", "iid_max",
                         "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto n = ctx.size("n", 1'000'000);
  const auto burn_in = ctx.size("burn_in", 10'000);
  const auto m = get_opt<std::uint64_t>(ctx.cfg, "m", 5, ex);
  const auto r_n = get_opt<std::uint64_t>(ctx.cfg, "r_n", 100, ex);
  const double lq = get_opt<double>(ctx.cfg, "level_quantile", 0.999, ex);
  const double chain_min = get_opt<double>(ctx.cfg, "chain_min", 0.9, ex);
  const double iid_max = get_opt<double>(ctx.cfg, "iid_max", 0.2, ex);

  Trajectory traj = run_chain(model, n, burn_in, seed_stream(seed, 0), kValueCap);
  const double u = quantile_of_u64(traj.values, lq);

  AnticlusterResult chain =
      anticluster_stat(std::span<const std::uint64_t>(traj.values), m, r_n, u);

  // iid surrogate with the same marginal: resample the recorded values
  std::vector<std::uint64_t> surrogate(traj.values.size());
  RngStream srng(seed, 1);
  for (std::uint64_t& v : surrogate)
    v = traj.values[pick_index(srng, traj.values.size())];
  AnticlusterResult iid =
      anticluster_stat(std::span<const std::uint64_t>(surrogate), m, r_n, u);

  add_metric(*ctx.report, "chain_anticluster_prob", 1.0, chain.prob,
             ">= " + fmt(chain_min), chain.prob >= chain_min,
             "extremes persist across the window: the anti-clustering"
             " condition fails for the chain");
  add_metric(*ctx.report, "iid_anticluster_prob", 0.0, iid.prob,
             "<= " + fmt(iid_max), iid.prob <= iid_max,
             "an independent sequence with the same marginal does satisfy it");
}

void exp_sum_clt(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "mode", "n_grid", "reps",
                         "cap", "burn_in", "q", "tol_growth_abs",
                         "tol_stable_abs", "stable_k", "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const std::string mode_s = get_opt<std::string>(ctx.cfg, "mode", "clan-sum", ex);
  if (mode_s != "clan-sum" && mode_s != "chain")
    throw ConfigError(ex + ": mode must be 'clan-sum' or 'chain'");
  const SumMode mode = mode_s == "chain" ? SumMode::Chain : SumMode::ClanSum;
  auto n_grid = get_opt<std::vector<std::uint64_t>>(
      ctx.cfg, "n_grid", {128, 256, 512, 1024, 2048, 4096, 8192}, ex);
  const auto reps = ctx.size("reps", 1000);
  const auto cap = get_opt<std::uint64_t>(ctx.cfg, "cap", kValueCap, ex);
  const auto burn_in = ctx.size("burn_in", 10'000);
  const double q = get_opt<double>(ctx.cfg, "q", 0.5, ex);
  const double tol_growth = get_opt<double>(ctx.cfg, "tol_growth_abs", 0.1, ex);
  const double tol_stable = get_opt<double>(ctx.cfg, "tol_stable_abs", 0.07, ex);
  const auto stable_k = get_opt<std::uint64_t>(ctx.cfg, "stable_k", 0, ex);

  SumExponent pred = predicted_sum_exponent(model);

  std::map<std::uint64_t, std::vector<double>> by_n;
  std::uint64_t stream_offset = 0;
  std::uint64_t censored_total = 0;
  for (std::uint64_t n : n_grid) {
    PartialSumSpec spec;
    spec.n = n;
    spec.mode = mode;
    spec.reps = reps;
    spec.seed = seed;
    spec.stream_offset = stream_offset;
    spec.cap = cap;
    spec.burn_in = burn_in;
    spec.threads = ctx.opts.threads;
    stream_offset += reps;
    std::vector<CensoredSample> samples = sample_partial_sum(model, spec);
    for (const CensoredSample& s : samples) censored_total += s.censored;
    by_n[n] = to_doubles(std::span<const CensoredSample>(samples));
  }

  ScalingFit scaling = quantile_scaling(by_n, q);
  add_metric(*ctx.report, "growth_exponent", pred.growth, scaling.growth,
             tol_abs(tol_growth), within_abs(scaling.growth, pred.growth, tol_growth),
             "partial sums grow like n^(1/eta), a heavier scaling than the"
             " marginal tail suggests");

  const auto& largest = by_n.rbegin()->second;
  TailEstimate stable = stable_tail_check(largest, pred.eta,
                                          static_cast<std::size_t>(stable_k));
  add_metric(*ctx.report, "stable_tail_index", pred.eta, stable.index_hat,
             tol_abs(tol_stable), within_abs(stable.index_hat, pred.eta, tol_stable),
             "the limit is a positive stable law of index eta");

  if (censored_total > 0)
    add_metric(*ctx.report, "censored_samples", 0.0,
               static_cast<double>(censored_total), "informational", true,
               "capped replicates enter quantiles as lower bounds");

  if (ctx.opts.write_artifacts) {
    Csv qcsv(ctx.artifact("_quantiles.csv"), "n,quantile");
    for (auto& [n, samples] : by_n) {
      std::vector<double> sorted(samples);
      std::sort(sorted.begin(), sorted.end());
      qcsv.row(n, quantile_sorted(sorted, q));
    }
    Csv hill_csv(ctx.artifact("_hill.csv"), "k,index_hat");
    for (const auto& [k, idx] : stable.hill_plot) hill_csv.row(static_cast<std::uint64_t>(k), idx);
  }
}

void exp_extremal(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "model", "n_grid", "tau", "reps",
                         "burn_in", "cap", "surrogate_reps", "chain_final_min",
                         "iid_center", "iid_tol", "monotone_slack",
                         "out_prefix"}, ex);
  ChainModel model = model_from_json(get_req<json>(ctx.cfg, "model", ex));
  ExtremalOptions opts;
  opts.seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  auto n_grid = get_opt<std::vector<std::uint64_t>>(ctx.cfg, "n_grid",
                                                    {1000, 10'000, 100'000}, ex);
  const double tau = get_opt<double>(ctx.cfg, "tau", 1.0, ex);
  opts.reps = ctx.size("reps", 200);
  opts.burn_in = ctx.size("burn_in", 10'000);
  opts.cap = get_opt<std::uint64_t>(ctx.cfg, "cap", kValueCap, ex);
  opts.surrogate_reps = ctx.size("surrogate_reps", 10'000);
  opts.threads = ctx.opts.threads;
  const double final_min = get_opt<double>(ctx.cfg, "chain_final_min", 0.9, ex);
  const double iid_center = get_opt<double>(ctx.cfg, "iid_center",
                                            0.36787944117144233, ex);
  const double iid_tol = get_opt<double>(ctx.cfg, "iid_tol", 0.05, ex);
  const double slack = get_opt<double>(ctx.cfg, "monotone_slack", 0.0, ex);

  std::vector<ExtremalRow> rows = extremal_diag(model, n_grid, tau, opts);

  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    monotone &= rows[i].chain_prob >= rows[i - 1].chain_prob - slack;
  add_metric(*ctx.report, "chain_prob_monotone", 1.0, monotone ? 1.0 : 0.0,
             "nondecreasing in n", monotone,
             "P(M_n below the tau-level) rises toward 1: extremal index 0");
  add_metric(*ctx.report, "chain_prob_final", 1.0, rows.back().chain_prob,
             ">= " + fmt(final_min), rows.back().chain_prob >= final_min,
             "maxima stay an order below the iid-calibrated level sequence");
  for (const ExtremalRow& row : rows)
    add_metric(*ctx.report, "iid_prob_n" + std::to_string(row.n),
               iid_center, row.iid_prob, tol_abs(iid_tol),
               within_abs(row.iid_prob, iid_center, iid_tol),
               "same marginal, shuffled: P(M_n <= u_n(tau)) -> exp(-tau)");

  if (ctx.opts.write_artifacts) {
    Csv csv(ctx.artifact("_extremal.csv"), "n,u_n,chain_prob,iid_prob,reps");
    for (const ExtremalRow& row : rows)
      csv.row(row.n, row.u_n, row.chain_prob, row.iid_prob, static_cast<std::uint64_t>(row.reps));
  }
}

void exp_fw_check(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "cases", "out_prefix"}, ex);
  const json& cases = get_req<json>(ctx.cfg, "cases", ex);
  if (!cases.is_array() || cases.empty())
    throw ConfigError(ex + ": 'cases' must be a non-empty array");

  std::unique_ptr<Csv> csv;
  if (ctx.opts.write_artifacts)
    csv = std::make_unique<Csv>(
        ctx.artifact("_fw.csv"),
        "offspring,immigration,exponent,classification,expected");

  int idx = 0;
  for (const json& c : cases) {
    require_keys(c, {"model", "expected"}, ex + ".cases");
    ChainModel model = model_from_json(get_req<json>(c, "model", ex));
    const std::string expected = get_req<std::string>(c, "expected", ex);
    if (expected != "finite" && expected != "infinite")
      throw ConfigError(ex + ": expected must be 'finite' or 'infinite'");
    FwResult res = fw_check(model);
    const bool is_finite = res.classification == Integrability::Finite;
    const bool pass = res.well_conditioned &&
                      is_finite == (expected == "finite");
    add_metric(*ctx.report, "case_" + std::to_string(idx++),
               expected == "finite" ? 1.0 : 0.0, is_finite ? 1.0 : 0.0,
               "exact classification (fitted exponent " + fmt(res.exponent) + ")",
               pass,
               "stationarity holds iff the immigration/drift ratio is"
               " integrable at 1");
    if (csv)
      csv->row(model.offspring().describe(), model.immigration().describe(),
               res.exponent, is_finite ? "finite" : "infinite", expected);
  }
}

void exp_randsum(Ctx& ctx) {
  const std::string& ex = ctx.report->experiment;
  require_keys(ctx.cfg, {"experiment", "seed", "tau", "nu", "reps", "thresholds",
                         "ratio_band", "tol_index_abs", "out_prefix"}, ex);
  ImmigrationLaw tau_law = immigration_from_json(get_req<json>(ctx.cfg, "tau", ex));
  const double nu = get_opt<double>(ctx.cfg, "nu", 0.5, ex);
  const auto seed = get_opt<std::uint64_t>(ctx.cfg, "seed", 1, ex);
  const auto reps = ctx.size("reps", 1'000'000);
  auto thresholds = get_opt<std::vector<double>>(
      ctx.cfg, "thresholds", {1e2, 1e3, 1e4, 1e5, 1e6}, ex);
  const double ratio_band = get_opt<double>(ctx.cfg, "ratio_band", 0.1, ex);
  const double tol_idx = get_opt<double>(ctx.cfg, "tol_index_abs", 0.05, ex);

  ParetoIntLaw y{nu};
  std::vector<SurvivalRow> rows =
      verify_random_sum_tail(tau_law, y, reps, thresholds, seed);

  if (!tau_law.heavy_tailed()) {
    const SurvivalRow& top = rows.back();
    add_metric(*ctx.report, "ratio_at_top", 1.0, top.ratio,
               "in [" + fmt(1.0 - ratio_band) + ", " + fmt(1.0 + ratio_band) + "]",
               top.ratio >= 1.0 - ratio_band && top.ratio <= 1.0 + ratio_band,
               "finite count: random-sum tail is E[tau] times the summand tail");
  } else {
    std::vector<double> xs, ys;
    for (const SurvivalRow& row : rows)
      if (row.empirical > 0.0) {
        xs.push_back(std::log(row.threshold));
        ys.push_back(std::log(row.empirical));
      }
    if (xs.size() < 3)
      throw InsufficientData(ex + ": too few thresholds with exceedances");
    LineFit fit = fit_line(xs, ys);
    const double mu = tau_law.parameter();
    add_metric(*ctx.report, "random_sum_index", mu * nu, -fit.slope,
               tol_abs(tol_idx), within_abs(-fit.slope, mu * nu, tol_idx),
               "heavy count: random-sum tail index is the product mu*nu");
    add_metric(*ctx.report, "ratio_at_top", 1.0, rows.back().ratio,
               "informational", true,
               "constant includes the Gamma factor of the composition");
  }

  if (ctx.opts.write_artifacts) {
    Csv csv(ctx.artifact("_randsum.csv"),
            "threshold,empirical,predicted,ratio,n_effective");
    for (const SurvivalRow& row : rows)
      csv.row(row.threshold, row.empirical, row.predicted, row.ratio,
              row.n_effective);
  }
}

using ExperimentFn = void (*)(Ctx&);

const std::map<std::string, ExperimentFn>& registry() {
  static const std::map<std::string, ExperimentFn> reg = {
      {"stationary-oracle", exp_stationary_oracle},
      {"stationary-tail", exp_stationary_tail},
      {"progeny-tail", exp_progeny_tail},
      {"tail-process", exp_tail_process},
      {"anticluster", exp_anticluster},
      {"sum-clt", exp_sum_clt},
      {"extremal", exp_extremal},
      {"fw-check", exp_fw_check},
      {"randsum", exp_randsum},
  };
  return reg;
}

}  // namespace

// --------------------------------------------------------------------------

json Report::to_json() const {
  json j;
  j["version"] = version;
  j["experiment"] = experiment;
  j["config"] = config_echo;
  j["pass"] = pass;
  j["wall_clock_sec"] = wall_clock_sec;
  j["metrics"] = json::array();
  for (const Metric& m : metrics) {
    j["metrics"].push_back({{"name", m.name},
                            {"predicted", m.predicted},
                            {"estimated", m.estimated},
                            {"tolerance", m.tolerance},
                            {"pass", m.pass},
                            {"claim", m.claim}});
  }
  j["artifacts"] = artifacts;
  return j;
}

std::vector<std::string> list_experiments() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

RngStream seed_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

Report run_experiment(const json& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  const std::string name = get_req<std::string>(config, "experiment", "config");
  auto it = registry().find(name);
  if (it == registry().end())
    throw ConfigError("unknown experiment '" + name + "'");

  Report report;
  report.experiment = name;
  report.config_echo = config;

  Ctx ctx{config, opts, &report,
          get_opt<std::string>(config, "out_prefix", name, name)};
  if (opts.write_artifacts)
    std::filesystem::create_directories(opts.out_dir);
  it->second(ctx);

  report.pass = true;
  for (const Metric& m : report.metrics) report.pass &= m.pass;
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  if (opts.write_artifacts) {
    std::filesystem::path path =
        std::filesystem::path(opts.out_dir) / (ctx.prefix + "_report.json");
    std::ofstream out(path);
    out << report.to_json().dump(2) << "\n";
    report.artifacts.push_back(path.string());
  }
  return report;
}

Report run_experiment_file(const std::string& path, const RunOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return run_experiment(config, opts);
}

// --------------------------------------------------------------------------
// Model parsing

OffspringLaw offspring_from_json(const json& spec) {
  require_keys(spec, {"kind", "alpha", "c", "table_size"}, "offspring");
  const std::string kind = get_req<std::string>(spec, "kind", "offspring");
  const double alpha = get_req<double>(spec, "alpha", "offspring");
  try {
    if (kind == "slack")
      return OffspringLaw::slack(alpha, get_req<double>(spec, "c", "offspring"));
    if (kind == "power-fractional")
      return OffspringLaw::power_fractional(
          alpha, get_opt<std::uint64_t>(spec, "table_size", 1u << 14, "offspring"));
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("offspring: ") + e.what());
  }
  throw ConfigError("offspring: kind must be 'slack' or 'power-fractional'");
}

ImmigrationLaw immigration_from_json(const json& spec) {
  require_keys(spec, {"kind", "b", "mean", "p", "beta"}, "immigration");
  const std::string kind = get_req<std::string>(spec, "kind", "immigration");
  try {
    if (kind == "constant")
      return ImmigrationLaw::constant(get_req<std::uint64_t>(spec, "b", "immigration"));
    if (kind == "poisson")
      return ImmigrationLaw::poisson(get_req<double>(spec, "mean", "immigration"));
    if (kind == "geometric")
      return ImmigrationLaw::geometric(get_req<double>(spec, "p", "immigration"));
    if (kind == "sibuya")
      return ImmigrationLaw::sibuya(get_req<double>(spec, "beta", "immigration"));
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("immigration: ") + e.what());
  }
  throw ConfigError(
      "immigration: kind must be constant|poisson|geometric|sibuya");
}

ChainModel model_from_json(const json& spec) {
  require_keys(spec, kModelKeys, "model");
  return ChainModel(offspring_from_json(get_req<json>(spec, "offspring", "model")),
                    immigration_from_json(get_req<json>(spec, "immigration", "model")));
}

}  // namespace critgw
