#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "critgw/errors.hpp"
#include "critgw/est.hpp"
#include "critgw/harness.hpp"
#include "critgw/parallel.hpp"

namespace {

using critgw::ChainModel;
using critgw::ImmigrationLaw;
using critgw::OffspringLaw;
using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitMetricFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ModelFlags {
  double alpha = 0.5;
  std::optional<double> c;
  std::string offspring;  // "", "slack", "power-fractional"
  std::string immigration = "constant:1";

  void attach(CLI::App* app, bool with_immigration = true) {
    app->add_option("--alpha", alpha, "offspring tail parameter in (0,1)");
    app->add_option("--c", c, "slack constant; omitting it selects power-fractional");
    app->add_option("--offspring", offspring, "slack|power-fractional (overrides --c heuristic)");
    if (with_immigration)
      app->add_option("--immigration", immigration,
                      "constant:B | poisson:MEAN | geometric:P | sibuya:BETA");
  }

  OffspringLaw make_offspring() const {
    std::string kind = offspring;
    if (kind.empty()) kind = c.has_value() ? "slack" : "power-fractional";
    if (kind == "slack") {
      if (!c.has_value()) throw critgw::ConfigError("slack offspring needs --c");
      return OffspringLaw::slack(alpha, *c);
    }
    if (kind == "power-fractional") return OffspringLaw::power_fractional(alpha);
    throw critgw::ConfigError("unknown offspring kind " + kind);
  }

  ImmigrationLaw make_immigration() const {
    auto pos = immigration.find(':');
    if (pos == std::string::npos)
      throw critgw::ConfigError("immigration must look like kind:param");
    const std::string kind = immigration.substr(0, pos);
    const std::string arg = immigration.substr(pos + 1);
    try {
      if (kind == "constant") return ImmigrationLaw::constant(std::stoull(arg));
      if (kind == "poisson") return ImmigrationLaw::poisson(std::stod(arg));
      if (kind == "geometric") return ImmigrationLaw::geometric(std::stod(arg));
      if (kind == "sibuya") return ImmigrationLaw::sibuya(std::stod(arg));
    } catch (const std::invalid_argument&) {
      throw critgw::ConfigError("bad immigration parameter " + arg);
    }
    throw critgw::ConfigError("unknown immigration kind " + kind);
  }

  ChainModel make_model() const {
    return ChainModel(make_offspring(), make_immigration());
  }

  json echo() const {
    json j;
    j["alpha"] = alpha;
    if (c.has_value()) j["c"] = *c;
    j["immigration"] = immigration;
    return j;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw critgw::ConfigError("cannot open output file " + path);
  return out;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int dispatch(int argc, char** argv) {
  CLI::App app{"critical Galton-Watson chains with immigration: simulators, "
               "generating-function numerics and tail diagnostics"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "run a config-driven experiment");
  std::string config_path, out_dir = ".";
  double scale = 1.0;
  int threads = 0;
  run->add_option("--config", config_path, "experiment JSON file")->required();
  run->add_option("--scale", scale, "size multiplier for n/reps presets");
  run->add_option("--threads", threads, "worker threads (0: CRITGW_THREADS env, then hardware)");
  run->add_option("--out", out_dir, "output directory for report and CSV artifacts");

  auto* list = app.add_subcommand("list-experiments", "list experiment names");

  // ---- genfun ----
  auto* gf = app.add_subcommand("genfun", "generating-function numerics");
  gf->require_subcommand(1);

  ModelFlags phi_flags;
  auto* eval_phi = gf->add_subcommand("eval-phi", "stationary pgf at s");
  double phi_s = 0.5, phi_tol = 1e-6;
  phi_flags.attach(eval_phi);
  eval_phi->add_option("--s", phi_s, "evaluation point in [0,1)")->required();
  eval_phi->add_option("--tol", phi_tol, "truncation tolerance");

  ModelFlags fn_flags;
  auto* fn = gf->add_subcommand("fn", "n-fold offspring pgf iterate at s");
  std::uint64_t fn_n = 1;
  double fn_s = 0.5;
  fn_flags.attach(fn, /*with_immigration=*/false);
  fn->add_option("--n", fn_n, "iteration count")->required();
  fn->add_option("--s", fn_s, "evaluation point in [0,1]");

  ModelFlags fw_flags;
  auto* fw = gf->add_subcommand("fw-check", "stationarity integrability classifier");
  fw_flags.attach(fw);

  ModelFlags pmf_flags;
  auto* gpmf = gf->add_subcommand("pmf", "stationary pmf coefficients 0..K");
  std::uint64_t pmf_k = 8;
  double pmf_radius = 0.5;
  pmf_flags.attach(gpmf);
  gpmf->add_option("--K", pmf_k, "highest coefficient")->required();
  gpmf->add_option("--radius", pmf_radius, "inversion circle radius");

  // ---- sim ----
  auto* sim = app.add_subcommand("sim", "Monte Carlo engines (CSV output)");
  sim->require_subcommand(1);
  ModelFlags sim_flags;
  std::uint64_t sim_n = 100000, sim_burn = 10000, sim_stride = 1, sim_seed = 1;
  std::uint64_t sim_cap = critgw::kValueCap, sim_reps = 1000;
  std::string sim_out = "out.csv", sim_mode = "clan-sum";
  std::vector<double> sim_thresholds = {1e2, 1e3, 1e4};
  double sim_nu = 0.5;

  auto add_common = [&](CLI::App* cmd, bool imm = true) {
    sim_flags.attach(cmd, imm);
    cmd->add_option("--seed", sim_seed, "stream seed");
    cmd->add_option("--cap", sim_cap, "population cap (censoring)");
    cmd->add_option("--out", sim_out, "CSV output path");
  };

  auto* chain = sim->add_subcommand("chain", "stationary chain trajectory");
  add_common(chain);
  chain->add_option("--n", sim_n, "recorded steps");
  chain->add_option("--burn-in", sim_burn, "discarded steps");
  chain->add_option("--stride", sim_stride, "record every stride-th value");

  auto* progeny = sim->add_subcommand("progeny", "total progeny samples");
  add_common(progeny, /*imm=*/false);
  progeny->add_option("--reps", sim_reps, "replicates");

  auto* clan = sim->add_subcommand("clan", "immigrant clan totals");
  add_common(clan);
  clan->add_option("--reps", sim_reps, "replicates");

  auto* sums = sim->add_subcommand("sums", "partial-sum samples");
  add_common(sums);
  sums->add_option("--n", sim_n, "summands per sample");
  sums->add_option("--reps", sim_reps, "replicates");
  sums->add_option("--burn-in", sim_burn, "chain-mode burn-in");
  sums->add_option("--mode", sim_mode, "chain|clan-sum");

  auto* randsum = sim->add_subcommand("randsum", "random-sum tail table");
  add_common(randsum);
  randsum->add_option("--reps", sim_reps, "replicates");
  randsum->add_option("--nu", sim_nu, "integer-Pareto summand index");
  randsum->add_option("--thresholds", sim_thresholds, "survival thresholds");

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const std::string& name : critgw::list_experiments())
      std::cout << name << "\n";
    return kExitPass;
  }

  if (*run) {
    critgw::RunOptions opts;
    opts.scale = scale;
    opts.threads = threads;
    opts.out_dir = out_dir;
    critgw::Report report = critgw::run_experiment_file(config_path, opts);
    for (const critgw::Metric& m : report.metrics)
      std::printf("%-28s predicted=%-12.6g estimated=%-12.6g [%s] %s\n",
                  m.name.c_str(), m.predicted, m.estimated,
                  m.tolerance.c_str(), m.pass ? "pass" : "FAIL");
    std::printf("%s: %s (%.1fs)\n", report.experiment.c_str(),
                report.pass ? "PASS" : "FAIL", report.wall_clock_sec);
    return report.pass ? kExitPass : kExitMetricFail;
  }

  if (*eval_phi) {
    ChainModel model = phi_flags.make_model();
    double value = critgw::stationary_pgf(model, phi_s, phi_tol);
    emit({{"input", {{"s", phi_s}, {"tol", phi_tol}, {"model", phi_flags.echo()}}},
          {"value", value},
          {"error_bound", phi_tol}});
    return kExitPass;
  }
  if (*fn) {
    OffspringLaw off = fn_flags.make_offspring();
    double value = critgw::iterate_f(off, fn_s, fn_n);
    emit({{"input", {{"s", fn_s}, {"n", fn_n}, {"model", fn_flags.echo()}}},
          {"value", value},
          {"error_bound", 1e-12}});
    return kExitPass;
  }
  if (*fw) {
    ChainModel model = fw_flags.make_model();
    critgw::FwResult res = critgw::fw_check(model);
    emit({{"input", {{"model", fw_flags.echo()}}},
          {"value", res.classification == critgw::Integrability::Finite
                        ? "finite" : "infinite"},
          {"exponent", res.exponent},
          {"well_conditioned", res.well_conditioned}});
    return kExitPass;
  }
  if (*gpmf) {
    ChainModel model = pmf_flags.make_model();
    auto phi = [&](std::complex<double> s) {
      return critgw::stationary_pgf(model, s, 1e-6);
    };
    critgw::PmfExtraction ext =
        critgw::pgf_to_pmf(phi, pmf_k, pmf_radius, 64, 1e-6);
    emit({{"input", {{"K", pmf_k}, {"radius", pmf_radius}, {"model", pmf_flags.echo()}}},
          {"value", ext.pmf},
          {"error_bound", ext.error_bound}});
    return kExitPass;
  }

  if (*chain) {
    ChainModel model = sim_flags.make_model();
    critgw::Trajectory traj = critgw::run_chain(
        model, sim_n, sim_burn, critgw::seed_stream(sim_seed, 0), sim_cap, sim_stride);
    auto out = open_out(sim_out);
    out << "index,value\n";
    for (std::size_t i = 0; i < traj.values.size(); ++i)
      out << i * sim_stride << "," << traj.values[i] << "\n";
    std::cerr << "wrote " << traj.values.size() << " rows to " << sim_out
              << (traj.censored ? " (censored)" : "") << "\n";
    return kExitPass;
  }
  if (*progeny || *clan) {
    auto out = open_out(sim_out);
    out << "rep,value,censored\n";
    if (*progeny) {
      OffspringLaw off = sim_flags.make_offspring();
      for (std::uint64_t r = 0; r < sim_reps; ++r) {
        critgw::RngStream rng(sim_seed, r);
        critgw::CensoredSample s = critgw::sample_total_progeny(off, sim_cap, rng);
        out << r << "," << s.value << "," << (s.censored ? 1 : 0) << "\n";
      }
    } else {
      ChainModel model = sim_flags.make_model();
      for (std::uint64_t r = 0; r < sim_reps; ++r) {
        critgw::RngStream rng(sim_seed, r);
        critgw::CensoredSample s = critgw::sample_clan(model, sim_cap, rng);
        out << r << "," << s.value << "," << (s.censored ? 1 : 0) << "\n";
      }
    }
    return kExitPass;
  }
  if (*sums) {
    ChainModel model = sim_flags.make_model();
    critgw::PartialSumSpec spec;
    spec.n = sim_n;
    spec.mode = sim_mode == "chain" ? critgw::SumMode::Chain : critgw::SumMode::ClanSum;
    spec.reps = sim_reps;
    spec.seed = sim_seed;
    spec.cap = sim_cap;
    spec.burn_in = sim_burn;
    spec.threads = 0;
    auto samples = critgw::sample_partial_sum(model, spec);
    auto out = open_out(sim_out);
    out << "rep,value,censored\n";
    for (std::size_t r = 0; r < samples.size(); ++r)
      out << r << "," << samples[r].value << "," << (samples[r].censored ? 1 : 0) << "\n";
    return kExitPass;
  }
  if (*randsum) {
    ImmigrationLaw tau = sim_flags.make_immigration();
    critgw::ParetoIntLaw y{sim_nu};
    auto rows = critgw::verify_random_sum_tail(tau, y, sim_reps, sim_thresholds, sim_seed);
    auto out = open_out(sim_out);
    out << "threshold,empirical,predicted,ratio,n_effective\n";
    for (const auto& row : rows)
      out << row.threshold << "," << row.empirical << "," << row.predicted << ","
          << row.ratio << "," << row.n_effective << "\n";
    return kExitPass;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const critgw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const critgw::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const critgw::InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << "\n";
    return kExitData;
  } catch (const critgw::BudgetExceeded& e) {
    std::cerr << "insufficient data: " << e.what()
              << " (partial=" << e.partial_value << ")\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
