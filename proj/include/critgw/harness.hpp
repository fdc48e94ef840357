#ifndef CRITGW_HARNESS_HPP
#define CRITGW_HARNESS_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "critgw/est.hpp"
#include "critgw/genfun.hpp"
#include "critgw/rng.hpp"
#include "critgw/sim.hpp"

namespace critgw {

inline constexpr const char* kVersion = "critgw 0.1.0";

/// One pass/fail row of a report.  pass is computed only from the numbers
/// stored in the row itself, so reports stay auditable after the fact.
struct Metric {
  std::string name;
  double predicted = 0.0;
  double estimated = 0.0;
  std::string tolerance;  // human-readable rule, e.g. "abs 0.05"
  bool pass = false;
  std::string claim;  // the theoretical statement this row checks
};

struct Report {
  std::string experiment;
  nlohmann::json config_echo;
  std::vector<Metric> metrics;
  bool pass = false;
  double wall_clock_sec = 0.0;
  std::string version = kVersion;
  std::vector<std::string> artifacts;  // files written next to the report

  nlohmann::json to_json() const;
};

struct RunOptions {
  double scale = 1.0;   // multiplies n/reps-type sizes
  int threads = 0;      // 0: CRITGW_THREADS env, then hardware
  std::string out_dir = ".";
  bool write_artifacts = true;
};

/// Named experiments, one config file each.  Throws ConfigError on invalid
/// configs and InsufficientData when censoring/exceedance counts make the
/// requested estimate impossible.
Report run_experiment(const nlohmann::json& config, const RunOptions& opts = {});
Report run_experiment_file(const std::string& path, const RunOptions& opts = {});

std::vector<std::string> list_experiments();

/// Counter-based stream factory (the only RNG entry point experiments use).
RngStream seed_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Law/model parsing for the JSON config schema, shared with the CLI:
/// {"offspring": {"kind": "slack", "alpha": 0.5, "c": 0.6667},
///  "immigration": {"kind": "sibuya", "beta": 0.8}}
OffspringLaw offspring_from_json(const nlohmann::json& spec);
ImmigrationLaw immigration_from_json(const nlohmann::json& spec);
ChainModel model_from_json(const nlohmann::json& spec);

}  // namespace critgw

#endif  // CRITGW_HARNESS_HPP
