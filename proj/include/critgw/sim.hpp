#ifndef CRITGW_SIM_HPP
#define CRITGW_SIM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "critgw/genfun.hpp"
#include "critgw/rng.hpp"

namespace critgw {

/// Simulated value truncated at a cap; when censored the value is only a
/// lower bound, usable in survival estimates at thresholds below the cap.
struct CensoredSample {
  std::uint64_t value = 0;
  bool censored = false;
};

/// Online summaries over every post-burn-in step (independent of stride).
struct StreamStats {
  std::uint64_t steps = 0;
  std::uint64_t max_value = 0;
  unsigned __int128 sum = 0;
};

struct Trajectory {
  std::vector<std::uint64_t> values;  // recorded every `stride` steps
  std::uint64_t burn_in = 0;
  std::uint64_t stride = 1;
  bool censored = false;  // some population hit the cap; path truncated there
  StreamStats stats;
};

/// One chain transition: x offspring draws summed plus one immigration
/// draw.  Saturates at cap (never wraps) and reports censoring.
std::uint64_t step(std::uint64_t x, const ChainModel& model, RngStream& rng,
                   std::uint64_t cap, bool* censored);

/// Runs the chain from the atom k0, discards burn_in steps, then records n
/// steps (every stride-th value).  Deterministic given (model, rng state).
Trajectory run_chain(const ChainModel& model, std::uint64_t n,
                     std::uint64_t burn_in, RngStream rng,
                     std::uint64_t cap = kValueCap, std::uint64_t stride = 1);

/// Total progeny of a single-ancestor critical tree, sampled as the first
/// hitting time of 0 by the depth-first exploration walk W -> W + A - 1:
/// O(T) time, O(1) memory.  Censors at cap walk steps.
CensoredSample sample_total_progeny(const OffspringLaw& offspring,
                                    std::uint64_t cap, RngStream& rng);

/// Total size of one immigrant clan: B independent total progenies.
CensoredSample sample_clan(const ChainModel& model, std::uint64_t cap,
                           RngStream& rng);

enum class SumMode {
  Chain,    // sum of a stationary trajectory of length n
  ClanSum,  // sum of n iid clan totals (the dominant term of the partial sum)
};

struct PartialSumSpec {
  std::uint64_t n = 1;
  SumMode mode = SumMode::ClanSum;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_offset = 0;  // first stream id used (one per replicate)
  std::uint64_t cap = kValueCap;
  std::uint64_t burn_in = 10'000;  // chain mode only
  int threads = 1;
};

/// reps independent samples of S_n, one RNG stream per replicate.
std::vector<CensoredSample> sample_partial_sum(const ChainModel& model,
                                               const PartialSumSpec& spec);

/// Integer Pareto law: P(Y > k) = k^(-nu) exactly at integers k >= 1.
struct ParetoIntLaw {
  double nu = 0.5;
  std::uint64_t sample(RngStream& rng) const;
  double survival(double x) const;
};

struct SurvivalRow {
  double threshold = 0.0;
  double empirical = 0.0;
  double predicted = 0.0;
  double ratio = 0.0;  // empirical / predicted
  std::uint64_t n_effective = 0;
};

/// Monte Carlo check of the random-sum tail P(sum_{i<=tau} Y_i > x):
/// predicted E[tau] P(Y > x) when tau has finite mean, and
/// Gamma(1-nu)^mu / Gamma(1-mu nu) x^(-mu nu) when tau is Sibuya(mu).
std::vector<SurvivalRow> verify_random_sum_tail(const ImmigrationLaw& tau_law,
                                                const ParetoIntLaw& y_law,
                                                std::size_t reps,
                                                std::span<const double> thresholds,
                                                std::uint64_t seed);

}  // namespace critgw

#endif  // CRITGW_SIM_HPP
