#include "critgw/sim.hpp"

#include <algorithm>
#include <cmath>

#include "critgw/errors.hpp"
#include "critgw/parallel.hpp"

namespace critgw {

namespace {

// Register-resident copy of the sampler head so the offspring summation
// loop does not reload thresholds through the table pointer every draw.
struct HotSampler {
  std::uint64_t h0, h1, h2, h3, h4, h5, h6;
  const DiscreteSampler* slow;

  explicit HotSampler(const DiscreteSampler& s) : slow(&s) {
    const std::uint64_t* h = s.head();
    h0 = h[0]; h1 = h[1]; h2 = h[2]; h3 = h[3]; h4 = h[4]; h5 = h[5]; h6 = h[6];
  }

  std::uint64_t scan(std::uint64_t u) const {
    std::uint64_t k = static_cast<std::uint64_t>(u >= h0);
    k += u >= h1;
    k += u >= h2;
    k += u >= h3;
    k += u >= h4;
    k += u >= h5;
    k += u >= h6;
    return k;
  }

  std::uint64_t draw(RngStream& rng) const {
    const std::uint64_t u = rng.next_u64();
    const std::uint64_t k = scan(u);
    if (k == 7) [[unlikely]]
      return slow->residual(u, rng);
    return k;
  }
};

// cap and every draw are <= kValueCap = 2^62, so the running sums below
// cannot wrap before their checks fire.
std::uint64_t step_hot(std::uint64_t x, const HotSampler& off,
                       const DiscreteSampler& imm, RngStream& rng,
                       std::uint64_t cap, bool* censored) {
  std::uint64_t sum = imm(rng);
  for (std::uint64_t i = 0; i < x; ++i) {
    sum += off.draw(rng);
    if (sum >= cap) {
      if (censored) *censored = true;
      return cap;
    }
  }
  if (sum >= cap) {
    if (censored) *censored = true;
    return cap;
  }
  return sum;
}

std::uint64_t progeny_hot(const HotSampler& off, std::uint64_t cap,
                          RngStream& rng, bool* censored) {
  std::uint64_t pending = 1;  // Z_0: the single ancestor
  std::uint64_t visited = 0;
  while (pending > 0) {
    if (visited >= cap) {
      *censored = true;
      return cap;
    }
    ++visited;
    pending = pending - 1 + off.draw(rng);
    if (pending > kValueCap) pending = kValueCap;  // already censored territory
  }
  return visited;
}

}  // namespace

std::uint64_t step(std::uint64_t x, const ChainModel& model, RngStream& rng,
                   std::uint64_t cap, bool* censored) {
  const HotSampler off(model.offspring().sampler());
  return step_hot(x, off, model.immigration().sampler(), rng, cap, censored);
}

Trajectory run_chain(const ChainModel& model, std::uint64_t n,
                     std::uint64_t burn_in, RngStream rng, std::uint64_t cap,
                     std::uint64_t stride) {
  if (n < 1) throw ParameterError("run_chain: n must be >= 1");
  if (stride < 1) throw ParameterError("run_chain: stride must be >= 1");
  if (cap > kValueCap) throw ParameterError("run_chain: cap above 2^62");

  Trajectory out;
  out.burn_in = burn_in;
  out.stride = stride;
  out.values.reserve(static_cast<std::size_t>(n / stride) + 1);

  const HotSampler off(model.offspring().sampler());
  const DiscreteSampler& imm = model.immigration().sampler();
  std::uint64_t x = model.atom();
  bool cens = false;
  for (std::uint64_t t = 0; t < burn_in && !cens; ++t)
    x = step_hot(x, off, imm, rng, cap, &cens);
  for (std::uint64_t t = 0; t < n && !cens; ++t) {
    x = step_hot(x, off, imm, rng, cap, &cens);
    ++out.stats.steps;
    out.stats.sum += x;
    out.stats.max_value = std::max(out.stats.max_value, x);
    if (t % stride == 0) out.values.push_back(x);
  }
  out.censored = cens;
  return out;
}

CensoredSample sample_total_progeny(const OffspringLaw& offspring,
                                    std::uint64_t cap, RngStream& rng) {
  if (cap < 1) throw ParameterError("sample_total_progeny: cap must be >= 1");
  const HotSampler off(offspring.sampler());
  bool cens = false;
  std::uint64_t t = progeny_hot(off, cap, rng, &cens);
  return {t, cens};
}

CensoredSample sample_clan(const ChainModel& model, std::uint64_t cap,
                           RngStream& rng) {
  const std::uint64_t b = model.immigration().sample(rng);
  if (b >= cap) return {cap, true};  // each progeny is >= 1
  const HotSampler off(model.offspring().sampler());
  std::uint64_t total = 0;
  bool cens = false;
  for (std::uint64_t j = 0; j < b; ++j) {
    total += progeny_hot(off, cap, rng, &cens);
    if (total >= cap) return {cap, true};
  }
  return {total, cens};
}

std::vector<CensoredSample> sample_partial_sum(const ChainModel& model,
                                               const PartialSumSpec& spec) {
  if (spec.n < 1) throw ParameterError("sample_partial_sum: n must be >= 1");
  if (spec.reps < 1) throw ParameterError("sample_partial_sum: reps must be >= 1");
  if (spec.cap > kValueCap)
    throw ParameterError("sample_partial_sum: cap above 2^62");

  std::vector<CensoredSample> out(spec.reps);
  parallel_for(spec.reps, spec.threads, [&](std::size_t r) {
    RngStream rng(spec.seed, spec.stream_offset + r);
    std::uint64_t total = 0;
    bool cens = false;
    if (spec.mode == SumMode::Chain) {
      const HotSampler off(model.offspring().sampler());
      const DiscreteSampler& imm = model.immigration().sampler();
      std::uint64_t x = model.atom();
      for (std::uint64_t t = 0; t < spec.burn_in && !cens; ++t)
        x = step_hot(x, off, imm, rng, spec.cap, &cens);
      for (std::uint64_t t = 0; t < spec.n && !cens; ++t) {
        x = step_hot(x, off, imm, rng, spec.cap, &cens);
        total += x;
        if (total >= spec.cap) {
          total = spec.cap;
          cens = true;
        }
      }
    } else {
      for (std::uint64_t j = 0; j < spec.n; ++j) {
        CensoredSample u = sample_clan(model, spec.cap, rng);
        cens |= u.censored;
        total += u.value;
        if (total >= spec.cap) {
          total = spec.cap;
          cens = true;
          break;
        }
      }
    }
    out[r] = {total, cens};
  });
  return out;
}

std::uint64_t ParetoIntLaw::sample(RngStream& rng) const {
  const double v = rng.next_open();
  const double x = std::pow(v, -1.0 / nu);
  if (x >= static_cast<double>(kValueCap)) return kValueCap;
  return static_cast<std::uint64_t>(std::ceil(x));
}

double ParetoIntLaw::survival(double x) const {
  return x < 1.0 ? 1.0 : std::pow(x, -nu);
}

std::vector<SurvivalRow> verify_random_sum_tail(const ImmigrationLaw& tau_law,
                                                const ParetoIntLaw& y_law,
                                                std::size_t reps,
                                                std::span<const double> thresholds,
                                                std::uint64_t seed) {
  if (reps < 1) throw ParameterError("verify_random_sum_tail: reps must be >= 1");
  if (!(y_law.nu > 0.0 && y_law.nu < 1.0))
    throw ParameterError("verify_random_sum_tail: nu must be in (0,1)");

  std::vector<double> thr(thresholds.begin(), thresholds.end());
  std::sort(thr.begin(), thr.end());
  const double top = thr.empty() ? 0.0 : thr.back();

  std::vector<std::uint64_t> exceed(thr.size(), 0);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng(seed, r);
    const std::uint64_t tau = tau_law.sample(rng);
    double sum = 0.0;
    for (std::uint64_t i = 0; i < tau; ++i) {
      sum += static_cast<double>(y_law.sample(rng));
      if (sum > top) break;  // counts are exact for every listed threshold
    }
    for (std::size_t t = 0; t < thr.size() && sum > thr[t]; ++t) ++exceed[t];
  }

  const bool heavy = tau_law.heavy_tailed();
  const double mu = tau_law.parameter();
  const double nu = y_law.nu;
  const double heavy_const =
      heavy ? std::pow(std::tgamma(1.0 - nu), mu) / std::tgamma(1.0 - mu * nu)
            : 0.0;

  std::vector<SurvivalRow> rows(thr.size());
  for (std::size_t t = 0; t < thr.size(); ++t) {
    SurvivalRow& row = rows[t];
    row.threshold = thr[t];
    row.n_effective = reps;
    row.empirical = static_cast<double>(exceed[t]) / static_cast<double>(reps);
    row.predicted = heavy
                        ? heavy_const * std::pow(thr[t], -mu * nu)
                        : tau_law.mean() * y_law.survival(thr[t]);
    row.ratio = row.predicted > 0.0 ? row.empirical / row.predicted : 0.0;
  }
  return rows;
}

}  // namespace critgw
