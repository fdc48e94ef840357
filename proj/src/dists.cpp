#include "critgw/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "critgw/errors.hpp"
#include "critgw/numeric.hpp"

namespace critgw {

namespace {

constexpr double kTwo64 = 18446744073709551616.0;  // 2^64

// Cumulative thresholds scaled to 2^64, accumulated in long double.
std::vector<std::uint64_t> build_thresholds(const std::vector<double>& pmf,
                                            double* coverage) {
  std::vector<std::uint64_t> cum(pmf.size());
  long double acc = 0.0L;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    acc += static_cast<long double>(pmf[k]);
    long double t = acc * static_cast<long double>(kTwo64);
    cum[k] = t >= static_cast<long double>(kTwo64)
                 ? std::numeric_limits<std::uint64_t>::max()
                 : static_cast<std::uint64_t>(t);
  }
  *coverage = static_cast<double>(acc);
  return cum;
}

// min{k >= lo : surv(k) <= target}, surv nonincreasing.  Doubles the upper
// bracket, then bisects on integers.  Saturates at kValueCap.
std::uint64_t invert_survival(const std::function<double(std::uint64_t)>& surv,
                              std::uint64_t lo, double target) {
  if (surv(lo) <= target) return lo;
  std::uint64_t hi = lo < 16 ? 32 : lo * 2;
  while (surv(hi) > target) {
    if (hi >= kValueCap / 2) return kValueCap;
    hi *= 2;
  }
  // invariant: surv(lo) > target >= surv(hi)
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (surv(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

double lg(double x) { return std::lgamma(x); }

}  // namespace

DiscreteSampler::DiscreteSampler(const std::vector<double>& pmf,
                                 TailInverter tail)
    : tail_(std::move(tail)) {
  cum_ = build_thresholds(pmf, &coverage_);
  const std::uint64_t last = cum_.back();
  for (std::size_t i = 0; i < 7; ++i)
    head_[i] = i < cum_.size() ? cum_[i] : last;
}

std::uint64_t DiscreteSampler::sample_slow(std::uint64_t u,
                                           RngStream& rng) const {
  if (u < cum_.back()) {
    auto it = std::upper_bound(cum_.begin() + std::min<std::size_t>(7, cum_.size() - 1),
                               cum_.end(), u);
    return static_cast<std::uint64_t>(it - cum_.begin());
  }
  if (!tail_) return cum_.size() - 1;
  // Fresh uniform for the conditional law beyond the table; keeps full
  // resolution in the extreme tail instead of reusing the exhausted u.
  return tail_(rng.next_open());
}

// ---------------------------------------------------------------------------
// Offspring laws

struct OffspringLaw::Data {
  Kind kind;
  double alpha = 0.0;
  double c = 0.0;
  std::vector<double> pf_pmf;       // PowerFractional only
  double pf_tail_start_surv = 0.0;  // P(A > table_end)
  std::uint64_t pf_table_end = 0;
};

namespace {

// Slack pmf: p0 = c, p1 = 1 - c(1+a), p2 = c(1+a)a/2, then the ratio
// recursion p_{k+1} = p_k (k-1-a)/(k+1).
double slack_pmf(double a, double c, std::uint64_t k) {
  if (k == 0) return c;
  if (k == 1) return 1.0 - c * (1.0 + a);
  if (k == 2) return c * (1.0 + a) * a / 2.0;
  double kk = static_cast<double>(k);
  return c * (1.0 + a) * a *
         std::exp(lg(kk - 1.0 - a) - lg(1.0 - a) - lg(kk + 1.0));
}

// P(A > k) = c * a * Gamma(k-a) / (Gamma(1-a) k!)  for k >= 1.
double slack_survival(double a, double c, std::uint64_t k) {
  if (k == 0) return 1.0 - c;
  double kk = static_cast<double>(k);
  return c * a * std::exp(lg(kk - a) - lg(1.0 - a) - lg(kk + 1.0));
}

// Power-fractional pmf by series inversion of the closed-form pgf: with
// y(s) = 1 + (1-s)^(-alpha) the tail series is 1 - f = y^(-1/alpha), and
// the power of a series obeys the J.C.P. Miller recursion.  O(n^2), done
// once per law.
std::vector<double> pf_pmf_table(double alpha, std::size_t n) {
  const double p = -1.0 / alpha;
  std::vector<double> y(n), w(n);
  y[0] = 2.0;
  double d = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    d *= (static_cast<double>(k) - 1.0 + alpha) / static_cast<double>(k);
    y[k] = d;
  }
  w[0] = std::pow(2.0, p);
  for (std::size_t k = 1; k < n; ++k) {
    double acc = 0.0;
    const double kk = static_cast<double>(k);
    for (std::size_t m = 1; m <= k; ++m)
      acc += ((p + 1.0) * static_cast<double>(m) - kk) * y[m] * w[k - m];
    w[k] = acc / (2.0 * kk);
  }
  std::vector<double> pmf(n);
  pmf[0] = 1.0 - w[0];
  for (std::size_t k = 1; k < n; ++k) pmf[k] = std::max(0.0, -w[k]);
  return pmf;
}

}  // namespace

OffspringLaw::OffspringLaw(std::shared_ptr<const Data> data,
                           std::shared_ptr<const DiscreteSampler> sampler)
    : data_(std::move(data)), sampler_(std::move(sampler)) {}

OffspringLaw OffspringLaw::slack(double alpha, double c) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ParameterError("slack: alpha must be in (0,1)");
  const double c_max = 1.0 / (1.0 + alpha);
  // configs often carry the boundary rounded to a few digits (e.g. 0.6667
  // for alpha = 1/2); clamp anything within 0.1% of the maximum
  if (c > c_max && c <= c_max * 1.001) c = c_max;
  if (!(c > 0.0 && c <= c_max))
    throw ParameterError("slack: c must be in (0, 1/(1+alpha)]; larger c makes p_1 negative");

  auto data = std::make_shared<Data>();
  data->kind = Kind::Slack;
  data->alpha = alpha;
  data->c = c;

  // Body table to tail probability <= 2^-20 (caps at 2^21 entries; the
  // closed-form survival inverter is exact beyond it either way).
  std::vector<double> pmf;
  pmf.reserve(1024);
  double pk = c;
  long double tail = 1.0L;
  for (std::uint64_t k = 0; pmf.size() < (1u << 21); ++k) {
    if (k == 1)
      pk = 1.0 - c * (1.0 + alpha);
    else if (k == 2)
      pk = c * (1.0 + alpha) * alpha / 2.0;
    else if (k >= 3)
      pk *= (static_cast<double>(k) - 2.0 - alpha) / static_cast<double>(k);
    pmf.push_back(pk);
    tail -= pk;
    if (k >= 2 && tail <= 0x1.0p-20L) break;
  }

  DiscreteSampler::TailInverter inv = [alpha, c, end = pmf.size() - 1](double v) {
    const double s_end = slack_survival(alpha, c, end);
    return invert_survival(
        [alpha, c](std::uint64_t k) { return slack_survival(alpha, c, k); },
        end, v * s_end);
  };
  auto sampler = std::make_shared<DiscreteSampler>(pmf, std::move(inv));
  return OffspringLaw(std::move(data), std::move(sampler));
}

OffspringLaw OffspringLaw::power_fractional(double alpha,
                                            std::size_t pmf_table_size) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ParameterError("power_fractional: alpha must be in (0,1)");
  if (pmf_table_size < 64)
    throw ParameterError("power_fractional: pmf table too small");

  auto data = std::make_shared<Data>();
  data->kind = Kind::PowerFractional;
  data->alpha = alpha;
  data->pf_pmf = pf_pmf_table(alpha, pmf_table_size);

  long double acc = 0.0L;
  for (double p : data->pf_pmf) acc += p;
  data->pf_tail_start_surv = static_cast<double>(1.0L - acc);
  data->pf_table_end = pmf_table_size - 1;

  // Beyond the series table the conditional tail is inverted as a discrete
  // power law with the exact exponent 1+alpha anchored at the table edge;
  // the relative pmf error there is the next-order term O(k^-alpha) of the
  // survival expansion, at a per-draw probability below 1e-6.
  const double expo = 1.0 + alpha;
  const std::uint64_t end = data->pf_table_end;
  DiscreteSampler::TailInverter inv = [expo, end](double v) {
    double kreal = static_cast<double>(end) * std::pow(v, -1.0 / expo);
    if (kreal >= static_cast<double>(kValueCap)) return kValueCap;
    auto k = static_cast<std::uint64_t>(std::ceil(kreal));
    return std::max(k, end + 1);
  };
  auto sampler = std::make_shared<DiscreteSampler>(data->pf_pmf, std::move(inv));
  return OffspringLaw(std::move(data), std::move(sampler));
}

OffspringLaw::Kind OffspringLaw::kind() const { return data_->kind; }
double OffspringLaw::alpha() const { return data_->alpha; }

double OffspringLaw::c() const {
  if (data_->kind != Kind::Slack)
    throw ParameterError("c() is defined for the Slack family only");
  return data_->c;
}

double OffspringLaw::ell_a() const {
  return data_->kind == Kind::Slack ? data_->c : 1.0 / data_->alpha;
}

double OffspringLaw::pmf(std::uint64_t k) const {
  if (data_->kind == Kind::Slack) return slack_pmf(data_->alpha, data_->c, k);
  if (k < data_->pf_pmf.size()) return data_->pf_pmf[k];
  // Anchored tail, consistent with the sampler.
  return survival(k - 1) - survival(k);
}

double OffspringLaw::one_minus_pgf_u(double u) const {
  if (u <= 0.0) return 0.0;
  const double a = data_->alpha;
  if (data_->kind == Kind::Slack) return u - data_->c * std::pow(u, 1.0 + a);
  if (a == 0.5) {  // (1 + u^(1/2))^(-2) in closed form
    const double t = 1.0 + std::sqrt(u);
    return u / (t * t);
  }
  return u * std::exp(-std::log1p(std::pow(u, a)) / a);
}

std::complex<double> OffspringLaw::one_minus_pgf_u(std::complex<double> u) const {
  if (u == std::complex<double>(0.0, 0.0)) return {0.0, 0.0};
  const double a = data_->alpha;
  if (data_->kind == Kind::Slack)
    return u - data_->c * std::exp((1.0 + a) * std::log(u));
  std::complex<double> ua = std::exp(a * std::log(u));
  return u * std::exp(-log1p_c(ua) / a);
}

double OffspringLaw::pgf(double s) const {
  if (s < 0.0 || s > 1.0) throw ParameterError("pgf: s must be in [0,1]");
  return 1.0 - one_minus_pgf_u(1.0 - s);
}

std::complex<double> OffspringLaw::pgf(std::complex<double> s) const {
  return 1.0 - one_minus_pgf_u(1.0 - s);
}

double OffspringLaw::drift_u(double u) const {
  if (u <= 0.0) return 0.0;
  if (data_->kind == Kind::Slack)
    return data_->c * std::pow(u, 1.0 + data_->alpha);
  const double a = data_->alpha;
  return u * -std::expm1(-std::log1p(std::pow(u, a)) / a);
}

double OffspringLaw::survival(std::uint64_t k) const {
  if (data_->kind == Kind::Slack)
    return slack_survival(data_->alpha, data_->c, k);
  if (k >= data_->pf_table_end) {
    double ratio = static_cast<double>(k) / static_cast<double>(data_->pf_table_end);
    return data_->pf_tail_start_surv * std::pow(ratio, -(1.0 + data_->alpha));
  }
  long double acc = 0.0L;
  for (std::uint64_t j = 0; j <= k; ++j) acc += data_->pf_pmf[j];
  return static_cast<double>(1.0L - acc);
}

std::string OffspringLaw::describe() const {
  std::ostringstream os;
  if (data_->kind == Kind::Slack)
    os << "slack(alpha=" << data_->alpha << ", c=" << data_->c << ")";
  else
    os << "power-fractional(alpha=" << data_->alpha << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Immigration laws

struct ImmigrationLaw::Data {
  Kind kind;
  double param = 0.0;
  std::uint64_t b = 0;  // Constant
};

namespace {

double sibuya_survival(double beta, std::uint64_t k) {
  if (k == 0) return 1.0;
  double kk = static_cast<double>(k);
  return std::exp(lg(kk + 1.0 - beta) - lg(1.0 - beta) - lg(kk + 1.0));
}

double sibuya_pmf(double beta, std::uint64_t k) {
  if (k == 0) return 0.0;
  if (k == 1) return beta;
  double kk = static_cast<double>(k);
  return beta * std::exp(lg(kk - beta) - lg(1.0 - beta) - lg(kk + 1.0));
}

}  // namespace

ImmigrationLaw::ImmigrationLaw(std::shared_ptr<const Data> data,
                               std::shared_ptr<const DiscreteSampler> sampler)
    : data_(std::move(data)), sampler_(std::move(sampler)) {}

ImmigrationLaw ImmigrationLaw::constant(std::uint64_t b) {
  auto data = std::make_shared<Data>();
  data->kind = Kind::Constant;
  data->b = b;
  data->param = static_cast<double>(b);
  std::vector<double> pmf(b + 1, 0.0);
  pmf[b] = 1.0;
  auto sampler = std::make_shared<DiscreteSampler>(
      pmf, [b](double) { return b; });
  return ImmigrationLaw(std::move(data), std::move(sampler));
}

ImmigrationLaw ImmigrationLaw::poisson(double mean) {
  if (!(mean > 0.0)) throw ParameterError("poisson: mean must be > 0");
  auto data = std::make_shared<Data>();
  data->kind = Kind::Poisson;
  data->param = mean;

  std::vector<double> pmf;
  double pk = std::exp(-mean);
  long double tail = 1.0L;
  for (std::uint64_t k = 0;; ++k) {
    if (k > 0) pk *= mean / static_cast<double>(k);
    pmf.push_back(pk);
    tail -= pk;
    if (k > static_cast<std::uint64_t>(mean) + 8 && tail <= 0x1.0p-70L) break;
  }
  // Table already covers everything a 64-bit uniform can resolve; the
  // inverter continues the ratio recursion for the 2^-64 sliver.
  const auto end = static_cast<std::uint64_t>(pmf.size() - 1);
  double s_end = static_cast<double>(tail);
  double p_end = pmf.back();
  DiscreteSampler::TailInverter inv = [mean, end, s_end, p_end](double v) {
    double target = v * s_end;
    double s = s_end, p = p_end;
    std::uint64_t k = end;
    while (s > target && k < end + 512) {
      ++k;
      p *= mean / static_cast<double>(k);
      s -= p;
    }
    return k;
  };
  auto sampler = std::make_shared<DiscreteSampler>(pmf, std::move(inv));
  return ImmigrationLaw(std::move(data), std::move(sampler));
}

ImmigrationLaw ImmigrationLaw::geometric(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("geometric: p must be in (0,1)");
  auto data = std::make_shared<Data>();
  data->kind = Kind::Geometric;
  data->param = p;

  std::vector<double> pmf;
  double pk = p;
  long double tail = 1.0L;
  for (std::uint64_t k = 0; k < 4096; ++k) {
    pmf.push_back(pk);
    tail -= pk;
    pk *= 1.0 - p;
    if (tail <= 0x1.0p-70L) break;
  }
  const auto end = static_cast<std::uint64_t>(pmf.size() - 1);
  const double log_q = std::log1p(-p);
  DiscreteSampler::TailInverter inv = [p, end, log_q](double v) {
    // S(k) = (1-p)^(k+1)
    double s_end = std::exp(static_cast<double>(end + 1) * log_q);
    double k = std::ceil(std::log(v * s_end) / log_q - 1.0);
    if (k >= static_cast<double>(kValueCap)) return kValueCap;
    return std::max(static_cast<std::uint64_t>(k), end + 1);
  };
  auto sampler = std::make_shared<DiscreteSampler>(pmf, std::move(inv));
  return ImmigrationLaw(std::move(data), std::move(sampler));
}

ImmigrationLaw ImmigrationLaw::sibuya(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("sibuya: beta must be in (0,1)");
  auto data = std::make_shared<Data>();
  data->kind = Kind::Sibuya;
  data->param = beta;

  std::vector<double> pmf;
  pmf.reserve(1u << 16);
  pmf.push_back(0.0);
  double pk = beta;
  long double tail = 1.0L;
  for (std::uint64_t k = 1; pmf.size() < (1u << 21); ++k) {
    if (k > 1) pk *= (static_cast<double>(k) - 1.0 - beta) / static_cast<double>(k);
    pmf.push_back(pk);
    tail -= pk;
    if (tail <= 0x1.0p-20L) break;
  }
  DiscreteSampler::TailInverter inv = [beta, end = pmf.size() - 1](double v) {
    const double s_end = sibuya_survival(beta, end);
    return invert_survival(
        [beta](std::uint64_t k) { return sibuya_survival(beta, k); },
        end, v * s_end);
  };
  auto sampler = std::make_shared<DiscreteSampler>(pmf, std::move(inv));
  return ImmigrationLaw(std::move(data), std::move(sampler));
}

ImmigrationLaw::Kind ImmigrationLaw::kind() const { return data_->kind; }
double ImmigrationLaw::parameter() const { return data_->param; }

double ImmigrationLaw::mean() const {
  switch (data_->kind) {
    case Kind::Constant: return data_->param;
    case Kind::Poisson: return data_->param;
    case Kind::Geometric: return (1.0 - data_->param) / data_->param;
    case Kind::Sibuya: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

std::uint64_t ImmigrationLaw::min_support() const {
  switch (data_->kind) {
    case Kind::Constant: return data_->b;
    case Kind::Sibuya: return 1;
    default: return 0;
  }
}

bool ImmigrationLaw::heavy_tailed() const { return data_->kind == Kind::Sibuya; }

std::optional<TailParams> ImmigrationLaw::tail_params() const {
  if (data_->kind != Kind::Sibuya) return std::nullopt;
  const double beta = data_->param;
  return TailParams{beta, 1.0 / std::tgamma(1.0 - beta)};
}

double ImmigrationLaw::pmf(std::uint64_t k) const {
  switch (data_->kind) {
    case Kind::Constant:
      return k == data_->b ? 1.0 : 0.0;
    case Kind::Poisson: {
      double kk = static_cast<double>(k);
      return std::exp(-data_->param + kk * std::log(data_->param) - lg(kk + 1.0));
    }
    case Kind::Geometric:
      return data_->param * std::exp(static_cast<double>(k) * std::log1p(-data_->param));
    case Kind::Sibuya:
      return sibuya_pmf(data_->param, k);
  }
  return 0.0;
}

double ImmigrationLaw::one_minus_pgf_u(double u) const {
  if (u <= 0.0) return 0.0;
  switch (data_->kind) {
    case Kind::Constant:
      if (data_->b == 1) return u;
      return -std::expm1(static_cast<double>(data_->b) * std::log1p(-u));
    case Kind::Poisson:
      return -std::expm1(-data_->param * u);
    case Kind::Geometric: {
      const double p = data_->param;
      return (1.0 - p) * u / (p + (1.0 - p) * u);
    }
    case Kind::Sibuya:
      return std::pow(u, data_->param);
  }
  return 0.0;
}

std::complex<double> ImmigrationLaw::one_minus_pgf_u(std::complex<double> u) const {
  if (u == std::complex<double>(0.0, 0.0)) return {0.0, 0.0};
  switch (data_->kind) {
    case Kind::Constant:
      return -expm1_c(static_cast<double>(data_->b) * log1p_c(-u));
    case Kind::Poisson:
      return -expm1_c(-data_->param * u);
    case Kind::Geometric: {
      const double p = data_->param;
      return (1.0 - p) * u / (p + (1.0 - p) * u);
    }
    case Kind::Sibuya:
      return std::exp(data_->param * std::log(u));
  }
  return {0.0, 0.0};
}

double ImmigrationLaw::pgf(double s) const {
  if (s < 0.0 || s > 1.0) throw ParameterError("pgf: s must be in [0,1]");
  return 1.0 - one_minus_pgf_u(1.0 - s);
}

std::complex<double> ImmigrationLaw::pgf(std::complex<double> s) const {
  return 1.0 - one_minus_pgf_u(1.0 - s);
}

double ImmigrationLaw::survival(std::uint64_t k) const {
  switch (data_->kind) {
    case Kind::Constant:
      return k < data_->b ? 1.0 : 0.0;
    case Kind::Poisson: {
      long double acc = 0.0L;
      double pk = std::exp(-data_->param);
      for (std::uint64_t j = 0; j <= k; ++j) {
        if (j > 0) pk *= data_->param / static_cast<double>(j);
        acc += pk;
      }
      return static_cast<double>(1.0L - acc);
    }
    case Kind::Geometric:
      return std::exp(static_cast<double>(k + 1) * std::log1p(-data_->param));
    case Kind::Sibuya:
      return sibuya_survival(data_->param, k);
  }
  return 0.0;
}

std::string ImmigrationLaw::describe() const {
  std::ostringstream os;
  switch (data_->kind) {
    case Kind::Constant: os << "constant(" << data_->b << ")"; break;
    case Kind::Poisson: os << "poisson(mean=" << data_->param << ")"; break;
    case Kind::Geometric: os << "geometric(p=" << data_->param << ")"; break;
    case Kind::Sibuya: os << "sibuya(beta=" << data_->param << ")"; break;
  }
  return os.str();
}

}  // namespace critgw
