#ifndef CRITGW_DISTS_HPP
#define CRITGW_DISTS_HPP

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critgw/rng.hpp"

namespace critgw {

/// Regular-variation parameters of a tail: P(Y > x) ~ constant * x^(-index).
struct TailParams {
  double index;
  double constant;
};

/// Values at or above this are treated as effectively infinite by the
/// samplers (inverse transforms saturate here; population caps must not
/// exceed it so that sums of two values cannot overflow 64 bits).
inline constexpr std::uint64_t kValueCap = std::uint64_t{1} << 62;

/// Inverse-CDF sampler for an integer law: a cached cumulative table with
/// 64-bit integer thresholds for the body, and an exact analytic inverter
/// for the conditional law beyond the table.  Immutable after construction.
class DiscreteSampler {
 public:
  /// Maps v in (0,1) to min{k > table_end : S(k) <= v * S(table_end)}.
  using TailInverter = std::function<std::uint64_t(double)>;

  DiscreteSampler() = default;
  DiscreteSampler(const std::vector<double>& pmf, TailInverter tail);

  std::uint64_t operator()(RngStream& rng) const {
    const std::uint64_t u = rng.next_u64();
    // branchless scan of the first 7 cells; the residual branch is taken
    // rarely enough to predict well even for skewed laws
    std::uint64_t k = static_cast<std::uint64_t>(u >= head_[0]);
    k += u >= head_[1];
    k += u >= head_[2];
    k += u >= head_[3];
    k += u >= head_[4];
    k += u >= head_[5];
    k += u >= head_[6];
    if (k < 7) return k;
    return sample_slow(u, rng);
  }

  std::size_t table_size() const { return cum_.size(); }
  /// P(X <= table_end) as accumulated during the build.
  double table_coverage() const { return coverage_; }

  /// For tight summation loops: callers copy head() into registers, compute
  /// the branchless 7-cell scan themselves and call residual() when it
  /// saturates.  Equivalent to operator() draw for draw.
  const std::uint64_t* head() const { return head_; }
  std::uint64_t residual(std::uint64_t u, RngStream& rng) const {
    return sample_slow(u, rng);
  }

 private:
  std::uint64_t sample_slow(std::uint64_t u, RngStream& rng) const;

  std::vector<std::uint64_t> cum_;  // cum_[k] = round(P(X<=k) * 2^64), saturating
  std::uint64_t head_[7] = {0, 0, 0, 0, 0, 0, 0};
  double coverage_ = 0.0;
  TailInverter tail_;
};

/// Critical integer offspring law with generating function of the form
/// f(s) = s + (1-s)^(1+alpha) * L(1/(1-s)) where L tends to a constant.
///
/// Two families are implemented:
///   Slack:            f(s) = s + c (1-s)^(1+alpha),  L == c
///   PowerFractional:  f(s) = 1 - [(1-s)^(-alpha) + 1]^(-1/alpha),  L -> 1/alpha
///
/// Note the power-fractional normalization: expanding the closed form gives
/// 1 - f(s) = (1-s) - (1-s)^(1+alpha)/alpha + o(...), i.e. the slowly varying
/// factor converges to 1/alpha (not alpha).  The alpha = 1/2 stationary
/// product oracle is consistent only with this normalization, which is what
/// ell_a() returns.
///
/// Immutable and cheap to copy; safe to share across threads.
class OffspringLaw {
 public:
  enum class Kind { Slack, PowerFractional };

  static OffspringLaw slack(double alpha, double c);
  static OffspringLaw power_fractional(double alpha,
                                       std::size_t pmf_table_size = 1u << 14);

  Kind kind() const;
  double alpha() const;
  /// Slack only.
  double c() const;
  /// Limit of the slowly varying factor in f(s) - s = (1-s)^(1+alpha) L.
  double ell_a() const;

  double pmf(std::uint64_t k) const;
  double pgf(double s) const;
  std::complex<double> pgf(std::complex<double> s) const;

  /// 1 - f(1-u), evaluated without cancellation near u = 0.
  double one_minus_pgf_u(double u) const;
  std::complex<double> one_minus_pgf_u(std::complex<double> u) const;

  /// f(1-u) - (1-u) >= 0, the drift term; stable near u = 0.
  double drift_u(double u) const;

  /// P(A > k), consistent with the sampler's table + tail split.
  double survival(std::uint64_t k) const;

  std::uint64_t sample(RngStream& rng) const { return (*sampler_)(rng); }
  const DiscreteSampler& sampler() const { return *sampler_; }

  std::string describe() const;

 private:
  struct Data;
  OffspringLaw(std::shared_ptr<const Data> data,
               std::shared_ptr<const DiscreteSampler> sampler);
  std::shared_ptr<const Data> data_;
  std::shared_ptr<const DiscreteSampler> sampler_;
};

/// Integer immigration law: finite-mean families (Constant, Poisson,
/// Geometric) or the infinite-mean Sibuya(beta) with pgf 1 - (1-s)^beta.
/// Geometric counts failures before the first success (support {0,1,...}).
class ImmigrationLaw {
 public:
  enum class Kind { Constant, Poisson, Geometric, Sibuya };

  static ImmigrationLaw constant(std::uint64_t b);
  static ImmigrationLaw poisson(double mean);
  static ImmigrationLaw geometric(double p);
  static ImmigrationLaw sibuya(double beta);

  Kind kind() const;
  /// Family parameter: b, mean, p, or beta.
  double parameter() const;
  /// E B; +infinity for Sibuya.
  double mean() const;
  /// Smallest support point (the chain's accessible atom k0).
  std::uint64_t min_support() const;
  bool heavy_tailed() const;  // true only for Sibuya
  /// Sibuya only: nullopt with finite mean ("not regularly varying with
  /// infinite mean").  Sibuya(beta) -> (beta, 1/Gamma(1-beta)).
  std::optional<TailParams> tail_params() const;

  double pmf(std::uint64_t k) const;
  double pgf(double s) const;
  std::complex<double> pgf(std::complex<double> s) const;
  double one_minus_pgf_u(double u) const;
  std::complex<double> one_minus_pgf_u(std::complex<double> u) const;
  double survival(std::uint64_t k) const;

  std::uint64_t sample(RngStream& rng) const { return (*sampler_)(rng); }
  const DiscreteSampler& sampler() const { return *sampler_; }

  std::string describe() const;

 private:
  struct Data;
  ImmigrationLaw(std::shared_ptr<const Data> data,
                 std::shared_ptr<const DiscreteSampler> sampler);
  std::shared_ptr<const Data> data_;
  std::shared_ptr<const DiscreteSampler> sampler_;
};

}  // namespace critgw

#endif  // CRITGW_DISTS_HPP
