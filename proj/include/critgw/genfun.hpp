#ifndef CRITGW_GENFUN_HPP
#define CRITGW_GENFUN_HPP

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "critgw/dists.hpp"

namespace critgw {

/// A regularly varying tail map x -> constant * x^(-index).
struct TailLaw {
  double index;
  double constant;
  double operator()(double x) const;
};

/// Offspring + immigration pair with the derived constants used by the
/// predictions: the stationary tail index gamma, the partial-sum exponent
/// eta, and the accessible atom k0 (minimal immigration support).
class ChainModel {
 public:
  ChainModel(OffspringLaw offspring, ImmigrationLaw immigration);

  const OffspringLaw& offspring() const { return offspring_; }
  const ImmigrationLaw& immigration() const { return immigration_; }

  /// True under heavy (Sibuya) immigration, i.e. the infinite-mean case.
  bool heavy_immigration() const { return immigration_.heavy_tailed(); }

  /// 1 - alpha with finite-mean immigration, beta - alpha otherwise.
  /// Heavy immigration requires beta > alpha.
  double gamma() const;
  /// 1/(1+alpha) with finite-mean immigration, beta/(1+alpha) otherwise.
  double eta() const;
  std::uint64_t atom() const { return atom_; }
  double ell_a() const { return offspring_.ell_a(); }
  double ell_b() const;

 private:
  OffspringLaw offspring_;
  ImmigrationLaw immigration_;
  std::uint64_t atom_;
};

/// n-fold composition of the offspring pgf, f_0 = id, f_{n+1} = f(f_n).
/// Iterated in u = 1-s coordinates (long double accumulation) so that
/// thousands of compositions keep relative accuracy near s = 1.
double iterate_f(const OffspringLaw& offspring, double s, std::uint64_t n);
double iterate_f(const ChainModel& model, double s, std::uint64_t n);
/// 1 - f_n(1-u); the numerically meaningful quantity near the fixed point.
double iterate_f_u(const OffspringLaw& offspring, double u, std::uint64_t n);

/// Closed-form n-th iterate of the power-fractional pgf:
/// f_n(s) = 1 - (1-s) / (1 + n (1-s)^alpha)^(1/alpha).
double theta_fn_closed(double alpha, double s, std::uint64_t n);
double theta_fn_closed_u(double alpha, double u, std::uint64_t n);

/// Stationary pgf phi(s) = prod_{n>=0} g(f_n(s)) for s in [0,1).
///
/// Factors are accumulated in log space; the truncation rule extrapolates
/// the observed power-law decay of 1 - g(f_n(s)) and stops once the
/// estimated remaining sum is below tol/2.  Throws BudgetExceeded (carrying
/// the partial value) if the hard factor budget is hit first.
double stationary_pgf(const ChainModel& model, double s, double tol,
                      std::uint64_t max_factors = 10'000'000);
std::complex<double> stationary_pgf(const ChainModel& model,
                                    std::complex<double> s, double tol,
                                    std::uint64_t max_factors = 10'000'000);

struct PmfExtraction {
  std::vector<double> pmf;   // coefficients 0..K
  double error_bound;        // uniform bound on per-coefficient error
};

/// Power-series coefficients 0..K of a pgf by discrete Fourier inversion on
/// M >= max(min_points, 8K) points of the circle |s| = radius.  The
/// evaluator must implement the pgf on that circle; eval_err is a bound on
/// its evaluation error (enters the reported bound amplified by r^-K).
/// Negative numerical artifacts below the bound are clamped to zero.
/// Throws AccuracyError when require_error > 0 is not achievable.
PmfExtraction pgf_to_pmf(
    const std::function<std::complex<double>(std::complex<double>)>& pgf,
    std::size_t K, double radius = 0.5, std::size_t min_points = 64,
    double eval_err = 0.0, double require_error = 0.0);

/// Tauberian conversion: 1 - E s^Y ~ ell (1-s)^mu  <=>
/// P(Y > x) ~ ell / (Gamma(1-mu) x^mu), for mu in (0,1) and constant ell.
TailLaw tauberian_tail(double mu, double ell_const);

/// de Bruijn conjugate of a constant slowly varying function: ell -> 1/ell
/// (an involution; the general defining relation is ell(x) ell#(x ell(x)) -> 1).
double debruijn_conj(double ell_const);

enum class Integrability { Finite, Infinite };

struct FwResult {
  Integrability classification;
  double exponent;        // fitted local exponent of the integrand at s -> 1
  bool well_conditioned;  // false when the log-log fit is not a clean line
};

/// Integrability classifier for int_0^1 (1-g(s))/(f(s)-s) ds: evaluates the
/// integrand at s_j = 1 - 2^-j, j = 1..40, fits the log-log slope against
/// 1-s, and classifies finite iff the exponent exceeds -1 + 0.05.
FwResult fw_check(const ChainModel& model);

/// Predicted stationary tail.  Finite-mean immigration:
///   index 1-alpha, constant g'(1) / ((1-alpha) Gamma(alpha) ell_A).
/// Heavy immigration (requires beta > alpha):
///   index beta-alpha, constant ell_B / (ell_A (beta-alpha) Gamma(1-beta+alpha)).
TailLaw predicted_stationary_tail(const ChainModel& model);

/// Predicted total-progeny tail: index 1/(1+alpha), constant
/// ell_A^(-1/(1+alpha)) / Gamma(alpha/(1+alpha)) for constant ell_A.
TailLaw predicted_progeny_tail(const OffspringLaw& offspring);

struct SumExponent {
  double eta;     // stable index of the partial-sum limit
  double growth;  // 1/eta, the growth exponent of S_n
};
SumExponent predicted_sum_exponent(const ChainModel& model);

/// Level sequence u_n(tau): solves n * C u^-gamma = tau for the predicted
/// tail, i.e. u = (n C / tau)^(1/gamma).
double level_sequence(const ChainModel& model, double tau, std::uint64_t n);

}  // namespace critgw

#endif  // CRITGW_GENFUN_HPP
