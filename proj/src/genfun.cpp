#include "critgw/genfun.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include "critgw/errors.hpp"
#include "critgw/numeric.hpp"

namespace critgw {

double TailLaw::operator()(double x) const {
  return constant * std::pow(x, -index);
}

ChainModel::ChainModel(OffspringLaw offspring, ImmigrationLaw immigration)
    : offspring_(std::move(offspring)),
      immigration_(std::move(immigration)),
      atom_(immigration_.min_support()) {}

double ChainModel::gamma() const {
  const double a = offspring_.alpha();
  if (!heavy_immigration()) return 1.0 - a;
  const double beta = immigration_.parameter();
  if (beta <= a)
    throw UnsupportedRegime(
        "stationary tail index requires beta > alpha under heavy immigration");
  return beta - a;
}

double ChainModel::eta() const {
  const double a = offspring_.alpha();
  if (!heavy_immigration()) return 1.0 / (1.0 + a);
  return immigration_.parameter() / (1.0 + a);
}

double ChainModel::ell_b() const {
  if (!heavy_immigration())
    throw UnsupportedRegime("ell_B is defined for heavy immigration only");
  return 1.0;  // Sibuya has pgf exactly 1 - (1-s)^beta
}

// ---------------------------------------------------------------------------
// Iterated composition

namespace {

// One composition step in u = 1-s coordinates, long double so that relative
// error stays below ~n*eps over n iterations (the map damps old errors, so
// this is conservative).
long double one_minus_f_ld(const OffspringLaw& off, long double u) {
  const long double a = off.alpha();
  if (off.kind() == OffspringLaw::Kind::Slack)
    return u - static_cast<long double>(off.c()) * std::pow(u, 1.0L + a);
  return u * std::exp(-std::log1p(std::pow(u, a)) / a);
}

}  // namespace

double iterate_f_u(const OffspringLaw& offspring, double u, std::uint64_t n) {
  long double v = u;
  for (std::uint64_t i = 0; i < n && v > 0.0L; ++i)
    v = one_minus_f_ld(offspring, v);
  return static_cast<double>(v);
}

double iterate_f(const OffspringLaw& offspring, double s, std::uint64_t n) {
  if (s < 0.0 || s > 1.0) throw ParameterError("iterate_f: s must be in [0,1]");
  return 1.0 - iterate_f_u(offspring, 1.0 - s, n);
}

double iterate_f(const ChainModel& model, double s, std::uint64_t n) {
  return iterate_f(model.offspring(), s, n);
}

double theta_fn_closed_u(double alpha, double u, std::uint64_t n) {
  if (u <= 0.0) return 0.0;
  const long double a = alpha;
  const long double ul = u;
  const long double nua = static_cast<long double>(n) * std::pow(ul, a);
  return static_cast<double>(ul * std::exp(-std::log1p(nua) / a));
}

double theta_fn_closed(double alpha, double s, std::uint64_t n) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ParameterError("theta_fn_closed: alpha must be in (0,1)");
  if (s < 0.0 || s > 1.0)
    throw ParameterError("theta_fn_closed: s must be in [0,1]");
  return 1.0 - theta_fn_closed_u(alpha, 1.0 - s, n);
}

// ---------------------------------------------------------------------------
// Stationary product

namespace {

// Shared truncation logic: factors a_n = 1 - g(f_n(s)) decay like a power
// of n; the remaining sum is extrapolated from the decay rate between
// geometric checkpoints and the product stops once that bound is small.
template <typename Scalar>
struct ProductState {
  long double log_abs = 0.0L;  // real part of sum log(1 - a_n)
  double arg = 0.0;            // imaginary part (complex case)
  bool hit_zero = false;
};

double factor_magnitude(double a) { return std::abs(a); }
double factor_magnitude(std::complex<double> a) { return std::abs(a); }

template <typename Scalar>
void accumulate(ProductState<Scalar>& st, Scalar a);

template <>
void accumulate(ProductState<double>& st, double a) {
  if (a >= 1.0) {
    st.hit_zero = true;
    return;
  }
  st.log_abs += std::log1p(-static_cast<long double>(a));
}

template <>
void accumulate(ProductState<std::complex<double>>& st, std::complex<double> a) {
  std::complex<double> l = log1p_c(-a);
  st.log_abs += l.real();
  st.arg += l.imag();
}

template <typename Scalar>
Scalar finish(const ProductState<Scalar>& st);

template <>
double finish(const ProductState<double>& st) {
  if (st.hit_zero) return 0.0;
  return static_cast<double>(std::exp(st.log_abs));
}

template <>
std::complex<double> finish(const ProductState<std::complex<double>>& st) {
  double mod = static_cast<double>(std::exp(st.log_abs));
  return {mod * std::cos(st.arg), mod * std::sin(st.arg)};
}

template <typename UScalar, typename Scalar>
Scalar stationary_product(const ChainModel& model, UScalar u0, double tol,
                          std::uint64_t max_factors) {
  if (!(tol > 0.0)) throw ParameterError("stationary_pgf: tol must be > 0");
  const OffspringLaw& f = model.offspring();
  const ImmigrationLaw& g = model.immigration();

  ProductState<Scalar> st;
  UScalar u = u0;
  double prev_mag = 0.0;
  std::uint64_t prev_n = 0, next_check = 8;
  double tail_bound = std::numeric_limits<double>::infinity();

  for (std::uint64_t n = 0; n < max_factors; ++n) {
    Scalar a = g.one_minus_pgf_u(u);
    const double mag = factor_magnitude(a);
    if (mag == 0.0) return finish(st);  // fixed point reached exactly
    accumulate(st, a);
    if (st.hit_zero) return finish(st);

    if (n == next_check) {
      if (prev_n > 0 && prev_mag > 0.0 && mag > 0.0) {
        const double rho = std::log(prev_mag / mag) /
                           std::log(static_cast<double>(n) / static_cast<double>(prev_n));
        if (rho > 1.02) {
          tail_bound = mag * static_cast<double>(n) / (rho - 1.0);
          if (tail_bound < 0.5 * tol) return finish(st);
        }
      }
      prev_n = n;
      prev_mag = mag;
      next_check += next_check / 2 + 1;
    }
    if (mag < 1e-300) return finish(st);
    u = f.one_minus_pgf_u(u);
  }
  throw BudgetExceeded("stationary_pgf: factor budget exhausted",
                       factor_magnitude(finish(st)), tail_bound);
}

}  // namespace

double stationary_pgf(const ChainModel& model, double s, double tol,
                      std::uint64_t max_factors) {
  if (!(s >= 0.0 && s < 1.0))
    throw ParameterError("stationary_pgf: s must be in [0,1)");
  // double-precision iteration: per-factor error is damped by the map and
  // stays orders below any reachable truncation tolerance
  return stationary_product<double, double>(model, 1.0 - s, tol, max_factors);
}

std::complex<double> stationary_pgf(const ChainModel& model,
                                    std::complex<double> s, double tol,
                                    std::uint64_t max_factors) {
  if (std::abs(s) >= 1.0)
    throw ParameterError("stationary_pgf: |s| must be < 1");
  return stationary_product<std::complex<double>, std::complex<double>>(
      model, 1.0 - s, tol, max_factors);
}

// ---------------------------------------------------------------------------
// Coefficient extraction

PmfExtraction pgf_to_pmf(
    const std::function<std::complex<double>(std::complex<double>)>& pgf,
    std::size_t K, double radius, std::size_t min_points, double eval_err,
    double require_error) {
  if (!(radius > 0.0 && radius < 1.0))
    throw ParameterError("pgf_to_pmf: radius must be in (0,1)");
  const std::size_t M = std::max(min_points, 8 * (K + 1));

  const double log_r = std::log(radius);
  if (-static_cast<double>(K) * log_r > 700.0)
    throw AccuracyError("pgf_to_pmf: radius too small for requested K");

  std::vector<std::complex<double>> vals(M);
  std::vector<double> tw_cos(M), tw_sin(M);
  double maxmod = 0.0;
  // real coefficients: phi(conj s) = conj phi(s), so half a circle suffices
  for (std::size_t j = 0; j <= M / 2; ++j) {
    const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(M);
    vals[j] = pgf(std::polar(radius, th));
    maxmod = std::max(maxmod, std::abs(vals[j]));
    if (j > 0 && j < M - j) vals[M - j] = std::conj(vals[j]);
  }
  for (std::size_t j = 0; j < M; ++j) {
    const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(M);
    tw_cos[j] = std::cos(th);
    tw_sin[j] = std::sin(th);
  }

  PmfExtraction out;
  out.pmf.resize(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    // Re[phi_j e^{-i theta j k}] summed over the circle
    double acc = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const std::size_t m = (j * k) % M;
      acc += vals[j].real() * tw_cos[m] + vals[j].imag() * tw_sin[m];
    }
    out.pmf[k] = acc / static_cast<double>(M) * std::exp(-static_cast<double>(k) * log_r);
  }

  const double amp = std::exp(-static_cast<double>(K) * log_r);
  const double alias = maxmod * std::pow(radius, static_cast<double>(M - K)) / (1.0 - radius);
  const double noise = (eval_err + 64.0 * std::numeric_limits<double>::epsilon() * maxmod) * amp;
  out.error_bound = alias + noise;
  if (require_error > 0.0 && out.error_bound > require_error)
    throw AccuracyError("pgf_to_pmf: requested accuracy unreachable for given radius/points");

  for (double& p : out.pmf)
    if (p < 0.0 && p > -out.error_bound) p = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Tail conversions and predictions

TailLaw tauberian_tail(double mu, double ell_const) {
  if (!(mu > 0.0 && mu < 1.0))
    throw UnsupportedRegime("tauberian_tail: mu must be in (0,1)");
  if (!(ell_const > 0.0))
    throw ParameterError("tauberian_tail: ell must be > 0");
  return {mu, ell_const / std::tgamma(1.0 - mu)};
}

double debruijn_conj(double ell_const) {
  if (!(ell_const > 0.0))
    throw ParameterError("debruijn_conj: ell must be > 0");
  return 1.0 / ell_const;
}

FwResult fw_check(const ChainModel& model) {
  std::vector<double> xs, ys;
  xs.reserve(40);
  ys.reserve(40);
  for (int j = 1; j <= 40; ++j) {
    const double u = std::ldexp(1.0, -j);
    const double num = model.immigration().one_minus_pgf_u(u);
    const double den = model.offspring().drift_u(u);
    if (num <= 0.0) {
      // degenerate immigration (B identically its minimum): integrand is 0
      return {Integrability::Finite, 0.0, true};
    }
    xs.push_back(std::log(u));
    ys.push_back(std::log(num / den));
  }
  LineFit fit = fit_line(xs, ys);
  FwResult res;
  res.exponent = fit.slope;
  // slowly-varying-type curvature at the coarse end of the grid is normal
  // (the power-fractional integrand carries an O(u^alpha) correction); only
  // clearly non-power shapes are flagged
  res.well_conditioned = fit.rms_residual < 0.25;
  res.classification =
      fit.slope > -1.0 + 0.05 ? Integrability::Finite : Integrability::Infinite;
  return res;
}

TailLaw predicted_stationary_tail(const ChainModel& model) {
  const double a = model.offspring().alpha();
  const double gamma = model.gamma();  // validates the regime
  if (!model.heavy_immigration()) {
    const double gp1 = model.immigration().mean();
    return {gamma, gp1 / ((1.0 - a) * std::tgamma(a) * model.ell_a())};
  }
  const double beta = model.immigration().parameter();
  return {gamma, model.ell_b() /
                     (model.ell_a() * (beta - a) * std::tgamma(1.0 - beta + a))};
}

TailLaw predicted_progeny_tail(const OffspringLaw& offspring) {
  const double a = offspring.alpha();
  const double ell = offspring.ell_a();
  // ell_{A,1} = ell^(-1/(1+a)) is constant, so its de Bruijn conjugate is
  // the reciprocal and the tail constant becomes ell^(-1/(1+a)) / Gamma(a/(1+a)).
  const double idx = 1.0 / (1.0 + a);
  return {idx, std::pow(ell, -idx) / std::tgamma(a / (1.0 + a))};
}

SumExponent predicted_sum_exponent(const ChainModel& model) {
  const double eta = model.eta();
  return {eta, 1.0 / eta};
}

double level_sequence(const ChainModel& model, double tau, std::uint64_t n) {
  if (!(tau > 0.0)) throw ParameterError("level_sequence: tau must be > 0");
  const TailLaw tail = predicted_stationary_tail(model);
  return std::pow(static_cast<double>(n) * tail.constant / tau, 1.0 / tail.index);
}

}  // namespace critgw
