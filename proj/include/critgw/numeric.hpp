#ifndef CRITGW_NUMERIC_HPP
#define CRITGW_NUMERIC_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <utility>

namespace critgw {

/// log(1+z) without cancellation for small |z|.
inline std::complex<double> log1p_c(std::complex<double> z) {
  double re = 0.5 * std::log1p(2.0 * z.real() + std::norm(z));
  double im = std::atan2(z.imag(), 1.0 + z.real());
  return {re, im};
}

/// exp(z)-1 without cancellation for small |z|.
inline std::complex<double> expm1_c(std::complex<double> z) {
  double ex = std::expm1(z.real());
  double cy = std::cos(z.imag());
  double sy = std::sin(z.imag());
  // e^x cos y - 1 = expm1(x) cos y - 2 sin^2(y/2)
  double hy = std::sin(0.5 * z.imag());
  return {ex * cy - 2.0 * hy * hy, (ex + 1.0) * sy};
}

/// Least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

/// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
  double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

/// Chi-squared upper critical value at the given significance
/// (Wilson-Hilferty cube approximation; plenty for goodness-of-fit gates).
inline double chi_squared_critical(double dof, double significance) {
  const double z = normal_quantile(1.0 - significance);
  const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
  return dof * t * t * t;
}

/// Quantile by linear interpolation on the sorted copy semantics of `sorted`
/// (input must already be ascending).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = q * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace critgw

#endif  // CRITGW_NUMERIC_HPP
