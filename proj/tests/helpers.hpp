#ifndef CRITGW_TESTS_HELPERS_HPP
#define CRITGW_TESTS_HELPERS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "critgw/dists.hpp"
#include "critgw/numeric.hpp"
#include "critgw/rng.hpp"

namespace critgw::testing {

/// Pearson chi-squared GoF of seeded draws against pmf on {0..k_max} with a
/// pooled overflow cell; cells with expected count < 5 are merged into it.
struct Chi2Result {
  double statistic = 0.0;
  double critical = 0.0;
  int cells = 0;
  bool pass = false;
};

inline Chi2Result chi2_gof(const std::function<std::uint64_t(RngStream&)>& draw,
                           const std::function<double(std::uint64_t)>& pmf,
                           std::uint64_t k_max, std::size_t n,
                           RngStream rng, double significance = 1e-3) {
  std::vector<std::uint64_t> counts(k_max + 1, 0);
  std::uint64_t overflow = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = draw(rng);
    if (v <= k_max)
      ++counts[static_cast<std::size_t>(v)];
    else
      ++overflow;
  }
  double stat = 0.0, pooled_p = 1.0;
  std::uint64_t pooled_obs = overflow;
  int cells = 0;
  const double dn = static_cast<double>(n);
  for (std::uint64_t k = 0; k <= k_max; ++k) {
    const double pk = pmf(k);
    if (pk * dn < 5.0) {
      pooled_obs += counts[static_cast<std::size_t>(k)];
      continue;
    }
    pooled_p -= pk;
    const double diff = static_cast<double>(counts[static_cast<std::size_t>(k)]) - pk * dn;
    stat += diff * diff / (pk * dn);
    ++cells;
  }
  if (pooled_p * dn >= 5.0) {
    const double diff = static_cast<double>(pooled_obs) - pooled_p * dn;
    stat += diff * diff / (pooled_p * dn);
    ++cells;
  }
  Chi2Result res;
  res.statistic = stat;
  res.cells = cells;
  res.critical = chi_squared_critical(cells - 1, significance);
  res.pass = stat < res.critical;
  return res;
}

/// Exact Pareto(gamma) quantile grid x_i = ((i+1)/n)^(-1/gamma), descending in i.
inline std::vector<double> pareto_quantile_grid(double gamma, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = std::pow(static_cast<double>(i + 1) / static_cast<double>(n),
                     -1.0 / gamma);
  return xs;
}

}  // namespace critgw::testing

#endif
