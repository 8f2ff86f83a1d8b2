#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

namespace relrag::stats {

inline constexpr double kZ95 = 1.959963984540054;

struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double estimate() const noexcept {
    return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  }
  /// sqrt(p(1-p)/n) at the observed p.
  double standard_error() const noexcept {
    if (!trials) return 0.0;
    const double p = estimate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
};

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  double half_width() const noexcept { return 0.5 * (upper - lower); }
};

/// Wilson score interval; stays inside [0,1] and behaves near p = 0 or 1.
inline Interval wilson(const Proportion& x, double z = kZ95) {
  if (!x.trials) return {0.0, 1.0};
  const double n = static_cast<double>(x.trials);
  const double p = x.estimate();
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - spread), std::min(1.0, centre + spread)};
}

/// Standard error of a proportion under the hypothesized p.
inline double standard_error(double p, std::uint64_t n) {
  return n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts of X = 0..n against Binomial(n, p).
/// Adjacent cells are pooled until each expected count is at least 5.
inline ChiSquareResult binomial_goodness_of_fit(const std::vector<std::uint64_t>& observed, double p) {
  const int n = static_cast<int>(observed.size()) - 1;
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  boost::math::binomial_distribution<double> dist(n, p);
  std::vector<double> exp_cells, obs_cells;
  double e_acc = 0.0, o_acc = 0.0;
  for (int x = 0; x <= n; ++x) {
    e_acc += static_cast<double>(total) * boost::math::pdf(dist, x);
    o_acc += static_cast<double>(observed[static_cast<std::size_t>(x)]);
    if (e_acc >= 5.0) {
      exp_cells.push_back(e_acc);
      obs_cells.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  if (!exp_cells.empty()) {
    exp_cells.back() += e_acc;
    obs_cells.back() += o_acc;
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < exp_cells.size(); ++i) {
    const double d = obs_cells[i] - exp_cells[i];
    r.statistic += d * d / exp_cells[i];
  }
  r.degrees_of_freedom = static_cast<int>(exp_cells.size()) - 1;
  if (r.degrees_of_freedom > 0) {
    boost::math::chi_squared_distribution<double> chi(r.degrees_of_freedom);
    r.p_value = boost::math::cdf(boost::math::complement(chi, r.statistic));
  }
  return r;
}

}  // namespace relrag::stats
