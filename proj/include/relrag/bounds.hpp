#pragma once

// Analytic robustness bounds.
//
// thm1_*: union bound on the chance that a maximum independent set of the
// contradiction graph contains a malicious document, split into
//   Bad1  no all-benign independent set of size alpha = (1 - mu) m
//   Bad2  some independent set of size alpha contains a malicious document.
// thm3_*: Hoeffding bound on the number of clean contexts in sample-and-aggregate.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "relrag/error.hpp"

namespace relrag {

/// log C(n, r); -inf when r is outside [0, n].
inline double log_choose(double n, double r) {
  if (r < 0 || r > n || n < 0) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1) - std::lgamma(r + 1) - std::lgamma(n - r + 1);
}

struct InclusionBoundParams {
  int k = 0;
  int k_prime = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double mu = 0.25;    // in (0, 1/2)
  double delta = 0.5;  // in (0, 1)

  int m() const noexcept { return k - k_prime; }
  double alpha() const noexcept { return (1.0 - mu) * m(); }

  void validate() const {
    if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (k_prime < 0 || k_prime > k) fail(ErrorCode::InvalidArgument, "k' must lie in [0, k]");
    if (!(eps1 >= 0.0 && eps1 <= 1.0) || !(eps2 >= 0.0 && eps2 <= 1.0))
      fail(ErrorCode::InvalidArgument, "error rates must lie in [0,1]");
    if (!(mu > 0.0 && mu < 0.5)) fail(ErrorCode::InvalidArgument, "mu must lie in (0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  }
};

struct RegimeReport {
  bool ok = false;
  bool corruption_ok = false;  // k' <= k/5
  bool eps1_ok = false;        // eps1 < mu/m
  bool eps2_ok = false;        // eps2 < ((1-mu)m - 1) / ((1+delta) e m)
  double corruption_margin = 0.0;
  double eps1_limit = 0.0;
  double eps1_margin = 0.0;
  double eps2_limit = 0.0;
  double eps2_margin = 0.0;
};

inline RegimeReport thm1_regime_check(const InclusionBoundParams& p) {
  p.validate();
  RegimeReport r;
  const double m = p.m();
  r.corruption_margin = p.k / 5.0 - p.k_prime;
  r.corruption_ok = 5 * p.k_prime <= p.k;
  r.eps1_limit = m > 0 ? p.mu / m : 0.0;
  r.eps1_margin = r.eps1_limit - p.eps1;
  r.eps1_ok = m > 0 && p.eps1 < r.eps1_limit;
  r.eps2_limit = m > 0 ? ((1.0 - p.mu) * m - 1.0) / ((1.0 + p.delta) * std::exp(1.0) * m) : 0.0;
  r.eps2_margin = r.eps2_limit - p.eps2;
  r.eps2_ok = m > 0 && p.eps2 < r.eps2_limit;
  r.ok = r.corruption_ok && r.eps1_ok && r.eps2_ok;
  return r;
}

struct InclusionBound {
  double bad1 = 1.0;
  double bad2 = 1.0;
  double t1 = 0.0;
  double v = 0.0;
  double direct_sum = 0.0;  // sum of T_r for r = 1..k'
  double total = 1.0;
  int alpha_size = 0;       // floor((1 - mu) m)
  RegimeReport regime;
  std::vector<double> terms;  // T_1 .. T_k'
  std::vector<std::string> warnings;
  bool regime_ok() const noexcept { return regime.ok && warnings.empty(); }
};

/// T_r = C(k', r) C(m, A - r) eps2^{r (A - r)} with A = floor(alpha).
inline double thm1_term(const InclusionBoundParams& p, int r) {
  const int a = static_cast<int>(std::floor(p.alpha()));
  const int s = a - r;
  const double lc = log_choose(p.k_prime, r) + log_choose(p.m(), s);
  if (std::isinf(lc)) return 0.0;
  const double exponent = static_cast<double>(r) * s;
  double log_eps = 0.0;
  if (exponent > 0) {
    if (p.eps2 == 0.0) return 0.0;
    log_eps = exponent * std::log(p.eps2);
  }
  return std::exp(lc + log_eps);
}

/// Upper bound on Pr[a maximum independent set contains a malicious document].
/// Outside the validity regime (or when the geometric-series closure needs
/// v < 1/2 and it fails) the bound is 1 with a warning; the components are
/// still reported.
inline InclusionBound thm1_failure_bound(const InclusionBoundParams& p) {
  InclusionBound b;
  b.regime = thm1_regime_check(p);
  const double m = p.m();
  b.alpha_size = static_cast<int>(std::floor(p.alpha()));
  b.bad1 = std::exp(-(1.0 / 6.0) * p.mu * (m - 1.0));
  for (int r = 1; r <= p.k_prime; ++r) b.terms.push_back(thm1_term(p, r));
  for (double t : b.terms) b.direct_sum += t;
  b.t1 = b.terms.empty() ? 0.0 : b.terms.front();

  const double v_exponent = (0.5 - p.mu) * m - 1.0;
  b.v = (1.0 - p.mu) / (10.0 * p.mu) * p.k * std::pow(p.eps2, v_exponent);
  b.bad2 = (1.0 + 2.0 * b.v) * b.t1;

  if (!b.regime.corruption_ok) b.warnings.push_back("k' exceeds k/5");
  if (!b.regime.eps1_ok) b.warnings.push_back("eps1 does not satisfy eps1 < mu/m");
  if (!b.regime.eps2_ok) b.warnings.push_back("eps2 does not satisfy eps2 < ((1-mu)m-1)/((1+delta)em)");
  if (!(b.v < 0.5)) b.warnings.push_back("v >= 1/2: geometric-series closure does not apply");

  b.total = b.warnings.empty() ? std::min(1.0, b.bad1 + b.bad2) : 1.0;
  return b;
}

struct AggregationBoundParams {
  double eta = 0.0;    // total malicious weight
  int m = 2;           // context size
  double alpha = 0.5;  // aggregator tolerance fraction
  int rounds = 20;     // T

  double p_clean() const { return std::pow(1.0 - eta, m); }

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) fail(ErrorCode::InvalidArgument, "eta must lie in [0,1]");
    if (m < 1) fail(ErrorCode::InvalidArgument, "context size must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1]");
    if (rounds < 0) fail(ErrorCode::InvalidArgument, "T must be >= 0");
  }
};

struct AggregationBound {
  double delta = 1.0;
  double p_clean = 0.0;
  double margin = 0.0;  // p_clean - (1 - alpha)
  std::vector<std::string> warnings;
};

/// exp(-2 T (p_clean - (1 - alpha))^2), or 1 when p_clean <= 1 - alpha.
inline AggregationBound thm3_failure_prob(const AggregationBoundParams& p) {
  p.validate();
  AggregationBound r;
  r.p_clean = p.p_clean();
  r.margin = r.p_clean - (1.0 - p.alpha);
  if (!(r.margin > 0.0)) {
    r.warnings.push_back("p_clean <= 1 - alpha: no robustness guarantee");
    return r;
  }
  r.delta = std::exp(-2.0 * p.rounds * r.margin * r.margin);
  return r;
}

inline double thm3_failure_prob(double p_clean, double alpha, int rounds) {
  const double margin = p_clean - (1.0 - alpha);
  if (!(margin > 0.0) || rounds <= 0) return 1.0;
  return std::exp(-2.0 * rounds * margin * margin);
}

/// Smallest T >= 1 with exp(-2 T margin^2) <= target_delta.
inline int thm3_min_rounds(double p_clean, double alpha, double target_delta) {
  if (!(target_delta > 0.0 && target_delta < 1.0))
    fail(ErrorCode::InvalidArgument, "target delta must lie in (0,1)");
  const double margin = p_clean - (1.0 - alpha);
  if (!(margin > 0.0)) fail(ErrorCode::Infeasible, "p_clean <= 1 - alpha: no number of rounds suffices");
  const double real = std::log(1.0 / target_delta) / (2.0 * margin * margin);
  if (real > static_cast<double>(std::numeric_limits<int>::max() - 1))
    fail(ErrorCode::Infeasible, "required number of rounds overflows");
  int t = std::max(1, static_cast<int>(std::ceil(real)));
  // Absorb rounding in the closed form by checking the bound itself.
  while (t > 1 && thm3_failure_prob(p_clean, alpha, t - 1) <= target_delta) --t;
  while (thm3_failure_prob(p_clean, alpha, t) > target_delta) ++t;
  return t;
}

inline int thm3_min_rounds(double eta, int m, double alpha, double target_delta) {
  AggregationBoundParams p{eta, m, alpha, 0};
  p.validate();
  return thm3_min_rounds(p.p_clean(), alpha, target_delta);
}

}  // namespace relrag
