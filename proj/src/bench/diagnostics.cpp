#include "auxmc/bench/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace auxmc::bench {

namespace {

// Window cap keeps pathological near-nonstationary chains from scanning
// O(n) lags; ordinary MCMC chains stop far earlier via the pair-sum rule.
constexpr long kMaxLag = 5000;

double autocov(const Vec& d, long k) {
  const long n = d.size();
  return d.head(n - k).dot(d.tail(n - k)) / static_cast<double>(n);
}

}  // namespace

double ess(const Vec& chain) {
  const long n = chain.size();
  require_dim(n >= 100, "ess: need at least 100 samples");
  const Vec d = chain.array() - chain.mean();
  const double g0 = autocov(d, 0);
  if (g0 <= 0.0) throw ContractError("ess undefined for a constant chain");

  const long max_lag = std::min(n - 2, kMaxLag);
  double pair_total = 0.0;
  for (long m = 0; 2 * m <= max_lag; ++m) {
    double pair = autocov(d, 2 * m);
    if (2 * m + 1 <= max_lag) pair += autocov(d, 2 * m + 1);
    if (pair <= 0.0) break;
    pair_total += pair;
  }
  const double iact = std::max(2.0 * pair_total / g0 - 1.0, 1e-8);
  return static_cast<double>(n) / iact;
}

double mcse(const Vec& chain) {
  const long n = chain.size();
  const double m = chain.mean();
  const double var =
      (chain.array() - m).square().sum() / static_cast<double>(n - 1);
  return std::sqrt(var / ess(chain));
}

Moments column_moments(const Mat& draws) {
  const long n = draws.rows();
  Moments out;
  out.mean = draws.colwise().mean().transpose();
  out.sd = Vec::Zero(draws.cols());
  if (n > 1) {
    for (long j = 0; j < draws.cols(); ++j)
      out.sd[j] = std::sqrt(
          (draws.col(j).array() - out.mean[j]).square().sum() / (n - 1));
  }
  return out;
}

}  // namespace auxmc::bench
