#ifndef AUXMC_BENCH_DIAGNOSTICS_HPP
#define AUXMC_BENCH_DIAGNOSTICS_HPP

#include "auxmc/common.hpp"

namespace auxmc::bench {

// Effective sample size n / (1 + 2 sum rho_k) with the autocorrelation sum
// truncated at the first non-positive Geyer pair sum. Unclamped: slightly
// anticorrelated chains can report ess > n. Requires n >= 100; constant
// chains have no defined value.
double ess(const Vec& chain);

// Monte Carlo standard error of the chain mean: sd / sqrt(ess).
double mcse(const Vec& chain);

struct Moments {
  Vec mean;
  Vec sd;  // normalized by n - 1
};
Moments column_moments(const Mat& draws);

}  // namespace auxmc::bench

#endif
