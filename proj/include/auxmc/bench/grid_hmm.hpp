#ifndef AUXMC_BENCH_GRID_HMM_HPP
#define AUXMC_BENCH_GRID_HMM_HPP

#include "auxmc/target.hpp"

namespace auxmc::bench {

// Smoothing marginals of a 1-d target computed by discretizing the state
// onto an equispaced grid and running exact HMM forward-backward recursions.
// Midpoint quadrature: log_evidence carries the cell-width factors, so it
// approximates the continuous evidence as the grid refines.
struct GridPosterior {
  Vec points;     // cell midpoints
  Mat marginals;  // (T+1) x n, rows sum to 1
  Vec mean;       // posterior mean per step
  Vec var;        // posterior variance per step
  double log_evidence = 0.0;
};

GridPosterior grid_hmm_posterior(const auxk::GenSSMTarget& target, double lo,
                                 double hi, int n_points);

}  // namespace auxmc::bench

#endif
