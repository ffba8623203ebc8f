#ifndef AUXMC_GAUSS_HPP
#define AUXMC_GAUSS_HPP

#include "auxmc/common.hpp"
#include "auxmc/rng.hpp"

namespace auxmc::gauss {

// Multivariate normal N(mean, cov). The covariance is symmetrized on
// construction; positive semi-definiteness is checked lazily, at the first
// factorization.
struct Gaussian {
  Vec mean;
  Mat cov;

  Gaussian() = default;
  Gaussian(Vec m, Mat c);

  int dim() const { return static_cast<int>(mean.size()); }
};

// Lower Cholesky factor of a PSD matrix under the jitter policy: try as-is,
// then with eps * trace/d * I added for eps = 1e-10 and 1e-8, then fail.
// An exactly-zero matrix factors to zero.
Mat chol_psd(const Mat& a);

// log N(x; mean, cov), including the -(d/2) log(2 pi) constant.
double log_pdf(const Vec& x, const Gaussian& p);

// log N(resid; 0, var * I); fast path for isotropic covariances.
double isotropic_log_pdf(const Vec& resid, double var);

// mean + L xi with xi standard normal from rng.
Vec sample(const Gaussian& p, RngStream& rng);

// Condition a joint Gaussian over (a, b), with a the first dim_a
// coordinates, on b = observed_b.
Gaussian condition(const Gaussian& joint, int dim_a, const Vec& observed_b);

// Solve S X = B for SPD S under the jitter policy; returns S^{-1} B.
Mat solve_spd(const Mat& s, const Mat& b);

}  // namespace auxmc::gauss

#endif
