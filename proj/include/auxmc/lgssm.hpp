#ifndef AUXMC_LGSSM_HPP
#define AUXMC_LGSSM_HPP

#include <cstdint>
#include <vector>

#include "auxmc/common.hpp"
#include "auxmc/gauss.hpp"
#include "auxmc/rng.hpp"

namespace auxmc::lgssm {

// Linear-Gaussian state-space model over x_0..x_T:
//   x_0 ~ N(m0, P0)
//   x_{t+1} = F_t x_t + b_t + N(0, Q_t),            t = 0..T-1
//   y_t     = H_t x_t + c_t + N(0, R_t) if observed(t),  t = 0..T
// Parameters are stored either per step or once (static); accessors hide the
// difference, so homogeneous models carry a single copy.
class Model {
 public:
  Model(int T, Vec m0, Mat P0, std::vector<Mat> F, std::vector<Vec> b,
        std::vector<Mat> Q, std::vector<Mat> H, std::vector<Vec> c,
        std::vector<Mat> R, std::vector<std::uint8_t> obs_mask = {});

  static Model homogeneous(int T, Vec m0, Mat P0, Mat F, Vec b, Mat Q, Mat H,
                           Vec c, Mat R, std::vector<std::uint8_t> obs_mask = {});

  int horizon() const { return T_; }  // states x_0..x_T
  int dx() const { return dx_; }
  int dy() const { return dy_; }

  const Vec& m0() const { return m0_; }
  const Mat& P0() const { return P0_; }
  const Mat& F(int t) const { return F_[F_.size() > 1 ? t : 0]; }
  const Vec& b(int t) const { return b_[b_.size() > 1 ? t : 0]; }
  const Mat& Q(int t) const { return Q_[Q_.size() > 1 ? t : 0]; }
  const Mat& H(int t) const { return H_[H_.size() > 1 ? t : 0]; }
  const Vec& c(int t) const { return c_[c_.size() > 1 ? t : 0]; }
  const Mat& R(int t) const { return R_[R_.size() > 1 ? t : 0]; }
  bool observed(int t) const { return mask_.empty() || mask_[t] != 0; }

 private:
  int T_, dx_, dy_;
  Vec m0_;
  Mat P0_;
  std::vector<Mat> F_, Q_, H_, R_;
  std::vector<Vec> b_, c_;
  std::vector<std::uint8_t> mask_;
};

struct FilterResult {
  std::vector<Vec> pred_mean, filt_mean;   // per t = 0..T
  std::vector<Mat> pred_cov, filt_cov;
  double log_marginal = 0.0;
};

// Covariance-form Kalman filter with Joseph-stabilized updates; masked steps
// contribute no update and no likelihood term.
FilterResult kalman_filter(const Model& model, const Mat& obs);

// Marginal smoothing distributions N(m_t^s, P_t^s) per t.
std::vector<gauss::Gaussian> rts_smoother(const Model& model,
                                          const FilterResult& fr);

// One-step backward conditional x_t | x_{t+1} = gain x_{t+1} + offset + N(0, cov).
struct BackwardStep {
  Mat gain;
  Vec offset;
  Mat cov;
};
BackwardStep backward_step(const Model& model, const FilterResult& fr, int t);

// Exact joint posterior draw by sequential backward sampling. Noise is
// addressed as (kTerminalDraw, 0) for x_T and (kBackwardNoise, t) per step.
Trajectory backward_sample(const Model& model, const FilterResult& fr,
                           NoiseSource& noise);
Trajectory backward_sample(const Model& model, const FilterResult& fr,
                           RngStream rng);

// Log posterior density of a trajectory: complete-data log density minus the
// log marginal likelihood from fr.
double path_logpdf(const Model& model, const Mat& obs, const Trajectory& traj,
                   const FilterResult& fr);

// Exact joint posterior over stacked x_{0:T} (flat index t*dx + j) by dense
// Gaussian conditioning on all unmasked observations. Test oracle.
struct DenseOracle {
  gauss::Gaussian posterior;
  double log_evidence = 0.0;
};
DenseOracle dense_oracle(const Model& model, const Mat& obs, int cap = 256);

}  // namespace auxmc::lgssm

#endif
