#ifndef AUXMC_TARGET_HPP
#define AUXMC_TARGET_HPP

#include <functional>
#include <optional>
#include <vector>

#include "auxmc/common.hpp"
#include "auxmc/gauss.hpp"

namespace auxmc::auxk {

// Potential block in exact-Gaussian form: g(x) = N(y; H x + c, R). Kept
// separate from generic potentials so the auxiliary model can absorb it as a
// real observation instead of a linearization.
struct ExactGaussPotential {
  Mat H;
  Vec c;
  Mat R;
  Vec y;
};

// Per-step potential: an optional exact-Gaussian block times an optional
// generic differentiable factor. Either or both may be absent.
struct Potential {
  std::optional<ExactGaussPotential> exact;
  std::function<double(const Vec&)> log_g;
  std::function<Vec(const Vec&)> grad_log_g;
};

// Target over paths x_{0:T}: Gaussian prior dynamics — linear, or nonlinear
// with tractable conditional moments — times per-step potentials.
//   log gamma(x) = log p(x_0) + sum_t log p(x_{t+1}|x_t) + sum_t log g_t(x_t)
class GenSSMTarget {
 public:
  using MeanFn = std::function<Vec(int, const Vec&)>;  // x_t -> E[x_{t+1}|x_t]
  using JacFn = std::function<Mat(int, const Vec&)>;
  using CovFn = std::function<Mat(int, const Vec&)>;

  static GenSSMTarget linear(int T, Vec m0, Mat P0, std::vector<Mat> F,
                             std::vector<Vec> b, std::vector<Mat> Q,
                             std::vector<Potential> pots);
  static GenSSMTarget tractable(int T, int dx, Vec m0, Mat P0, MeanFn mean,
                                JacFn jac, CovFn cov,
                                std::vector<Potential> pots);

  int horizon() const { return T_; }
  int dx() const { return dx_; }
  bool linear_dynamics() const { return linear_; }

  const Vec& m0() const { return m0_; }
  const Mat& P0() const { return P0_; }

  // Conditional moments of x_{t+1} given x_t = x, for t = 0..T-1.
  Vec dyn_mean(int t, const Vec& x) const;
  Mat dyn_jac(int t, const Vec& x) const;
  Mat dyn_cov(int t, const Vec& x) const;

  // Valid only when linear_dynamics(): the stored pieces themselves.
  const Mat& lin_F(int t) const { return F(t); }
  const Vec& lin_b(int t) const { return b(t); }
  const Mat& lin_Q(int t) const { return Q(t); }

  double log_prior(const Vec& x0) const;
  double log_dyn(int t, const Vec& x_prev, const Vec& x_cur) const;

  const Potential& pot(int t) const { return pot_[t]; }
  bool has_exact(int t) const { return pot_[t].exact.has_value(); }
  bool has_generic(int t) const { return static_cast<bool>(pot_[t].log_g); }
  int max_exact_rows() const;

  double log_pot(int t, const Vec& x) const;        // both factors
  Vec grad_pot_generic(int t, const Vec& x) const;  // generic factor only
  Vec grad_pot(int t, const Vec& x) const;          // both factors

  double log_gamma(const Trajectory& traj) const;

 private:
  int T_ = 0, dx_ = 0;
  bool linear_ = true;
  Vec m0_;
  Mat P0_;
  std::vector<Mat> F_, Q_;
  std::vector<Vec> b_;
  MeanFn mean_;
  JacFn jac_;
  CovFn cov_;
  std::vector<Potential> pot_;

  const Mat& F(int t) const { return F_[F_.size() > 1 ? t : 0]; }
  const Vec& b(int t) const { return b_[b_.size() > 1 ? t : 0]; }
  const Mat& Q(int t) const { return Q_[Q_.size() > 1 ? t : 0]; }
};

}  // namespace auxmc::auxk

#endif
