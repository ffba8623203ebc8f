#include "auxmc/target.hpp"

#include <cmath>
#include <utility>

namespace auxmc::auxk {

GenSSMTarget GenSSMTarget::linear(int T, Vec m0, Mat P0, std::vector<Mat> F,
                                  std::vector<Vec> b, std::vector<Mat> Q,
                                  std::vector<Potential> pots) {
  GenSSMTarget t;
  t.T_ = T;
  t.dx_ = static_cast<int>(m0.size());
  t.linear_ = true;
  t.m0_ = std::move(m0);
  t.P0_ = std::move(P0);
  t.F_ = std::move(F);
  t.b_ = std::move(b);
  t.Q_ = std::move(Q);
  t.pot_ = std::move(pots);
  require_dim(t.pot_.size() == static_cast<std::size_t>(T + 1),
              "GenSSMTarget: potential count");
  auto sized = [T](std::size_t n) { return n == 1 || n == static_cast<std::size_t>(T) || (T == 0 && n <= 1); };
  require_dim(sized(t.F_.size()) && sized(t.b_.size()) && sized(t.Q_.size()),
              "GenSSMTarget: dynamics array count");
  return t;
}

GenSSMTarget GenSSMTarget::tractable(int T, int dx, Vec m0, Mat P0, MeanFn mean,
                                     JacFn jac, CovFn cov,
                                     std::vector<Potential> pots) {
  GenSSMTarget t;
  t.T_ = T;
  t.dx_ = dx;
  t.linear_ = false;
  t.m0_ = std::move(m0);
  t.P0_ = std::move(P0);
  t.mean_ = std::move(mean);
  t.jac_ = std::move(jac);
  t.cov_ = std::move(cov);
  t.pot_ = std::move(pots);
  require_dim(t.pot_.size() == static_cast<std::size_t>(T + 1),
              "GenSSMTarget: potential count");
  return t;
}

Vec GenSSMTarget::dyn_mean(int t, const Vec& x) const {
  return linear_ ? Vec(F(t) * x + b(t)) : mean_(t, x);
}

Mat GenSSMTarget::dyn_jac(int t, const Vec& x) const {
  return linear_ ? F(t) : jac_(t, x);
}

Mat GenSSMTarget::dyn_cov(int t, const Vec& x) const {
  return linear_ ? Q(t) : cov_(t, x);
}

double GenSSMTarget::log_prior(const Vec& x0) const {
  return gauss::log_pdf(x0, gauss::Gaussian(m0_, P0_));
}

double GenSSMTarget::log_dyn(int t, const Vec& x_prev, const Vec& x_cur) const {
  return gauss::log_pdf(
      x_cur, gauss::Gaussian(dyn_mean(t, x_prev), dyn_cov(t, x_prev)));
}

int GenSSMTarget::max_exact_rows() const {
  int m = 0;
  for (const auto& p : pot_)
    if (p.exact) m = std::max(m, static_cast<int>(p.exact->H.rows()));
  return m;
}

double GenSSMTarget::log_pot(int t, const Vec& x) const {
  double lp = 0.0;
  const Potential& p = pot_[t];
  if (p.exact)
    lp += gauss::log_pdf(p.exact->y,
                         gauss::Gaussian(p.exact->H * x + p.exact->c, p.exact->R));
  if (p.log_g) lp += p.log_g(x);
  return lp;
}

Vec GenSSMTarget::grad_pot_generic(int t, const Vec& x) const {
  const Potential& p = pot_[t];
  return p.grad_log_g ? p.grad_log_g(x) : Vec(Vec::Zero(dx_));
}

Vec GenSSMTarget::grad_pot(int t, const Vec& x) const {
  Vec g = grad_pot_generic(t, x);
  const Potential& p = pot_[t];
  if (p.exact) {
    const Vec resid = p.exact->y - p.exact->H * x - p.exact->c;
    g += p.exact->H.transpose() * gauss::solve_spd(p.exact->R, resid);
  }
  return g;
}

double GenSSMTarget::log_gamma(const Trajectory& traj) const {
  require_dim(traj.rows() == T_ + 1 && traj.cols() == dx_,
              "log_gamma: trajectory shape");
  double lg = log_prior(traj.row(0).transpose());
  for (int t = 0; t < T_; ++t)
    lg += log_dyn(t, traj.row(t).transpose(), traj.row(t + 1).transpose());
  for (int t = 0; t <= T_; ++t) lg += log_pot(t, traj.row(t).transpose());
  return lg;
}

}  // namespace auxmc::auxk
