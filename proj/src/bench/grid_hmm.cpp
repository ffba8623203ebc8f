#include "auxmc/bench/grid_hmm.hpp"

#include <cmath>

namespace auxmc::bench {

namespace {

double logsumexp(const Vec& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

GridPosterior grid_hmm_posterior(const auxk::GenSSMTarget& target, double lo,
                                 double hi, int n_points) {
  require_dim(target.dx() == 1, "grid_hmm_posterior: 1-d targets only");
  require_dim(n_points >= 2 && hi > lo, "grid_hmm_posterior: bad grid");
  const int T = target.horizon();
  const int n = n_points;
  const double h = (hi - lo) / n;
  const double logh = std::log(h);

  GridPosterior out;
  out.points = Vec(n);
  for (int i = 0; i < n; ++i) out.points[i] = lo + (i + 0.5) * h;

  // Per-step potential values on the grid.
  Mat lpot(T + 1, n);
  for (int t = 0; t <= T; ++t)
    for (int i = 0; i < n; ++i)
      lpot(t, i) = target.log_pot(t, Vec::Constant(1, out.points[i]));

  // Transition log-densities lm(i, j) = log p(x_{t+1} = pt_j | x_t = pt_i).
  // Scalar fast path for linear dynamics; generic targets go through the
  // conditional density call.
  Mat lm(n, n);
  auto fill_transition = [&](int t) {
    if (target.linear_dynamics()) {
      const double f = target.lin_F(t)(0, 0);
      const double b = target.lin_b(t)[0];
      const double q = target.lin_Q(t)(0, 0);
      const double cnorm = -0.5 * std::log(2.0 * M_PI * q);
      for (int i = 0; i < n; ++i) {
        const double pred = f * out.points[i] + b;
        lm.row(i) =
            (cnorm - (out.points.array() - pred).square() / (2.0 * q))
                .matrix()
                .transpose();
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          lm(i, j) = target.log_dyn(t, Vec::Constant(1, out.points[i]),
                                    Vec::Constant(1, out.points[j]));
    }
  };

  Mat la(T + 1, n), lb(T + 1, n);
  for (int i = 0; i < n; ++i)
    la(0, i) = target.log_prior(Vec::Constant(1, out.points[i])) +
               lpot(0, i) + logh;
  for (int t = 0; t < T; ++t) {
    fill_transition(t);
    for (int j = 0; j < n; ++j)
      la(t + 1, j) =
          logsumexp(Vec(la.row(t).transpose() + lm.col(j))) + lpot(t + 1, j) +
          logh;
  }
  out.log_evidence = logsumexp(Vec(la.row(T).transpose()));

  lb.row(T).setZero();
  for (int t = T - 1; t >= 0; --t) {
    fill_transition(t);
    for (int i = 0; i < n; ++i)
      lb(t, i) = logsumexp(Vec(lm.row(i).transpose() +
                               lpot.row(t + 1).transpose() +
                               lb.row(t + 1).transpose())) +
                 logh;
  }

  out.marginals = Mat(T + 1, n);
  out.mean = Vec(T + 1);
  out.var = Vec(T + 1);
  for (int t = 0; t <= T; ++t) {
    Vec lg = la.row(t).transpose() + lb.row(t).transpose();
    lg.array() -= logsumexp(lg);
    out.marginals.row(t) = lg.array().exp().matrix().transpose();
    out.mean[t] = out.marginals.row(t).dot(out.points);
    const double m2 =
        out.marginals.row(t).dot(out.points.array().square().matrix());
    out.var[t] = m2 - out.mean[t] * out.mean[t];
  }
  return out;
}

}  // namespace auxmc::bench
