#include "auxmc/auxk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace auxmc::auxk {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

std::vector<Vec> generic_grads(const GenSSMTarget& target,
                               const Trajectory& x) {
  std::vector<Vec> g(target.horizon() + 1);
  for (int t = 0; t <= target.horizon(); ++t)
    g[t] = target.grad_pot_generic(t, x.row(t).transpose());
  return g;
}

// Sum_t log N(u_t; x_t, (delta/2) I).
double aux_loglik(const Mat& u, const Trajectory& x, double delta) {
  double lp = 0.0;
  for (int t = 0; t < u.rows(); ++t)
    lp += gauss::isotropic_log_pdf((u.row(t) - x.row(t)).transpose(),
                                   delta / 2.0);
  return lp;
}

Trajectory draw_path(const lgssm::Model& model, const lgssm::FilterResult& fr,
                     RngStream rng, const KernelOptions& opts) {
  switch (opts.backend) {
    case Backend::kSequential:
      return lgssm::backward_sample(model, fr, rng);
    case Backend::kPrefix:
      return pit::prefix_sample(model, fr, rng, opts.workers);
    default:
      return pit::dnc_sample(model, fr, rng, opts.workers);
  }
}

}  // namespace

Mat sample_aux_obs(const Trajectory& x, double delta, RngStream rng) {
  const int dx = static_cast<int>(x.cols());
  const double sd = std::sqrt(delta / 2.0);
  Mat u(x.rows(), dx);
  for (int t = 0; t < x.rows(); ++t) {
    RngStream s = rng.derive(stream::kAuxObs, t);
    u.row(t) = x.row(t) + sd * s.normal_vec(dx).transpose();
  }
  return u;
}

AuxModel build_aux_lgssm(const GenSSMTarget& target, const Trajectory& x,
                         const Mat& u, double delta, bool zeroth_order,
                         const std::vector<Vec>* grads) {
  const int T = target.horizon();
  const int dx = target.dx();
  require_dim(x.rows() == T + 1 && x.cols() == dx, "build_aux_lgssm: x shape");
  require_dim(u.rows() == T + 1 && u.cols() == dx, "build_aux_lgssm: u shape");

  std::vector<Mat> F;
  std::vector<Vec> b;
  std::vector<Mat> Q;
  F.reserve(T);
  b.reserve(T);
  Q.reserve(T);
  for (int t = 0; t < T; ++t) {
    if (target.linear_dynamics()) {
      F.push_back(target.lin_F(t));
      b.push_back(target.lin_b(t));
      Q.push_back(target.lin_Q(t));
    } else {
      const Vec xt = x.row(t).transpose();
      F.push_back(target.dyn_jac(t, xt));
      b.push_back(target.dyn_mean(t, xt) - F.back() * xt);
      Q.push_back(target.dyn_cov(t, xt));
    }
  }

  const int extra = target.max_exact_rows();
  const int dy = dx + extra;
  std::vector<Mat> H(T + 1);
  std::vector<Vec> c(T + 1);
  std::vector<Mat> R(T + 1);
  Mat obs = Mat::Zero(T + 1, dy);
  for (int t = 0; t <= T; ++t) {
    H[t] = Mat::Zero(dy, dx);
    H[t].topRows(dx) = Mat::Identity(dx, dx);
    c[t] = Vec::Zero(dy);
    R[t] = Mat::Identity(dy, dy);
    R[t].topLeftCorner(dx, dx) = (delta / 2.0) * Mat::Identity(dx, dx);

    Vec z = u.row(t).transpose();
    if (!zeroth_order) {
      const Vec g = grads != nullptr
                        ? (*grads)[t]
                        : target.grad_pot_generic(t, x.row(t).transpose());
      z += (delta / 2.0) * g;
    }
    obs.row(t).head(dx) = z.transpose();

    if (target.has_exact(t)) {
      const ExactGaussPotential& e = *target.pot(t).exact;
      const int rows = static_cast<int>(e.H.rows());
      H[t].middleRows(dx, rows) = e.H;
      c[t].segment(dx, rows) = e.c;
      R[t].block(dx, dx, rows, rows) = e.R;
      obs.row(t).segment(dx, rows) = e.y.transpose();
    }
  }

  return {lgssm::Model(T, target.m0(), target.P0(), std::move(F), std::move(b),
                       std::move(Q), std::move(H), std::move(c), std::move(R)),
          std::move(obs)};
}

AuxChainState init_chain(const GenSSMTarget& target, Trajectory x0,
                         double delta) {
  AuxChainState state;
  state.x = std::move(x0);
  state.delta = delta;
  state.log_gamma = target.log_gamma(state.x);
  state.grad_gen = generic_grads(target, state.x);
  return state;
}

void kernel_step(const GenSSMTarget& target, AuxChainState& state,
                 RngStream rng, const KernelOptions& opts) {
  const RngStream it = rng.derive(stream::kIteration, state.iter);
  ++state.iter;
  state.stats.last_accept_prob = 0.0;
  state.stats.last_log_alpha =
      -std::numeric_limits<double>::infinity();

  const Mat u = sample_aux_obs(state.x, state.delta, it);

  try {
    const AuxModel cur = build_aux_lgssm(target, state.x, u, state.delta,
                                         opts.zeroth_order, &state.grad_gen);
    const lgssm::FilterResult fr =
        opts.parallel_filter
            ? pit::parallel_filter(cur.model, cur.obs, opts.workers)
            : lgssm::kalman_filter(cur.model, cur.obs);
    const Trajectory prop = draw_path(cur.model, fr, it, opts);
    const double logq_fwd = lgssm::path_logpdf(cur.model, cur.obs, prop, fr);

    const double lg_prop = target.log_gamma(prop);
    if (!std::isfinite(lg_prop)) {
      ++state.stats.nonfinite_gamma;
      ++state.stats.rejected;
      return;
    }
    std::vector<Vec> grads_prop = generic_grads(target, prop);
    for (const Vec& g : grads_prop)
      if (!all_finite(g)) {
        ++state.stats.aborted;
        ++state.stats.rejected;
        return;
      }

    const AuxModel rev = build_aux_lgssm(target, prop, u, state.delta,
                                         opts.zeroth_order, &grads_prop);
    const lgssm::FilterResult fr_rev =
        opts.parallel_filter
            ? pit::parallel_filter(rev.model, rev.obs, opts.workers)
            : lgssm::kalman_filter(rev.model, rev.obs);
    const double logq_rev =
        lgssm::path_logpdf(rev.model, rev.obs, state.x, fr_rev);

    const double log_alpha =
        (lg_prop + aux_loglik(u, prop, state.delta) + logq_rev) -
        (state.log_gamma + aux_loglik(u, state.x, state.delta) + logq_fwd);
    if (std::isnan(log_alpha)) {
      ++state.stats.aborted;
      ++state.stats.rejected;
      return;
    }
    state.stats.last_log_alpha = log_alpha;
    state.stats.last_accept_prob =
        log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);

    RngStream acc = it.derive(stream::kMhAccept, 0);
    if (acc.next_uniform() < state.stats.last_accept_prob) {
      state.x = prop;
      state.log_gamma = lg_prop;
      state.grad_gen = std::move(grads_prop);
      ++state.stats.accepted;
    } else {
      ++state.stats.rejected;
    }
  } catch (const FactorizationError&) {
    ++state.stats.aborted;
    ++state.stats.rejected;
  }
}

double mh_log_ratio(const GenSSMTarget& target, const Trajectory& x,
                    const Trajectory& xp, const Mat& u, double delta,
                    bool zeroth_order) {
  const AuxModel cur = build_aux_lgssm(target, x, u, delta, zeroth_order);
  const AuxModel rev = build_aux_lgssm(target, xp, u, delta, zeroth_order);
  const lgssm::FilterResult fr = lgssm::kalman_filter(cur.model, cur.obs);
  const lgssm::FilterResult fr_rev = lgssm::kalman_filter(rev.model, rev.obs);
  return (target.log_gamma(xp) + aux_loglik(u, xp, delta) +
          lgssm::path_logpdf(rev.model, rev.obs, x, fr_rev)) -
         (target.log_gamma(x) + aux_loglik(u, x, delta) +
          lgssm::path_logpdf(cur.model, cur.obs, xp, fr));
}

void adapt_delta(AuxChainState& state, double target_rate) {
  const double n = static_cast<double>(std::max<long>(state.iter, 1));
  const double step = std::pow(n, -0.6);
  state.delta = std::exp(std::log(state.delta) +
                         step * (state.stats.last_accept_prob - target_rate));
}

}  // namespace auxmc::auxk
