#include "auxmc/fkpg.hpp"

#include <algorithm>

#include "auxmc/auxk.hpp"
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace auxmc::fkpg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Normalized weights and log mean of unnormalized weights; throws when the
// whole system collapsed.
std::pair<Vec, double> normalize(const Vec& logw, int t) {
  const double m = logw.maxCoeff();
  if (!std::isfinite(m))
    throw DegenerateWeightsError(
        "all particle weights degenerate at t=" + std::to_string(t));
  const Vec w = (logw.array() - m).exp();
  const double s = w.sum();
  return {Vec(w / s), m + std::log(s) - std::log(static_cast<double>(logw.size()))};
}

int multinomial_draw(const Vec& weights, double u) {
  double acc = 0.0;
  const int n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    if (u <= acc) return i;
  }
  return n - 1;
}

struct SweepConfig {
  const Trajectory* ref = nullptr;  // pinned particle; null = plain SMC
  const std::vector<std::uint64_t>* ref_keys = nullptr;
};

ParticleSystem sweep(const FeynmanKacModel& fk, int N, RngStream rng,
                     const SweepConfig& cfg) {
  const int T = fk.T;
  const int dx = fk.dx;
  ParticleSystem ps;
  ps.particles.assign(T + 1, Mat(N, dx));
  ps.logw.assign(T + 1, Vec(N));
  ps.weights.assign(T + 1, Vec(N));
  ps.ancestors.assign(T + 1, Eigen::VectorXi::Zero(N));
  ps.keys.assign(T + 1, std::vector<std::uint64_t>(N, 0));

  auto ref_key = [&](int t) {
    return cfg.ref_keys != nullptr && !cfg.ref_keys->empty()
               ? (*cfg.ref_keys)[t]
               : 0;
  };

  for (int t = 0; t <= T; ++t) {
    RngStream st = rng.derive(stream::kStep, t);
    const int first = cfg.ref != nullptr ? 1 : 0;

    if (t > 0) {
      RngStream rs = st.derive(stream::kResample, 0);
      for (int i = first; i < N; ++i)
        ps.ancestors[t][i] = multinomial_draw(ps.weights[t - 1], rs.next_uniform());
    }

    for (int i = 0; i < N; ++i) {
      std::uint64_t key = st.derive(stream::kPmKey, i).next_key();
      if (cfg.ref != nullptr && i == 0) {
        ps.particles[t].row(0) = cfg.ref->row(t);
        key = ref_key(t);
      } else {
        RngStream pi = st.derive(stream::kParticle, i);
        if (t == 0) {
          ps.particles[t].row(i) = fk.m0_sample(pi).transpose();
        } else {
          const Vec parent =
              ps.particles[t - 1].row(ps.ancestors[t][i]).transpose();
          ps.particles[t].row(i) = fk.m_sample(t, parent, pi).transpose();
        }
      }
      ps.keys[t][i] = key;

      const Vec x = ps.particles[t].row(i).transpose();
      if (t == 0) {
        ps.logw[t][i] = fk.log_g0(x, key);
      } else {
        const Vec parent =
            ps.particles[t - 1].row(ps.ancestors[t][i]).transpose();
        ps.logw[t][i] = fk.log_g(t, parent, x, key);
      }
    }

    auto [w, log_mean] = normalize(ps.logw[t], t);
    ps.weights[t] = std::move(w);
    ps.loglik += log_mean;
  }
  return ps;
}

}  // namespace

ParticleSystem smc(const FeynmanKacModel& fk, int N, RngStream rng) {
  require_dim(N >= 1, "smc: N >= 1");
  return sweep(fk, N, rng, {});
}

CsmcResult csmc_step(const FeynmanKacModel& fk, const Trajectory& ref,
                     const std::vector<std::uint64_t>& ref_keys, int N,
                     RngStream rng) {
  require_dim(N >= 1, "csmc_step: N >= 1");
  require_dim(ref.rows() == fk.T + 1 && ref.cols() == fk.dx,
              "csmc_step: reference shape");

  SweepConfig cfg;
  cfg.ref = &ref;
  cfg.ref_keys = &ref_keys;
  CsmcResult res;
  res.system = sweep(fk, N, rng, cfg);
  const ParticleSystem& ps = res.system;
  const int T = fk.T;

  RngStream ti = rng.derive(stream::kTerminalIndex, 0);
  int sel = multinomial_draw(ps.weights[T], ti.next_uniform());

  res.traj = Trajectory(T + 1, fk.dx);
  res.traj_keys.assign(T + 1, 0);
  res.traj.row(T) = ps.particles[T].row(sel);
  res.traj_keys[T] = ps.keys[T][sel];

  for (int t = T - 1; t >= 0; --t) {
    const Vec chosen = res.traj.row(t + 1).transpose();
    Vec logb(ps.weights[t].size());
    for (int i = 0; i < logb.size(); ++i) {
      const Vec xi = ps.particles[t].row(i).transpose();
      logb[i] = std::log(ps.weights[t][i]) +
                fk.m_logpdf(t + 1, xi, chosen) +
                fk.log_g(t + 1, xi, chosen, res.traj_keys[t + 1]);
    }
    auto [bw, unused] = normalize(logb, t);
    (void)unused;
    RngStream bs = rng.derive(stream::kBackwardIndex, t);
    sel = multinomial_draw(bw, bs.next_uniform());
    res.traj.row(t) = ps.particles[t].row(sel);
    res.traj_keys[t] = ps.keys[t][sel];
  }
  return res;
}

gauss::Gaussian adapted_proposal(const auxk::GenSSMTarget& target, int t,
                                 const Vec& u_t, const Vec* x_prev,
                                 double delta, const PgOptions& opts) {
  const int dx = target.dx();
  const Mat iso = (delta / 2.0) * Mat::Identity(dx, dx);
  const Vec prior_mean =
      t == 0 ? target.m0() : target.dyn_mean(t - 1, *x_prev);
  const Mat prior_cov = t == 0 ? target.P0() : target.dyn_cov(t - 1, *x_prev);

  switch (opts.mode) {
    case ProposalMode::kPrior:
      return gauss::Gaussian(prior_mean, prior_cov);
    case ProposalMode::kGradient: {
      const Vec at =
          opts.linearize == LinearizeAt::kAuxObs ? u_t : prior_mean;
      const Vec mean = u_t + (delta / 2.0) * target.grad_pot(t, at);
      return gauss::Gaussian(mean, iso);
    }
    default: {
      // Conjugate combination of N(prior) with pseudo-observation
      // z = x + noise((delta/2) I).
      const Vec at =
          opts.linearize == LinearizeAt::kAuxObs ? u_t : prior_mean;
      const Vec z = u_t + (delta / 2.0) * target.grad_pot(t, at);
      const Mat s = prior_cov + iso;
      const Mat gain = gauss::solve_spd(s, prior_cov).transpose();
      const Mat a = Mat::Identity(dx, dx) - gain;
      const Mat cov = a * prior_cov * a.transpose() +
                      (delta / 2.0) * gain * gain.transpose();
      return gauss::Gaussian(prior_mean + gain * (z - prior_mean), cov);
    }
  }
}

FeynmanKacModel build_aux_fk(const auxk::GenSSMTarget& target, const Mat& u,
                             double delta, const PgOptions& opts) {
  FeynmanKacModel fk;
  fk.T = target.horizon();
  fk.dx = target.dx();

  const auto proposal = [&target, u, delta, opts](int t, const Vec* xp) {
    return adapted_proposal(target, t, u.row(t).transpose(), xp, delta, opts);
  };

  fk.m0_sample = [proposal](RngStream& rng) {
    return gauss::sample(proposal(0, nullptr), rng);
  };
  fk.m0_logpdf = [proposal](const Vec& x) {
    return gauss::log_pdf(x, proposal(0, nullptr));
  };
  fk.m_sample = [proposal](int t, const Vec& xp, RngStream& rng) {
    return gauss::sample(proposal(t, &xp), rng);
  };
  fk.m_logpdf = [proposal](int t, const Vec& xp, const Vec& x) {
    return gauss::log_pdf(x, proposal(t, &xp));
  };

  const bool prior_mode = opts.mode == ProposalMode::kPrior;
  const auto pot = [&target, u, delta, proposal, prior_mode](
                       int t, const Vec* xp, const Vec& x) {
    double lg = target.log_pot(t, x) +
                gauss::isotropic_log_pdf(
                    Vec(u.row(t).transpose() - x), delta / 2.0);
    if (!prior_mode) {
      const double ld =
          t == 0 ? target.log_prior(x) : target.log_dyn(t - 1, *xp, x);
      lg += ld - gauss::log_pdf(x, proposal(t, xp));
    }
    return lg;
  };
  fk.log_g0 = [pot](const Vec& x, std::uint64_t) { return pot(0, nullptr, x); };
  fk.log_g = [pot](int t, const Vec& xp, const Vec& x, std::uint64_t) {
    return pot(t, &xp, x);
  };

  if (opts.fk_transform) return opts.fk_transform(fk);
  return fk;
}

FeynmanKacModel pm_potential(FeynmanKacModel fk, PotentialEstimator estimator) {
  auto wrap = [estimator](int t, const Vec& xp, const Vec& x,
                          std::uint64_t key) {
    const double est = estimator(t, xp, x, key);
    if (std::isnan(est) || est < 0.0)
      throw ContractError("pm_potential: estimator returned " +
                          std::to_string(est));
    return est > 0.0 ? std::log(est) : kNegInf;
  };
  fk.log_g0 = [wrap](const Vec& x, std::uint64_t key) {
    return wrap(0, Vec(), x, key);
  };
  fk.log_g = [wrap](int t, const Vec& xp, const Vec& x, std::uint64_t key) {
    return wrap(t, xp, x, key);
  };
  fk.uses_aux_keys = true;
  return fk;
}

PGState init_pg(Trajectory x0, double delta) {
  PGState state;
  state.keys.assign(x0.rows(), 0);
  state.x = std::move(x0);
  state.delta = delta;
  return state;
}

void aux_pgibbs_step(const auxk::GenSSMTarget& target, PGState& state, int N,
                     RngStream rng, const PgOptions& opts) {
  const RngStream it = rng.derive(stream::kIteration, state.iter);
  ++state.iter;

  const Mat u = auxk::sample_aux_obs(state.x, state.delta, it);
  const FeynmanKacModel fk = build_aux_fk(target, u, state.delta, opts);
  CsmcResult res = csmc_step(fk, state.x, state.keys, N, it);

  const bool changed = (res.traj.array() != state.x.array()).any();
  state.x = std::move(res.traj);
  state.keys = std::move(res.traj_keys);
  state.last_update = changed ? 1.0 : 0.0;
  if (changed) ++state.updates;
}

void adapt_delta(PGState& state, double target_rate) {
  const double n = static_cast<double>(std::max<long>(state.iter, 1));
  state.delta = std::exp(std::log(state.delta) +
                         std::pow(n, -0.6) * (state.last_update - target_rate));
}

}  // namespace auxmc::fkpg
