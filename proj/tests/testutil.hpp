#ifndef AUXMC_TESTS_TESTUTIL_HPP
#define AUXMC_TESTS_TESTUTIL_HPP

#include <cmath>
#include <vector>

#include "auxmc/bench/diagnostics.hpp"
#include "auxmc/fkpg.hpp"
#include "auxmc/gauss.hpp"
#include "auxmc/lgssm.hpp"
#include "auxmc/rng.hpp"
#include "auxmc/target.hpp"

namespace testutil {

using auxmc::Mat;
using auxmc::RngStream;
using auxmc::Trajectory;
using auxmc::Vec;

inline Mat random_spd(RngStream& rng, int d, double scale = 1.0) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i) g.row(i) = rng.normal_vec(d).transpose();
  return scale * (g * g.transpose() / d + 0.2 * Mat::Identity(d, d));
}

inline Mat random_mat(RngStream& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) m.row(i) = scale * rng.normal_vec(cols).transpose();
  return m;
}

// Random LGSSM with contractive dynamics. time_varying gives every step its
// own parameters; with_mask hides roughly a third of the observation times.
inline auxmc::lgssm::Model random_model(RngStream& rng, int T, int dx, int dy,
                                        bool time_varying = false,
                                        bool with_mask = false) {
  auto dyn_f = [&](RngStream& r) {
    Mat f = random_mat(r, dx, dx, 0.6 / std::sqrt(static_cast<double>(dx)));
    return f;
  };
  Vec m0 = rng.normal_vec(dx);
  Mat p0 = random_spd(rng, dx);
  std::vector<Mat> F, Q, H, R;
  std::vector<Vec> b, c;
  const int n_dyn = time_varying ? std::max(T, 1) : 1;
  const int n_obs = time_varying ? T + 1 : 1;
  for (int t = 0; t < n_dyn; ++t) {
    F.push_back(dyn_f(rng));
    b.push_back(0.3 * rng.normal_vec(dx));
    Q.push_back(random_spd(rng, dx, 0.5));
  }
  for (int t = 0; t < n_obs; ++t) {
    H.push_back(random_mat(rng, dy, dx));
    c.push_back(0.3 * rng.normal_vec(dy));
    R.push_back(random_spd(rng, dy, 0.5));
  }
  std::vector<std::uint8_t> mask;
  if (with_mask) {
    mask.resize(T + 1, 1);
    for (int t = 0; t <= T; ++t)
      if (rng.next_uniform() < 0.33) mask[t] = 0;
    mask[0] = 1;  // keep at least one observation
  }
  return auxmc::lgssm::Model(T, m0, p0, std::move(F), std::move(b), std::move(Q),
                             std::move(H), std::move(c), std::move(R),
                             std::move(mask));
}

// Observations drawn from the model's own law.
inline Mat simulate_obs(const auxmc::lgssm::Model& m, RngStream rng) {
  Mat obs = Mat::Zero(m.horizon() + 1, m.dy());
  RngStream s = rng.derive(auxmc::stream::kSimulate, 0);
  Vec x = m.m0() + auxmc::gauss::chol_psd(m.P0()) * s.normal_vec(m.dx());
  for (int t = 0; t <= m.horizon(); ++t) {
    if (t > 0)
      x = m.F(t - 1) * x + m.b(t - 1) +
          auxmc::gauss::chol_psd(m.Q(t - 1)) * s.normal_vec(m.dx());
    obs.row(t) = (m.H(t) * x + m.c(t) +
                  auxmc::gauss::chol_psd(m.R(t)) * s.normal_vec(m.dy()))
                     .transpose();
  }
  return obs;
}

// The LGSSM posterior as a GenSSMTarget with the Gaussian observation factors
// kept in exact form: the auxiliary proposal reproduces the target exactly.
inline auxmc::auxk::GenSSMTarget lgssm_target_exact(const auxmc::lgssm::Model& m,
                                                    const Mat& obs) {
  const int T = m.horizon();
  std::vector<Mat> F;
  std::vector<Vec> b;
  std::vector<Mat> Q;
  for (int t = 0; t < T; ++t) {
    F.push_back(m.F(t));
    b.push_back(m.b(t));
    Q.push_back(m.Q(t));
  }
  std::vector<auxmc::auxk::Potential> pots(T + 1);
  for (int t = 0; t <= T; ++t) {
    if (!m.observed(t)) continue;
    pots[t].exact = auxmc::auxk::ExactGaussPotential{
        m.H(t), m.c(t), m.R(t), obs.row(t).transpose()};
  }
  return auxmc::auxk::GenSSMTarget::linear(T, m.m0(), m.P0(), std::move(F),
                                           std::move(b), std::move(Q),
                                           std::move(pots));
}

// Same law, but the observation factors enter as generic differentiable
// log-potentials, so the proposal only sees their gradient linearization.
inline auxmc::auxk::GenSSMTarget lgssm_target_generic(
    const auxmc::lgssm::Model& m, const Mat& obs) {
  const int T = m.horizon();
  std::vector<Mat> F;
  std::vector<Vec> b;
  std::vector<Mat> Q;
  for (int t = 0; t < T; ++t) {
    F.push_back(m.F(t));
    b.push_back(m.b(t));
    Q.push_back(m.Q(t));
  }
  std::vector<auxmc::auxk::Potential> pots(T + 1);
  for (int t = 0; t <= T; ++t) {
    if (!m.observed(t)) continue;
    const Mat H = m.H(t);
    const Mat R = m.R(t);
    const Vec resid0 = obs.row(t).transpose() - m.c(t);
    pots[t].log_g = [H, R, resid0](const Vec& x) {
      return auxmc::gauss::log_pdf(resid0 - H * x,
                                   auxmc::gauss::Gaussian(Vec::Zero(H.rows()), R));
    };
    pots[t].grad_log_g = [H, R, resid0](const Vec& x) {
      return Vec(H.transpose() * auxmc::gauss::solve_spd(R, resid0 - H * x));
    };
  }
  return auxmc::auxk::GenSSMTarget::linear(T, m.m0(), m.P0(), std::move(F),
                                           std::move(b), std::move(Q),
                                           std::move(pots));
}

// Bootstrap Feynman-Kac form of an LGSSM: propose from the dynamics, weight
// by the observation density. Unbiased likelihood estimates by construction.
inline auxmc::fkpg::FeynmanKacModel bootstrap_fk(const auxmc::lgssm::Model& m,
                                                 const Mat& obs) {
  namespace gauss = auxmc::gauss;
  auxmc::fkpg::FeynmanKacModel fk;
  fk.T = m.horizon();
  fk.dx = m.dx();
  fk.m0_sample = [&m](RngStream& rng) {
    return gauss::sample(gauss::Gaussian(m.m0(), m.P0()), rng);
  };
  fk.m0_logpdf = [&m](const Vec& x) {
    return gauss::log_pdf(x, gauss::Gaussian(m.m0(), m.P0()));
  };
  fk.m_sample = [&m](int t, const Vec& xp, RngStream& rng) {
    return gauss::sample(
        gauss::Gaussian(m.F(t - 1) * xp + m.b(t - 1), m.Q(t - 1)), rng);
  };
  fk.m_logpdf = [&m](int t, const Vec& xp, const Vec& x) {
    return gauss::log_pdf(
        x, gauss::Gaussian(m.F(t - 1) * xp + m.b(t - 1), m.Q(t - 1)));
  };
  auto obs_logpdf = [&m, obs](int t, const Vec& x) {
    return gauss::log_pdf(obs.row(t).transpose(),
                          gauss::Gaussian(m.H(t) * x + m.c(t), m.R(t)));
  };
  fk.log_g0 = [obs_logpdf](const Vec& x, std::uint64_t) {
    return obs_logpdf(0, x);
  };
  fk.log_g = [obs_logpdf](int t, const Vec&, const Vec& x, std::uint64_t) {
    return obs_logpdf(t, x);
  };
  return fk;
}

// Monte Carlo standard error of a chain mean, inflated for autocorrelation;
// falls back to iid scaling for very short or constant stretches.
inline double chain_se(const Vec& chain) {
  const auto n = static_cast<double>(chain.size());
  const double mu = chain.mean();
  const double sd = std::sqrt((chain.array() - mu).square().sum() /
                              std::max(n - 1.0, 1.0));
  if (chain.size() < 100 || sd == 0.0) return sd / std::sqrt(n);
  return auxmc::bench::mcse(chain);
}

// Central finite-difference gradient with h = 1e-5 (1 + |x_i|) per coordinate.
template <class F>
Vec fd_gradient(const F& f, const Vec& x) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vec& got, const Vec& want) {
  const double scale = std::max(1.0, want.norm());
  return (got - want).norm() / scale;
}

}  // namespace testutil

#endif
