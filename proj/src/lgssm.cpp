#include "auxmc/lgssm.hpp"

#include <cmath>
#include <utility>

#include "auxmc/testhooks.hpp"

namespace auxmc::lgssm {

namespace {

Mat symm(const Mat& a) { return 0.5 * (a + a.transpose()); }

void check_square(const Mat& a, int d, const char* what) {
  require_dim(a.rows() == d && a.cols() == d, what);
}

}  // namespace

Model::Model(int T, Vec m0, Mat P0, std::vector<Mat> F, std::vector<Vec> b,
             std::vector<Mat> Q, std::vector<Mat> H, std::vector<Vec> c,
             std::vector<Mat> R, std::vector<std::uint8_t> obs_mask)
    : T_(T),
      dx_(static_cast<int>(m0.size())),
      dy_(H.empty() ? 0 : static_cast<int>(H[0].rows())),
      m0_(std::move(m0)),
      P0_(std::move(P0)),
      F_(std::move(F)),
      Q_(std::move(Q)),
      H_(std::move(H)),
      R_(std::move(R)),
      b_(std::move(b)),
      c_(std::move(c)),
      mask_(std::move(obs_mask)) {
  require_dim(T_ >= 0, "Model: negative horizon");
  check_square(P0_, dx_, "Model: P0 dimension");
  P0_ = symm(P0_);

  auto expect = [&](std::size_t got, std::size_t n, const char* what) {
    require_dim(got == n || got == 1 || (n == 0 && got <= 1), what);
  };
  expect(F_.size(), T_, "Model: F count");
  expect(b_.size(), T_, "Model: b count");
  expect(Q_.size(), T_, "Model: Q count");
  expect(H_.size(), T_ + 1, "Model: H count");
  expect(c_.size(), T_ + 1, "Model: c count");
  expect(R_.size(), T_ + 1, "Model: R count");
  require_dim(mask_.empty() || mask_.size() == static_cast<std::size_t>(T_ + 1),
              "Model: mask length");

  for (auto& f : F_) check_square(f, dx_, "Model: F dimension");
  for (auto& v : b_) require_dim(v.size() == dx_, "Model: b dimension");
  for (auto& q : Q_) {
    check_square(q, dx_, "Model: Q dimension");
    q = symm(q);
  }
  for (auto& h : H_)
    require_dim(h.rows() == dy_ && h.cols() == dx_, "Model: H dimension");
  for (auto& v : c_) require_dim(v.size() == dy_, "Model: c dimension");
  for (auto& r : R_) {
    check_square(r, dy_, "Model: R dimension");
    r = symm(r);
  }
}

Model Model::homogeneous(int T, Vec m0, Mat P0, Mat F, Vec b, Mat Q, Mat H,
                         Vec c, Mat R, std::vector<std::uint8_t> obs_mask) {
  return Model(T, std::move(m0), std::move(P0), {std::move(F)}, {std::move(b)},
               {std::move(Q)}, {std::move(H)}, {std::move(c)}, {std::move(R)},
               std::move(obs_mask));
}

FilterResult kalman_filter(const Model& model, const Mat& obs) {
  const int T = model.horizon();
  const int dx = model.dx();
  require_dim(obs.rows() == T + 1 && obs.cols() == model.dy(),
              "kalman_filter: observation array shape");

  FilterResult fr;
  fr.pred_mean.resize(T + 1);
  fr.pred_cov.resize(T + 1);
  fr.filt_mean.resize(T + 1);
  fr.filt_cov.resize(T + 1);

  const Mat eye = Mat::Identity(dx, dx);
  Vec m = model.m0();
  Mat p = model.P0();

  for (int t = 0; t <= T; ++t) {
    if (t > 0) {
      m = (model.F(t - 1) * m + model.b(t - 1)).eval();
      p = symm(model.F(t - 1) * p * model.F(t - 1).transpose() + model.Q(t - 1));
    }
    fr.pred_mean[t] = m;
    fr.pred_cov[t] = p;

    if (model.observed(t)) {
      const Mat& h = model.H(t);
      const Vec innov = obs.row(t).transpose() - h * m - model.c(t);
      const Mat s = symm(h * p * h.transpose() + model.R(t));
      const Mat gain = gauss::solve_spd(s, h * p).transpose();
      m += gain * innov;
      const Mat a = eye - gain * h;
      p = symm(a * p * a.transpose() + gain * model.R(t) * gain.transpose());
      fr.log_marginal += gauss::log_pdf(obs.row(t).transpose(),
                                        gauss::Gaussian(h * fr.pred_mean[t] + model.c(t), s));
    }
    fr.filt_mean[t] = m;
    fr.filt_cov[t] = p;
  }
  return fr;
}

std::vector<gauss::Gaussian> rts_smoother(const Model& model,
                                          const FilterResult& fr) {
  const int T = model.horizon();
  std::vector<gauss::Gaussian> out(T + 1);
  out[T] = gauss::Gaussian(fr.filt_mean[T], fr.filt_cov[T]);
  for (int t = T - 1; t >= 0; --t) {
    const BackwardStep bs = backward_step(model, fr, t);
    const Vec mean = bs.gain * out[t + 1].mean + bs.offset;
    const Mat cov =
        symm(bs.cov + bs.gain * out[t + 1].cov * bs.gain.transpose());
    out[t] = gauss::Gaussian(mean, cov);
  }
  return out;
}

BackwardStep backward_step(const Model& model, const FilterResult& fr, int t) {
  const int dx = model.dx();
  const Mat& f = model.F(t);
  const Mat& p = fr.filt_cov[t];
  const Mat cross = p * f.transpose();          // cov(x_t, x_{t+1} | y_{0:t})
  const Mat& s = fr.pred_cov[t + 1];            // F P F' + Q

  BackwardStep bs;
  if ((cross.array() == 0.0).all()) {
    bs.gain = Mat::Zero(dx, dx);
  } else {
    bs.gain = gauss::solve_spd(s, cross.transpose()).transpose();
  }
  if (testhooks::flip_backward_gain.load(std::memory_order_relaxed))
    bs.gain = -bs.gain;
  bs.offset = fr.filt_mean[t] - bs.gain * (f * fr.filt_mean[t] + model.b(t));
  // Joseph form of P - G F P, stable near-singular.
  const Mat a = Mat::Identity(dx, dx) - bs.gain * f;
  bs.cov = symm(a * p * a.transpose() + bs.gain * model.Q(t) * bs.gain.transpose());
  return bs;
}

Trajectory backward_sample(const Model& model, const FilterResult& fr,
                           NoiseSource& noise) {
  const int T = model.horizon();
  const int dx = model.dx();
  Trajectory traj(T + 1, dx);

  const Mat l_term = gauss::chol_psd(fr.filt_cov[T]);
  const Vec shift_term = l_term * noise.normal(stream::kTerminalDraw, 0, dx);
  traj.row(T) = (fr.filt_mean[T] + shift_term).transpose();
  for (int t = T - 1; t >= 0; --t) {
    const BackwardStep bs = backward_step(model, fr, t);
    const Mat l = gauss::chol_psd(bs.cov);
    // Noise folded into the offset before applying the map: the scan-based
    // samplers realize their elements the same way, so shared streams give
    // bit-equal states wherever no re-association happens (e.g. T=1).
    const Vec shifted =
        bs.offset + l * noise.normal(stream::kBackwardNoise, t, dx);
    traj.row(t) = (bs.gain * traj.row(t + 1).transpose() + shifted).transpose();
  }
  return traj;
}

Trajectory backward_sample(const Model& model, const FilterResult& fr,
                           RngStream rng) {
  StreamNoise noise(rng);
  return backward_sample(model, fr, noise);
}

double path_logpdf(const Model& model, const Mat& obs, const Trajectory& traj,
                   const FilterResult& fr) {
  const int T = model.horizon();
  require_dim(traj.rows() == T + 1 && traj.cols() == model.dx(),
              "path_logpdf: trajectory shape");

  double lp = gauss::log_pdf(traj.row(0).transpose(),
                             gauss::Gaussian(model.m0(), model.P0()));
  for (int t = 0; t < T; ++t) {
    const Vec mean = model.F(t) * traj.row(t).transpose() + model.b(t);
    lp += gauss::log_pdf(traj.row(t + 1).transpose(),
                         gauss::Gaussian(mean, model.Q(t)));
  }
  for (int t = 0; t <= T; ++t) {
    if (!model.observed(t)) continue;
    const Vec mean = model.H(t) * traj.row(t).transpose() + model.c(t);
    lp += gauss::log_pdf(obs.row(t).transpose(),
                         gauss::Gaussian(mean, model.R(t)));
  }
  return lp - fr.log_marginal;
}

DenseOracle dense_oracle(const Model& model, const Mat& obs, int cap) {
  const int T = model.horizon();
  const int dx = model.dx();
  const int dy = model.dy();
  const int n = (T + 1) * dx;
  if (n > cap) throw DimensionError("dense_oracle: state dimension exceeds cap");

  // Joint prior over stacked x_{0:T}.
  Vec mean(n);
  Mat cov = Mat::Zero(n, n);
  mean.head(dx) = model.m0();
  cov.topLeftCorner(dx, dx) = model.P0();
  for (int t = 0; t < T; ++t) {
    const Mat& f = model.F(t);
    mean.segment((t + 1) * dx, dx) = f * mean.segment(t * dx, dx) + model.b(t);
    for (int s = 0; s <= t; ++s) {
      const Mat block = f * cov.block(t * dx, s * dx, dx, dx);
      cov.block((t + 1) * dx, s * dx, dx, dx) = block;
      cov.block(s * dx, (t + 1) * dx, dx, dx) = block.transpose();
    }
    cov.block((t + 1) * dx, (t + 1) * dx, dx, dx) =
        f * cov.block(t * dx, t * dx, dx, dx) * f.transpose() + model.Q(t);
  }
  cov = symm(cov);

  std::vector<int> obs_times;
  for (int t = 0; t <= T; ++t)
    if (model.observed(t)) obs_times.push_back(t);
  if (obs_times.empty()) return {gauss::Gaussian(mean, cov), 0.0};

  const int ny = static_cast<int>(obs_times.size()) * dy;
  Mat h_all = Mat::Zero(ny, n);
  Vec c_all(ny), y_all(ny);
  Mat r_all = Mat::Zero(ny, ny);
  for (std::size_t k = 0; k < obs_times.size(); ++k) {
    const int t = obs_times[k];
    const int r0 = static_cast<int>(k) * dy;
    h_all.block(r0, t * dx, dy, dx) = model.H(t);
    c_all.segment(r0, dy) = model.c(t);
    r_all.block(r0, r0, dy, dy) = model.R(t);
    y_all.segment(r0, dy) = obs.row(t).transpose();
  }

  // Joint over (x, y), then condition on y.
  const Vec mean_y = h_all * mean + c_all;
  const Mat cov_xy = cov * h_all.transpose();
  const Mat cov_yy = symm(h_all * cov_xy + r_all);

  Vec joint_mean(n + ny);
  joint_mean << mean, mean_y;
  Mat joint_cov(n + ny, n + ny);
  joint_cov.topLeftCorner(n, n) = cov;
  joint_cov.topRightCorner(n, ny) = cov_xy;
  joint_cov.bottomLeftCorner(ny, n) = cov_xy.transpose();
  joint_cov.bottomRightCorner(ny, ny) = cov_yy;

  DenseOracle out;
  out.posterior = gauss::condition(gauss::Gaussian(joint_mean, joint_cov), n, y_all);
  out.log_evidence = gauss::log_pdf(y_all, gauss::Gaussian(mean_y, cov_yy));
  return out;
}

}  // namespace auxmc::lgssm
