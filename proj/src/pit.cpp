#include "auxmc/pit.hpp"

#include <Eigen/LU>

#include "auxmc/parallel.hpp"

namespace auxmc::pit {

namespace {

Mat symm(const Mat& a) { return 0.5 * (a + a.transpose()); }

Vec flatten(const Trajectory& traj) {
  const int rows = static_cast<int>(traj.rows());
  const int cols = static_cast<int>(traj.cols());
  Vec v(rows * cols);
  for (int t = 0; t < rows; ++t) v.segment(t * cols, cols) = traj.row(t);
  return v;
}

}  // namespace

AffineGaussElement compose(const AffineGaussElement& a,
                           const AffineGaussElement& b) {
  AffineGaussElement out;
  out.G = a.G * b.G;
  out.c = a.G * b.c + a.c;
  out.cov = symm(a.G * b.cov * a.G.transpose() + a.cov);
  return out;
}

AffineGaussElement identity_element(int d) {
  return {Mat::Identity(d, d), Vec::Zero(d), Mat::Zero(d, d)};
}

FilterScanElement combine(const FilterScanElement& u,
                          const FilterScanElement& v) {
  const int d = static_cast<int>(u.A.rows());
  const Mat eye = Mat::Identity(d, d);

  Eigen::PartialPivLU<Mat> lu(eye + u.C * v.J);
  Eigen::PartialPivLU<Mat> lu_t(eye + v.J * u.C);

  FilterScanElement out;
  out.A = v.A * lu.solve(u.A);
  out.b = v.A * lu.solve(u.b + u.C * v.eta) + v.b;
  out.C = symm(v.A * lu.solve(u.C) * v.A.transpose() + v.C);
  out.eta = u.A.transpose() * lu_t.solve(v.eta - v.J * u.b) + u.eta;
  out.J = symm(u.A.transpose() * lu_t.solve(v.J) * u.A + u.J);
  return out;
}

std::vector<AffineGaussElement> build_backward_elements(
    const lgssm::Model& model, const lgssm::FilterResult& fr) {
  const int T = model.horizon();
  std::vector<AffineGaussElement> out(T);
  for (int t = 0; t < T; ++t) {
    lgssm::BackwardStep bs = lgssm::backward_step(model, fr, t);
    out[t] = {std::move(bs.gain), std::move(bs.offset), std::move(bs.cov)};
  }
  return out;
}

std::vector<AffineGaussElement> realize_noise(
    std::vector<AffineGaussElement> elements, NoiseSource& noise) {
  const int dx = elements.empty() ? 0 : static_cast<int>(elements[0].G.rows());
  for (std::size_t t = 0; t < elements.size(); ++t) {
    AffineGaussElement& e = elements[t];
    if (!(e.cov.array() == 0.0).all()) {
      const Mat l = gauss::chol_psd(e.cov);
      e.c = (e.c + l * noise.normal(stream::kBackwardNoise, t, dx)).eval();
    }
    e.cov.setZero();
  }
  return elements;
}

Trajectory prefix_sample(const lgssm::Model& model,
                         const lgssm::FilterResult& fr, NoiseSource& noise,
                         int workers, scan::ScanStats* stats) {
  const int T = model.horizon();
  const int dx = model.dx();
  Trajectory traj(T + 1, dx);

  const Mat l_term = gauss::chol_psd(fr.filt_cov[T]);
  const Vec shift_term = l_term * noise.normal(stream::kTerminalDraw, 0, dx);
  traj.row(T) = (fr.filt_mean[T] + shift_term).transpose();
  if (T == 0) {
    if (stats != nullptr) *stats = {};
    return traj;
  }

  std::vector<AffineGaussElement> suffix =
      realize_noise(build_backward_elements(model, fr), noise);
  scan::ScanStats st = scan::suffix_scan(
      suffix,
      [](const AffineGaussElement& a, const AffineGaussElement& b) {
        return compose(a, b);
      },
      workers);
  if (stats != nullptr) *stats = st;

  const Vec x_last = traj.row(T).transpose();
  parallel_for(T, workers, [&](long t) {
    traj.row(t) = (suffix[t].G * x_last + suffix[t].c).transpose();
  });
  return traj;
}

Trajectory prefix_sample(const lgssm::Model& model,
                         const lgssm::FilterResult& fr, RngStream rng,
                         int workers, scan::ScanStats* stats) {
  StreamNoise noise(rng);
  return prefix_sample(model, fr, noise, workers, stats);
}

lgssm::FilterResult parallel_filter(const lgssm::Model& model, const Mat& obs,
                                    int workers, scan::ScanStats* stats) {
  const int T = model.horizon();
  const int dx = model.dx();
  require_dim(obs.rows() == T + 1 && obs.cols() == model.dy(),
              "parallel_filter: observation array shape");
  const Mat eye = Mat::Identity(dx, dx);

  std::vector<FilterScanElement> el(T + 1);
  parallel_for(T + 1, workers, [&](long t) {
    // Prior moments of x_t given x_{t-1} (the prior itself at t = 0).
    const Mat& f = t == 0 ? eye : model.F(t - 1);
    const Vec b_dyn = t == 0 ? model.m0() : model.b(t - 1);
    const Mat& q = t == 0 ? model.P0() : model.Q(t - 1);
    FilterScanElement& e = el[t];
    if (model.observed(static_cast<int>(t))) {
      const Mat& h = model.H(t);
      const Vec innov = obs.row(t).transpose() - h * b_dyn - model.c(t);
      const Mat s = symm(h * q * h.transpose() + model.R(t));
      const Mat gain = gauss::solve_spd(s, h * q).transpose();
      const Mat hs = gauss::solve_spd(s, h).transpose();  // H' S^{-1}
      const Mat a = eye - gain * h;
      e.A = a * f;
      e.b = b_dyn + gain * innov;
      e.C = symm(a * q * a.transpose() + gain * model.R(t) * gain.transpose());
      e.eta = f.transpose() * (hs * innov);
      e.J = symm(f.transpose() * hs * h * f);
    } else {
      e.A = f;
      e.b = b_dyn;
      e.C = q;
      e.eta = Vec::Zero(dx);
      e.J = Mat::Zero(dx, dx);
    }
    if (t == 0) e.A.setZero();
  });

  scan::ScanStats st = scan::inclusive_scan(
      el,
      [](const FilterScanElement& u, const FilterScanElement& v) {
        return combine(u, v);
      },
      workers);
  if (stats != nullptr) *stats = st;

  lgssm::FilterResult fr;
  fr.pred_mean.resize(T + 1);
  fr.pred_cov.resize(T + 1);
  fr.filt_mean.resize(T + 1);
  fr.filt_cov.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    fr.filt_mean[t] = el[t].b;
    fr.filt_cov[t] = el[t].C;
    if (t == 0) {
      fr.pred_mean[t] = model.m0();
      fr.pred_cov[t] = model.P0();
    } else {
      fr.pred_mean[t] = model.F(t - 1) * fr.filt_mean[t - 1] + model.b(t - 1);
      fr.pred_cov[t] = symm(
          model.F(t - 1) * fr.filt_cov[t - 1] * model.F(t - 1).transpose() +
          model.Q(t - 1));
    }
    if (model.observed(t)) {
      const Mat& h = model.H(t);
      const Mat s = symm(h * fr.pred_cov[t] * h.transpose() + model.R(t));
      fr.log_marginal += gauss::log_pdf(
          obs.row(t).transpose(),
          gauss::Gaussian(h * fr.pred_mean[t] + model.c(t), s));
    }
  }
  return fr;
}

namespace {

struct DncNode {
  int l = 0, m = -1, r = 0;
  std::uint64_t id = 1;
  int left = -1, right = -1;  // child slots; -1 for leaves
};

}  // namespace

Trajectory dnc_sample(const lgssm::Model& model, const lgssm::FilterResult& fr,
                      NoiseSource& noise, int workers) {
  const int T = model.horizon();
  const int dx = model.dx();
  Trajectory traj(T + 1, dx);

  const Mat l_term = gauss::chol_psd(fr.filt_cov[T]);
  const Vec shift_term = l_term * noise.normal(stream::kTerminalDraw, 0, dx);
  traj.row(T) = (fr.filt_mean[T] + shift_term).transpose();
  if (T == 0) return traj;

  const std::vector<AffineGaussElement> base =
      build_backward_elements(model, fr);

  // Fixed segment tree over [0, T], breadth-first; shape depends only on T.
  std::vector<DncNode> nodes;
  std::vector<std::pair<int, int>> levels;  // [begin, end) per level
  nodes.push_back({0, -1, T, 1, -1, -1});
  levels.emplace_back(0, 1);
  while (true) {
    const auto [lo, hi] = levels.back();
    int begin = static_cast<int>(nodes.size());
    for (int i = lo; i < hi; ++i) {
      DncNode n = nodes[i];
      if (n.r - n.l < 2) continue;
      const int m = (n.l + n.r) / 2;
      nodes[i].m = m;
      nodes[i].left = static_cast<int>(nodes.size());
      nodes.push_back({n.l, -1, m, 2 * n.id, -1, -1});
      nodes[i].right = static_cast<int>(nodes.size());
      nodes.push_back({m, -1, n.r, 2 * n.id + 1, -1, -1});
    }
    if (begin == static_cast<int>(nodes.size())) break;
    levels.emplace_back(begin, static_cast<int>(nodes.size()));
  }

  // Composed element per node, deepest level first.
  std::vector<AffineGaussElement> elem(nodes.size());
  for (int lev = static_cast<int>(levels.size()) - 1; lev >= 0; --lev) {
    const auto [lo, hi] = levels[lev];
    parallel_for(hi - lo, workers, [&](long k) {
      const int i = lo + static_cast<int>(k);
      const DncNode& n = nodes[i];
      elem[i] = n.left < 0 ? base[n.l] : compose(elem[n.left], elem[n.right]);
    });
  }

  // Noise is drawn serially in a fixed order (root conditional, then
  // midpoints level by level) so deterministic probes see a stable layout;
  // the parallel section below only reads it.
  const Vec root_xi = noise.normal(stream::kBackwardNoise, 0, dx);
  std::vector<Vec> mid_xi(nodes.size());
  for (const auto& [lo, hi] : levels)
    for (int i = lo; i < hi; ++i)
      if (nodes[i].left >= 0)
        mid_xi[i] = noise.normal(stream::kDncBridge, nodes[i].id, dx);

  // x_0 | x_T through the root element; at T = 1 this is exactly the
  // sequential sampler's single backward step.
  {
    const Mat l = gauss::chol_psd(elem[0].cov);
    const Vec shifted = elem[0].c + l * root_xi;
    traj.row(0) = (elem[0].G * traj.row(T).transpose() + shifted).transpose();
  }

  for (const auto& [lo, hi] : levels) {
    parallel_for(hi - lo, workers, [&](long k) {
      const int i = lo + static_cast<int>(k);
      const DncNode& n = nodes[i];
      if (n.left < 0) return;
      // Bridge p(x_m | x_l, x_r): prior from the right-child element applied
      // to x_r, conditioned on x_l through the left-child element.
      const AffineGaussElement& e_lm = elem[n.left];
      const AffineGaussElement& e_mr = elem[n.right];
      const Vec x_l = traj.row(n.l).transpose();
      const Vec x_r = traj.row(n.r).transpose();
      const Vec mu = e_mr.G * x_r + e_mr.c;
      const Mat cross = e_mr.cov * e_lm.G.transpose();  // cov(x_m, x_l | x_r)
      Mat gain;
      if ((cross.array() == 0.0).all()) {
        gain = Mat::Zero(dx, dx);
      } else {
        const Mat s =
            symm(e_lm.G * e_mr.cov * e_lm.G.transpose() + e_lm.cov);
        gain = gauss::solve_spd(s, cross.transpose()).transpose();
      }
      const Mat a = Mat::Identity(dx, dx) - gain * e_lm.G;
      const Mat cov = symm(a * e_mr.cov * a.transpose() +
                           gain * e_lm.cov * gain.transpose());
      const Vec mean = mu + gain * (x_l - e_lm.G * mu - e_lm.c);
      const Mat l = gauss::chol_psd(cov);
      traj.row(n.m) = (mean + l * mid_xi[i]).transpose();
    });
  }
  return traj;
}

Trajectory dnc_sample(const lgssm::Model& model, const lgssm::FilterResult& fr,
                      RngStream rng, int workers) {
  StreamNoise noise(rng);
  return dnc_sample(model, fr, noise, workers);
}

gauss::Gaussian extract_affine_law(
    const std::function<Trajectory(NoiseSource&)>& sampler) {
  ProbeNoise probe;
  probe.reset(-1);
  const Trajectory base = sampler(probe);
  const int n = static_cast<int>(base.rows() * base.cols());
  const int noise_dims = probe.total_dims();

  const Vec mean = flatten(base);
  Mat a(n, noise_dims);
  for (int k = 0; k < noise_dims; ++k) {
    probe.reset(k);
    a.col(k) = flatten(sampler(probe)) - mean;
  }
  return gauss::Gaussian(mean, a * a.transpose());
}

gauss::Gaussian extract_affine_law(Sampler which, const lgssm::Model& model,
                                   const lgssm::FilterResult& fr) {
  return extract_affine_law([&](NoiseSource& noise) {
    switch (which) {
      case Sampler::kSequential:
        return lgssm::backward_sample(model, fr, noise);
      case Sampler::kPrefix:
        return prefix_sample(model, fr, noise);
      default:
        return dnc_sample(model, fr, noise);
    }
  });
}

}  // namespace auxmc::pit
