#include "auxmc/gauss.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace auxmc::gauss {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool try_llt(const Mat& a, Eigen::LLT<Mat>& llt) {
  llt.compute(a);
  return llt.info() == Eigen::Success;
}

// Jitter scale: eps * trace/d. A matrix whose trace underflows to <= 0 but
// is not exactly zero falls back to its largest entry as the scale.
double jitter_scale(const Mat& a) {
  double s = a.trace() / static_cast<double>(a.rows());
  if (s <= 0.0) s = a.cwiseAbs().maxCoeff();
  return s;
}

Eigen::LLT<Mat> factor_psd(const Mat& a) {
  Eigen::LLT<Mat> llt;
  if (try_llt(a, llt)) return llt;
  const double s = jitter_scale(a);
  const Mat eye = Mat::Identity(a.rows(), a.cols());
  for (double eps : {1e-10, 1e-8}) {
    if (try_llt(a + (eps * s) * eye, llt)) return llt;
  }
  throw FactorizationError("covariance not positive definite after jitter");
}

}  // namespace

Gaussian::Gaussian(Vec m, Mat c) : mean(std::move(m)), cov(std::move(c)) {
  require_dim(cov.rows() == cov.cols() && cov.rows() == mean.size(),
              "Gaussian: mean/cov dimensions inconsistent");
  cov = ((cov + cov.transpose()) * 0.5).eval();
}

Mat chol_psd(const Mat& a) {
  if (a.size() == 0) return a;
  if ((a.array() == 0.0).all()) return Mat::Zero(a.rows(), a.cols());
  return factor_psd(a).matrixL();
}

double log_pdf(const Vec& x, const Gaussian& p) {
  require_dim(x.size() == p.mean.size(), "log_pdf: dimension mismatch");
  const auto llt = factor_psd(p.cov);
  const Mat l = llt.matrixL();
  const Vec z = llt.matrixL().solve(x - p.mean);
  return -0.5 * (p.dim() * kLog2Pi + z.squaredNorm()) - l.diagonal().array().log().sum();
}

double isotropic_log_pdf(const Vec& resid, double var) {
  const double d = static_cast<double>(resid.size());
  return -0.5 * (d * (kLog2Pi + std::log(var)) + resid.squaredNorm() / var);
}

Vec sample(const Gaussian& p, RngStream& rng) {
  const Mat l = chol_psd(p.cov);
  return p.mean + l * rng.normal_vec(p.dim());
}

Gaussian condition(const Gaussian& joint, int dim_a, const Vec& observed_b) {
  const int n = joint.dim();
  const int dim_b = n - dim_a;
  require_dim(dim_a >= 0 && dim_b >= 0 && observed_b.size() == dim_b,
              "condition: block sizes inconsistent");
  if (dim_b == 0) return joint;

  const Vec mean_a = joint.mean.head(dim_a);
  const Vec mean_b = joint.mean.tail(dim_b);
  const Mat sig_aa = joint.cov.topLeftCorner(dim_a, dim_a);
  const Mat sig_ab = joint.cov.topRightCorner(dim_a, dim_b);
  const Mat sig_bb = joint.cov.bottomRightCorner(dim_b, dim_b);

  const auto llt = factor_psd(sig_bb);
  // gain = sig_ab sig_bb^{-1}
  const Mat gain = llt.solve(sig_ab.transpose()).transpose();
  return Gaussian(mean_a + gain * (observed_b - mean_b),
                  sig_aa - gain * sig_ab.transpose());
}

Mat solve_spd(const Mat& s, const Mat& b) {
  return factor_psd(s).solve(b);
}

}  // namespace auxmc::gauss
