#include "auxmc/bench/models.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "auxmc/rng.hpp"

namespace auxmc::bench {

void check_model_spec(const ModelSpec& spec) {
  if (spec.T < 0) throw ConfigError("model.T must be >= 0");
  if (spec.dx < 1) throw ConfigError("model.dx must be >= 1");
  if (spec.dy < 1) throw ConfigError("model.dy must be >= 1");
  if (spec.grid < 1) throw ConfigError("model.grid must be >= 1");
  if (spec.sv_sig2 < 0) throw ConfigError("model.sv_sig2 must be >= 0");
  if (spec.sv_rho < 0 || spec.sv_rho >= 1)
    throw ConfigError("model.sv_rho must be in [0, 1)");
  if (spec.lz_h <= 0) throw ConfigError("model.lz_h must be > 0");
  if (spec.lz_gamma <= 0) throw ConfigError("model.lz_gamma must be > 0");
  if (spec.lz_obs_var <= 0) throw ConfigError("model.lz_obs_var must be > 0");
  if (spec.st_kappa2 <= 0) throw ConfigError("model.st_kappa2 must be > 0");
  if (spec.st_tau2 <= 0) throw ConfigError("model.st_tau2 must be > 0");
  if (std::abs(spec.st_phi) >= 1)
    throw ConfigError("model.st_phi must satisfy |phi| < 1");
  if (spec.g1_q <= 0) throw ConfigError("model.g1_q must be > 0");
  if (spec.g1_p0 <= 0) throw ConfigError("model.g1_p0 must be > 0");
}


namespace {

Mat random_spd(RngStream& s, int d, double ridge) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i) g.row(i) = s.normal_vec(d).transpose();
  return Mat(g * g.transpose() / d + ridge * Mat::Identity(d, d));
}

// Shared by simulate and make_target so both see identical matrices.
struct SynthMats {
  Vec m0, b;
  Mat P0, F, Q, H, R;
};

SynthMats synth_mats(const ModelSpec& spec) {
  RngStream ms = RngStream::from_seed(spec.data_seed).derive(stream::kParam, 0);
  const int dx = spec.dx, dy = spec.dy;
  SynthMats m;
  m.F = Mat(dx, dx);
  for (int i = 0; i < dx; ++i)
    m.F.row(i) = (ms.normal_vec(dx) / std::sqrt(double(dx))).transpose();
  const double radius = m.F.eigenvalues().cwiseAbs().maxCoeff();
  m.F *= 0.7 / std::max(radius, 1e-12);
  m.b = 0.1 * ms.normal_vec(dx);
  m.Q = random_spd(ms, dx, 0.1);
  m.m0 = ms.normal_vec(dx);
  m.P0 = random_spd(ms, dx, 0.1);
  m.H = Mat(dy, dx);
  for (int i = 0; i < dy; ++i) m.H.row(i) = ms.normal_vec(dx).transpose();
  m.R = random_spd(ms, dy, 0.1);
  return m;
}

Vec lorenz_drift(const ModelSpec& s, const Vec& v) {
  Vec f(3);
  f << s.lz_sigma * (v[1] - v[0]), v[0] * (s.lz_rho - v[2]) - v[1],
      v[0] * v[1] - s.lz_beta * v[2];
  return f;
}

Mat lorenz_jac(const ModelSpec& s, const Vec& v) {
  Mat j(3, 3);
  j << -s.lz_sigma, s.lz_sigma, 0.0,  //
      s.lz_rho - v[2], -1.0, -v[0],   //
      v[1], v[0], -s.lz_beta;
  return j;
}

Vec lorenz_m0() { return (Vec(3) << 1.0, 1.0, 25.0).finished(); }

// Graph Laplacian of the k x k four-neighbour lattice (row-major nodes).
Mat lattice_laplacian(int k) {
  const int n = k * k;
  Mat lap = Mat::Zero(n, n);
  auto link = [&](int a, int b) {
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
  };
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      if (c + 1 < k) link(r * k + c, r * k + c + 1);
      if (r + 1 < k) link(r * k + c, (r + 1) * k + c);
    }
  return lap;
}

Mat spatio_innovation_cov(const ModelSpec& spec) {
  const int n = spec.grid * spec.grid;
  const Mat prec =
      spec.st_kappa2 * Mat::Identity(n, n) + lattice_laplacian(spec.grid);
  Mat cov = spec.st_tau2 * prec.llt().solve(Mat::Identity(n, n));
  return Mat((cov + cov.transpose()) / 2.0);
}

Mat stochvol_q(const ModelSpec& spec) {
  const int d = spec.dx;
  Mat q = spec.sv_sig2 *
          ((1.0 - spec.sv_rho) * Mat::Identity(d, d) +
           spec.sv_rho * Mat::Ones(d, d));
  return q;
}

// Stationary covariance of x = phi x' + eps when it exists, else the
// innovation covariance itself (non-stationary dynamics; diffuse-ish start).
Mat ar1_p0(double phi, const Mat& q) {
  if (std::abs(phi) < 1.0) return Mat(q / (1.0 - phi * phi));
  std::cerr << "warning: |phi| >= 1, dynamics non-stationary; using the "
               "innovation covariance as P0\n";
  return q;
}

long poisson_draw(double lambda, RngStream& s) {
  const double u = s.next_uniform();
  double p = std::exp(-lambda), cdf = p;
  long k = 0;
  while (u > cdf && k < 100000) {
    ++k;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

}  // namespace

int latent_dim(const ModelSpec& spec) {
  if (spec.kind == "lgssm-synthetic" || spec.kind == "stochvol")
    return spec.dx;
  if (spec.kind == "diffusion-smoothing") return 3;
  if (spec.kind == "spatio-temporal") return spec.grid * spec.grid;
  if (spec.kind == "grid-1d-test") return 1;
  throw ConfigError("unknown model kind: " + spec.kind);
}

int obs_dim(const ModelSpec& spec) {
  if (spec.kind == "lgssm-synthetic") return spec.dy;
  if (spec.kind == "stochvol") return spec.dx;
  if (spec.kind == "diffusion-smoothing") return 1;
  if (spec.kind == "spatio-temporal") return spec.grid * spec.grid;
  if (spec.kind == "grid-1d-test") return 0;
  throw ConfigError("unknown model kind: " + spec.kind);
}

SimResult simulate(const ModelSpec& spec) {
  check_model_spec(spec);
  const int dx = latent_dim(spec), dy = obs_dim(spec);
  const int T = spec.T;
  RngStream root = RngStream::from_seed(spec.data_seed);

  Vec m0;
  Mat p0_l, q_l;  // Cholesky factors
  std::function<Vec(int, const Vec&)> mean;
  if (spec.kind == "lgssm-synthetic") {
    const SynthMats m = synth_mats(spec);
    m0 = m.m0;
    p0_l = gauss::chol_psd(m.P0);
    q_l = gauss::chol_psd(m.Q);
    mean = [m](int, const Vec& x) { return Vec(m.F * x + m.b); };
  } else if (spec.kind == "stochvol") {
    m0 = Vec::Constant(dx, spec.sv_mu);
    const Mat q = stochvol_q(spec);
    p0_l = gauss::chol_psd(ar1_p0(spec.sv_phi, q));
    q_l = gauss::chol_psd(q);
    const double mu = spec.sv_mu, phi = spec.sv_phi;
    mean = [mu, phi](int, const Vec& x) {
      return Vec(Vec::Constant(x.size(), mu) + phi * (x.array() - mu).matrix());
    };
  } else if (spec.kind == "diffusion-smoothing") {
    m0 = lorenz_m0();
    p0_l = Mat::Identity(3, 3);
    q_l = std::sqrt(spec.lz_h) * spec.lz_gamma * Mat::Identity(3, 3);
    mean = [spec](int, const Vec& x) {
      return Vec(x + spec.lz_h * lorenz_drift(spec, x));
    };
  } else if (spec.kind == "spatio-temporal") {
    m0 = Vec::Zero(dx);
    const Mat q = spatio_innovation_cov(spec);
    p0_l = gauss::chol_psd(ar1_p0(spec.st_phi, q));
    q_l = gauss::chol_psd(q);
    const double phi = spec.st_phi;
    mean = [phi](int, const Vec& x) { return Vec(phi * x); };
  } else {  // grid-1d-test
    m0 = Vec::Constant(1, spec.g1_m0);
    p0_l = std::sqrt(spec.g1_p0) * Mat::Identity(1, 1);
    q_l = std::sqrt(spec.g1_q) * Mat::Identity(1, 1);
    const double phi = spec.g1_phi;
    mean = [phi](int, const Vec& x) { return Vec(phi * x); };
  }

  SimResult out;
  out.latent = Trajectory(T + 1, dx);
  out.data = Mat(T + 1, dy);
  for (int t = 0; t <= T; ++t) {
    RngStream st = root.derive(stream::kSimulate, t);
    Vec x;
    if (t == 0) {
      x = m0 + p0_l * st.normal_vec(dx);
    } else {
      x = mean(t - 1, Vec(out.latent.row(t - 1).transpose())) +
          q_l * st.normal_vec(dx);
    }
    out.latent.row(t) = x.transpose();

    if (spec.kind == "lgssm-synthetic") {
      const SynthMats m = synth_mats(spec);
      out.data.row(t) =
          (m.H * x + gauss::chol_psd(m.R) * st.normal_vec(dy)).transpose();
    } else if (spec.kind == "stochvol") {
      for (int j = 0; j < dy; ++j)
        out.data(t, j) = std::exp(x[j] / 2.0) * st.next_normal();
    } else if (spec.kind == "diffusion-smoothing") {
      out.data(t, 0) = x[0] + std::sqrt(spec.lz_obs_var) * st.next_normal();
    } else if (spec.kind == "spatio-temporal") {
      for (int j = 0; j < dy; ++j)
        out.data(t, j) =
            static_cast<double>(poisson_draw(std::exp(x[j]), st));
    }
  }
  return out;
}

auxk::GenSSMTarget make_target(const ModelSpec& spec, const Mat& data) {
  check_model_spec(spec);
  const int dx = latent_dim(spec), dy = obs_dim(spec);
  const int T = spec.T;
  if (data.rows() != T + 1 || data.cols() != dy)
    throw ConfigError("data shape mismatch: expected " +
                      std::to_string(T + 1) + " x " + std::to_string(dy) +
                      ", got " + std::to_string(data.rows()) + " x " +
                      std::to_string(data.cols()));

  std::vector<auxk::Potential> pots(T + 1);

  if (spec.kind == "lgssm-synthetic") {
    const SynthMats m = synth_mats(spec);
    for (int t = 0; t <= T; ++t)
      pots[t].exact = auxk::ExactGaussPotential{
          m.H, Vec::Zero(dy), m.R, Vec(data.row(t).transpose())};
    return auxk::GenSSMTarget::linear(T, m.m0, m.P0, {m.F}, {m.b}, {m.Q},
                                      std::move(pots));
  }

  if (spec.kind == "stochvol") {
    for (int t = 0; t <= T; ++t) {
      const Vec y = data.row(t).transpose();
      pots[t].log_g = [y](const Vec& x) {
        const auto y2e = (y.array().square() * (-x.array()).exp());
        return -0.5 * (std::log(2.0 * M_PI) * x.size() + x.sum() + y2e.sum());
      };
      pots[t].grad_log_g = [y](const Vec& x) {
        return Vec(0.5 * (y.array().square() * (-x.array()).exp() - 1.0));
      };
    }
    const Mat q = stochvol_q(spec);
    const Vec b = Vec::Constant(dx, (1.0 - spec.sv_phi) * spec.sv_mu);
    return auxk::GenSSMTarget::linear(
        T, Vec::Constant(dx, spec.sv_mu), ar1_p0(spec.sv_phi, q),
        {Mat(spec.sv_phi * Mat::Identity(dx, dx))}, {b}, {q},
        std::move(pots));
  }

  if (spec.kind == "diffusion-smoothing") {
    for (int t = 0; t <= T; ++t)
      pots[t].exact = auxk::ExactGaussPotential{
          Mat((Mat(1, 3) << 1.0, 0.0, 0.0).finished()), Vec::Zero(1),
          Mat(spec.lz_obs_var * Mat::Identity(1, 1)),
          Vec(data.row(t).transpose())};
    const Mat q =
        spec.lz_h * spec.lz_gamma * spec.lz_gamma * Mat::Identity(3, 3);
    return auxk::GenSSMTarget::tractable(
        T, 3, lorenz_m0(), Mat::Identity(3, 3),
        [spec](int, const Vec& x) {
          return Vec(x + spec.lz_h * lorenz_drift(spec, x));
        },
        [spec](int, const Vec& x) {
          return Mat(Mat::Identity(3, 3) + spec.lz_h * lorenz_jac(spec, x));
        },
        [q](int, const Vec&) { return q; }, std::move(pots));
  }

  if (spec.kind == "spatio-temporal") {
    for (int t = 0; t <= T; ++t) {
      const Vec y = data.row(t).transpose();
      pots[t].log_g = [y](const Vec& x) {
        double s = 0.0;
        for (int j = 0; j < x.size(); ++j)
          s += y[j] * x[j] - std::exp(x[j]) - std::lgamma(y[j] + 1.0);
        return s;
      };
      pots[t].grad_log_g = [y](const Vec& x) {
        return Vec(y.array() - x.array().exp());
      };
    }
    const Mat q = spatio_innovation_cov(spec);
    return auxk::GenSSMTarget::linear(
        T, Vec::Zero(dx), ar1_p0(spec.st_phi, q),
        {Mat(spec.st_phi * Mat::Identity(dx, dx))}, {Vec::Zero(dx)}, {q},
        std::move(pots));
  }

  if (spec.kind == "grid-1d-test") {
    for (int t = 0; t <= T; ++t) {
      pots[t].log_g = [](const Vec& x) {
        return -x[0] * x[0] * x[0] * x[0];
      };
      pots[t].grad_log_g = [](const Vec& x) {
        return Vec(Vec::Constant(1, -4.0 * x[0] * x[0] * x[0]));
      };
    }
    return auxk::GenSSMTarget::linear(
        T, Vec::Constant(1, spec.g1_m0),
        Mat(spec.g1_p0 * Mat::Identity(1, 1)),
        {Mat(spec.g1_phi * Mat::Identity(1, 1))}, {Vec::Zero(1)},
        {Mat(spec.g1_q * Mat::Identity(1, 1))}, std::move(pots));
  }

  throw ConfigError("unknown model kind: " + spec.kind);
}

lgssm::Model synthetic_lgssm(const ModelSpec& spec) {
  if (spec.kind != "lgssm-synthetic")
    throw ConfigError("synthetic_lgssm requires kind lgssm-synthetic");
  const SynthMats m = synth_mats(spec);
  return lgssm::Model::homogeneous(spec.T, m.m0, m.P0, m.F, m.b, m.Q, m.H,
                                   Vec::Zero(spec.dy), m.R);
}

BuiltModel build_model(const ModelSpec& spec) {
  check_model_spec(spec);
  BuiltModel out;
  if (spec.data_file.empty()) {
    SimResult sim = simulate(spec);
    out.data = std::move(sim.data);
    out.latent_true = std::move(sim.latent);
  } else {
    out.data = read_data_csv(spec.data_file);
    if (out.data.rows() != spec.T + 1 || out.data.cols() != obs_dim(spec))
      throw ConfigError("loaded data shape mismatch for " + spec.data_file);
  }
  out.target = make_target(spec, out.data);
  if (spec.kind == "lgssm-synthetic") out.exact = synthetic_lgssm(spec);
  return out;
}

Mat read_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("empty data file: " + path);
  long cols = std::count(line.begin(), line.end(), ',');  // minus the t column
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long c = -1;  // first cell is the step index
    while (std::getline(ss, cell, ',')) {
      if (c >= 0) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ConfigError("bad numeric cell in " + path + ": " + cell);
        }
      }
      ++c;
    }
    if (c != cols)
      throw ConfigError("ragged row in " + path + " at line " +
                        std::to_string(rows + 2));
    ++rows;
  }
  Mat out(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) out(r, c) = values[r * cols + c];
  return out;
}

void write_data_csv(const std::string& path, const Mat& data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write data file: " + path);
  out << "t";
  for (long j = 0; j < data.cols(); ++j) out << ",y_" << j;
  out << "\n";
  char buf[64];
  for (long t = 0; t < data.rows(); ++t) {
    out << t;
    for (long j = 0; j < data.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data(t, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace auxmc::bench
