#ifndef AUXMC_BENCH_MODELS_HPP
#define AUXMC_BENCH_MODELS_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "auxmc/lgssm.hpp"
#include "auxmc/target.hpp"

namespace auxmc::bench {

// Model selector plus hyperparameters; fields irrelevant to a kind keep
// their defaults. Data comes from simulation under data_seed unless
// data_file points at a CSV.
struct ModelSpec {
  std::string kind = "lgssm-synthetic";
  // kinds: lgssm-synthetic | stochvol | diffusion-smoothing |
  //        spatio-temporal | grid-1d-test
  int T = 50;
  int dx = 2;    // latent dim (lgssm-synthetic, stochvol)
  int dy = 1;    // observation rows (lgssm-synthetic)
  int grid = 3;  // lattice side (spatio-temporal); latent dim = grid^2
  std::uint64_t data_seed = 1;
  std::string data_file;

  // stochvol: x_t = mu + phi (x_{t-1} - mu) + eps, eps ~ N(0, Q),
  // Q = sig2 ((1-rho) I + rho 11'), y_t | x_t ~ N(0, diag(exp(x_t)))
  double sv_mu = -1.0;
  double sv_phi = 0.9;
  double sv_sig2 = 0.1;
  double sv_rho = 0.25;

  // diffusion-smoothing: Lorenz-63 drift, Euler-Maruyama at step h,
  // Q = h gamma^2 I, first coordinate observed with variance obs_var
  double lz_sigma = 10.0;
  double lz_rho = 28.0;
  double lz_beta = 8.0 / 3.0;
  double lz_h = 0.01;
  double lz_gamma = 2.0;
  double lz_obs_var = 1.0;

  // spatio-temporal: AR(1) in time on a grid x grid field, innovation
  // covariance tau2 (kappa2 I + Laplacian)^{-1}, Poisson(exp(x)) counts
  double st_phi = 0.8;
  double st_kappa2 = 1.0;
  double st_tau2 = 0.3;

  // grid-1d-test: scalar AR(1) dynamics, quartic potential exp(-x^4)
  double g1_phi = 0.8;
  double g1_q = 0.09;
  double g1_m0 = 0.5;
  double g1_p0 = 0.25;
};

int latent_dim(const ModelSpec& spec);
int obs_dim(const ModelSpec& spec);  // data columns; 0 for grid-1d-test

struct SimResult {
  Trajectory latent;  // (T+1) x latent_dim
  Mat data;           // (T+1) x obs_dim
};

// Latent path and observations drawn from the model law, addressed under
// (kSimulate, .) of data_seed: identical spec => identical output.
SimResult simulate(const ModelSpec& spec);

// Target density for the given observations ((T+1) x obs_dim).
auxk::GenSSMTarget make_target(const ModelSpec& spec, const Mat& data);

// Matching LGSSM for lgssm-synthetic (oracle hook); same matrices the
// target uses, observations passed separately to the filter.
lgssm::Model synthetic_lgssm(const ModelSpec& spec);

struct BuiltModel {
  auxk::GenSSMTarget target;
  Mat data;
  Trajectory latent_true;             // empty when data was loaded
  std::optional<lgssm::Model> exact;  // lgssm-synthetic only
};

// Throws ConfigError on out-of-range or inconsistent spec values.
void check_model_spec(const ModelSpec& spec);

BuiltModel build_model(const ModelSpec& spec);

// CSV with header "t,y_0,..."; values at 17 significant digits.
Mat read_data_csv(const std::string& path);
void write_data_csv(const std::string& path, const Mat& data);

}  // namespace auxmc::bench

#endif
