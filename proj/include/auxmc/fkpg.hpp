#ifndef AUXMC_FKPG_HPP
#define AUXMC_FKPG_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "auxmc/gauss.hpp"
#include "auxmc/rng.hpp"
#include "auxmc/target.hpp"

namespace auxmc::fkpg {

// Feynman-Kac path model: Markov proposals reweighted by potentials,
//   law(x_{0:T}) ∝ M0(x0) G0(x0) prod_{t>=1} M_t(x_{t-1}, x_t) G_t(x_{t-1}, x_t).
// Potentials receive a per-particle auxiliary key; plain models ignore it
// (uses_aux_keys = false) while pseudo-marginal wrappers derive their
// estimator randomness from it. Closures may reference state owned by the
// caller; the model must not outlive it.
struct FeynmanKacModel {
  int T = 0;
  int dx = 0;
  std::function<Vec(RngStream&)> m0_sample;
  std::function<double(const Vec&)> m0_logpdf;
  std::function<Vec(int, const Vec&, RngStream&)> m_sample;     // t, x_{t-1}
  std::function<double(int, const Vec&, const Vec&)> m_logpdf;  // t, prev, cur
  std::function<double(const Vec&, std::uint64_t)> log_g0;
  std::function<double(int, const Vec&, const Vec&, std::uint64_t)> log_g;
  bool uses_aux_keys = false;
};

struct ParticleSystem {
  std::vector<Mat> particles;              // per t: N x dx
  std::vector<Vec> logw;                   // unnormalized log-weights
  std::vector<Vec> weights;                // normalized weights
  std::vector<Eigen::VectorXi> ancestors;  // per t >= 1
  std::vector<std::vector<std::uint64_t>> keys;
  double loglik = 0.0;  // sum_t log mean(unnormalized weights)
};

// Bootstrap SMC with multinomial resampling at every step.
ParticleSystem smc(const FeynmanKacModel& fk, int N, RngStream rng);

struct CsmcResult {
  Trajectory traj;
  std::vector<std::uint64_t> traj_keys;
  ParticleSystem system;
};

// Conditional SMC: particle 0 pinned to ref throughout; the output path is
// selected by backward sampling (terminal index ∝ final weights, earlier
// indices ∝ W_t^i M_{t+1}(x_t^i, sel) G_{t+1}(x_t^i, sel)). Leaves the FK
// path measure invariant. N = 1 returns ref unchanged.
CsmcResult csmc_step(const FeynmanKacModel& fk, const Trajectory& ref,
                     const std::vector<std::uint64_t>& ref_keys, int N,
                     RngStream rng);

enum class ProposalMode { kPrior, kGradient, kFullyAdapted };
enum class LinearizeAt { kAuxObs, kPredictedMean };

struct PgOptions {
  ProposalMode mode = ProposalMode::kGradient;
  LinearizeAt linearize = LinearizeAt::kAuxObs;
  // Applied to the freshly built FK model every iteration (e.g. the
  // pseudo-marginal wrapper); identity when empty.
  std::function<FeynmanKacModel(const FeynmanKacModel&)> fk_transform;
};

// Proposal law for x_t under the given mode. x_prev is null at t = 0
// (the prior takes over); gradient mode ignores it unless linearizing at the
// predicted mean.
gauss::Gaussian adapted_proposal(const auxk::GenSSMTarget& target, int t,
                                 const Vec& u_t, const Vec* x_prev,
                                 double delta, const PgOptions& opts);

// FK model whose path measure equals pi(x | u) for the auxiliary target:
// the proposal density is divided out inside the potential, so every mode
// targets the same measure. References target and copies u.
FeynmanKacModel build_aux_fk(const auxk::GenSSMTarget& target, const Mat& u,
                             double delta, const PgOptions& opts);

// Estimator of the linear-scale potential at (t, x_prev, x) given a key;
// x_prev is empty at t = 0. Must be non-negative and unbiased in the key.
using PotentialEstimator =
    std::function<double(int, const Vec&, const Vec&, std::uint64_t)>;

// Replaces the potentials by the estimator; the extended model remains a
// valid FK model and particle Gibbs on it targets pi marginally. Negative or
// NaN estimates raise ContractError.
FeynmanKacModel pm_potential(FeynmanKacModel fk, PotentialEstimator estimator);

struct PGState {
  Trajectory x;
  std::vector<std::uint64_t> keys;  // aux keys along the reference
  double delta = 1.0;
  long iter = 0;
  long updates = 0;          // iterations where the reference changed
  double last_update = 0.0;  // 1.0 when the last step changed the reference
};

PGState init_pg(Trajectory x0, double delta);

// One auxiliary particle Gibbs sweep: draw u | x*, run conditional SMC on the
// auxiliary FK model, adopt the returned trajectory.
void aux_pgibbs_step(const auxk::GenSSMTarget& target, PGState& state, int N,
                     RngStream rng, const PgOptions& opts = {});

// Robbins-Monro update of delta from the reference-update indicator.
void adapt_delta(PGState& state, double target_rate);

}  // namespace auxmc::fkpg

#endif
