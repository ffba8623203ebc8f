#ifndef AUXMC_AUXK_HPP
#define AUXMC_AUXK_HPP

#include <vector>

#include "auxmc/lgssm.hpp"
#include "auxmc/pit.hpp"
#include "auxmc/rng.hpp"
#include "auxmc/target.hpp"

namespace auxmc::auxk {

// u_t = x_t + sqrt(delta/2) xi_t, xi_t iid standard normal, addressed
// (kAuxObs, t). Returns a (T+1) x d_x array, one row per step.
Mat sample_aux_obs(const Trajectory& x, double delta, RngStream rng);

// The LGSSM whose posterior is the proposal q(. | u, x), plus its observation
// array. Dynamics: the target's own (linear case) or linearized at x
// (tractable case). Observations per step stack a pseudo-observation
// z_t = u_t + (delta/2) * grad log g_t(x_t) of x_t with noise (delta/2) I
// (generic potential part; omitted shift when zeroth_order), the exact
// Gaussian potential block verbatim, and inert padding rows up to a common
// width. grads, when given, must be the generic-part gradients at x.
struct AuxModel {
  lgssm::Model model;
  Mat obs;
};
AuxModel build_aux_lgssm(const GenSSMTarget& target, const Trajectory& x,
                         const Mat& u, double delta, bool zeroth_order = false,
                         const std::vector<Vec>* grads = nullptr);

enum class Backend { kSequential, kPrefix, kDnc };

struct KernelOptions {
  Backend backend = Backend::kSequential;
  bool parallel_filter = false;  // scan-based filter instead of sequential
  bool zeroth_order = false;     // drop the gradient shift in z_t
  int workers = 1;
};

struct KernelStats {
  long accepted = 0;
  long rejected = 0;
  long aborted = 0;           // non-finite gradient / factorization failure
  long nonfinite_gamma = 0;   // proposal fell outside the support
  double last_log_alpha = 0.0;
  double last_accept_prob = 0.0;
};

struct AuxChainState {
  Trajectory x;
  double delta = 1.0;
  double log_gamma = 0.0;      // cache, consistent with x
  std::vector<Vec> grad_gen;   // cache: generic-part gradients at x_t
  long iter = 0;
  KernelStats stats;
};

AuxChainState init_chain(const GenSSMTarget& target, Trajectory x0,
                         double delta);

// One exact MCMC step: Gibbs-draw u, propose from the auxiliary LGSSM
// posterior linearized at the current path, MH-correct, advance the state.
// Randomness is scoped per iteration, so passing the same base stream every
// call replays identically.
void kernel_step(const GenSSMTarget& target, AuxChainState& state,
                 RngStream rng, const KernelOptions& opts = {});

// MH log-ratio for a forced move x -> xp under shared auxiliaries u.
// log alpha = [log gamma(xp) + log N(u; xp) + log q(x | u, xp)]
//           - [log gamma(x)  + log N(u; x)  + log q(xp | u, x)]
double mh_log_ratio(const GenSSMTarget& target, const Trajectory& x,
                    const Trajectory& xp, const Mat& u, double delta,
                    bool zeroth_order = false);

// Robbins-Monro step-size update from the latest acceptance probability:
// log delta += iter^{-0.6} (alpha_hat - target_rate). Call during burn-in
// only; freeze afterwards.
void adapt_delta(AuxChainState& state, double target_rate);

}  // namespace auxmc::auxk

#endif
