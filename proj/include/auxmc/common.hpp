#ifndef AUXMC_COMMON_HPP
#define AUXMC_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace auxmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Latent path x_{0:T}, one state per row: (T+1) x d_x.
using Trajectory = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Covariance not factorizable even after the jitter retries.
struct FactorizationError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

// All particle weights collapsed to -inf at some step.
struct DegenerateWeightsError : Error {
  using Error::Error;
};

// A caller-supplied component broke its contract (e.g. negative
// pseudo-marginal potential estimate).
struct ContractError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace auxmc

#endif
