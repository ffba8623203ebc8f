#ifndef AUXMC_BENCH_CONFIG_HPP
#define AUXMC_BENCH_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "auxmc/bench/models.hpp"
#include "auxmc/common.hpp"

namespace auxmc::bench {

// One experiment: sampler, schedule, model. Parsed strictly — unknown keys
// are ConfigErrors, no silent typo tolerance.
struct RunConfig {
  std::string sampler = "aux-kalman-seq";
  // aux-kalman-seq | aux-kalman-prefix | aux-kalman-dnc |
  // pgibbs-prior | pgibbs-gradient | pgibbs-adapted
  long chain_length = 1000;  // total iterations, burn-in included
  long burn_in = 100;        // delta adapted here, frozen afterwards
  int particles = 16;        // pgibbs family only
  double delta_init = 1.0;
  double target_acceptance = 0.0;  // 0 = family default (0.574 / 0.9)
  std::uint64_t seed = 1;
  int workers = 1;                // AUXMC_WORKERS env overrides
  std::string output_dir = "out";
  std::vector<int> probe_times;   // traced steps; empty = automatic
  bool sample_param = false;      // diffusion coefficient move (lorenz model)
  double param_step = 0.2;        // random-walk scale on log gamma
  ModelSpec model;
};

bool is_aux_family(const std::string& sampler);
bool is_pgibbs_family(const std::string& sampler);

ModelSpec parse_model_spec(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json model_json(const ModelSpec& spec);
nlohmann::json config_json(const RunConfig& cfg);

// Statistics over the traced coordinates of the kept phase. Vectors are
// empty when nothing was kept (null statistics in the JSON form).
struct ChainSummary {
  std::vector<int> probe_times;
  std::vector<long> probe_coords;  // flat index t * dx + j per trace column
  long kept = 0;
  Vec mean;
  Vec sd;
  std::vector<double> ess;  // clamped to kept; NaN when undefined
  double rate = 0.0;        // acceptance / reference-update rate, kept phase
  double final_delta = 0.0;
  double burn_seconds = 0.0;
  double sample_seconds = 0.0;
  bool has_param = false;
  double param_mean = 0.0;
  double param_sd = 0.0;
};

nlohmann::json summary_json(const ChainSummary& s, const RunConfig& cfg);

}  // namespace auxmc::bench

#endif
