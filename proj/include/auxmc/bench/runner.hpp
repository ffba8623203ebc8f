#ifndef AUXMC_BENCH_RUNNER_HPP
#define AUXMC_BENCH_RUNNER_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "auxmc/bench/config.hpp"

namespace auxmc::bench {

struct RunResult {
  ChainSummary summary;
  std::string trace_path;
  std::string summary_path;
};

// Burn-in with delta adaptation, then sampling with the kernel frozen.
// Writes <output_dir>/trace.csv (header iter,coord_<flat>,...) and
// <output_dir>/summary.json echoing the config and library version.
RunResult run(const RunConfig& cfg);

struct ValidationItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Self-contained oracle suite at reduced sizes: law agreement of all three
// pathwise samplers against dense conditioning, unit acceptance on exact
// targets, particle Gibbs moment agreement, and a deliberate backward-gain
// sign flip that must make the law check fail.
std::vector<ValidationItem> validate();
nlohmann::json validation_json(const std::vector<ValidationItem>& items);

// Mean wall seconds per kernel step on a synthetic d_x = 2 model of the
// given horizon.
double seconds_per_step(const std::string& sampler, int T, int iters,
                        int workers);

// CSV timing table over horizons (sampler,T,iters,seconds_per_step).
void bench_table(const std::string& sampler, const std::vector<int>& sizes,
                 std::ostream& out);

}  // namespace auxmc::bench

#endif
