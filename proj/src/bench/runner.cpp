#include "auxmc/bench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "auxmc/auxk.hpp"
#include "auxmc/bench/diagnostics.hpp"
#include "auxmc/fkpg.hpp"
#include "auxmc/parallel.hpp"
#include "auxmc/pit.hpp"
#include "auxmc/testhooks.hpp"
#include "auxmc/version.hpp"

namespace auxmc::bench {

namespace {

namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

auxk::Backend backend_of(const std::string& sampler) {
  if (sampler == "aux-kalman-seq") return auxk::Backend::kSequential;
  if (sampler == "aux-kalman-prefix") return auxk::Backend::kPrefix;
  if (sampler == "aux-kalman-dnc") return auxk::Backend::kDnc;
  throw ConfigError("not an aux-kalman sampler: " + sampler);
}

fkpg::ProposalMode mode_of(const std::string& sampler) {
  if (sampler == "pgibbs-prior") return fkpg::ProposalMode::kPrior;
  if (sampler == "pgibbs-gradient") return fkpg::ProposalMode::kGradient;
  if (sampler == "pgibbs-adapted") return fkpg::ProposalMode::kFullyAdapted;
  throw ConfigError("not a pgibbs sampler: " + sampler);
}

std::vector<int> choose_probes(const RunConfig& cfg, int T, int dx) {
  std::set<int> times;
  if (!cfg.probe_times.empty()) {
    times.insert(cfg.probe_times.begin(), cfg.probe_times.end());
  } else if (static_cast<long>(T + 1) * dx <= 64) {
    for (int t = 0; t <= T; ++t) times.insert(t);
  } else {
    for (int i = 0; i < 5; ++i)
      times.insert(static_cast<int>(std::lround(i * T / 4.0)));
  }
  return {times.begin(), times.end()};
}

// Random-walk move on log gamma (diffusion coefficient) with a standard
// normal prior on log gamma. The drift does not depend on gamma, so the
// residuals are reusable across the proposal.
bool gamma_move(ModelSpec& spec, const auxk::GenSSMTarget& target,
                const Trajectory& x, double step, RngStream s) {
  const int T = spec.T;
  double sse = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec resid = x.row(t + 1).transpose() -
                      target.dyn_mean(t, x.row(t).transpose());
    sse += resid.squaredNorm();
  }
  const double h = spec.lz_h;
  auto loglik = [&](double g) {
    return -1.5 * T * std::log(2.0 * M_PI * h * g * g) -
           sse / (2.0 * h * g * g);
  };
  const double lg = std::log(spec.lz_gamma);
  const double lg_prop = lg + step * s.next_normal();
  const double g_prop = std::exp(lg_prop);
  const double log_r = loglik(g_prop) - 0.5 * lg_prop * lg_prop -
                       (loglik(spec.lz_gamma) - 0.5 * lg * lg);
  if (std::log(s.next_uniform()) < log_r) {
    spec.lz_gamma = g_prop;
    return true;
  }
  return false;
}

struct TraceWriter {
  std::ofstream out;
  std::vector<long> coords;

  TraceWriter(const std::string& path, const std::vector<long>& flat)
      : out(path), coords(flat) {
    if (!out) throw ConfigError("cannot write trace file: " + path);
    out << "iter";
    for (long c : coords) out << ",coord_" << c;
    out << "\n";
  }

  void row(long iter, const Trajectory& x, int dx) {
    char buf[64];
    out << iter;
    for (long c : coords) {
      std::snprintf(buf, sizeof buf, "%.17g", x(c / dx, c % dx));
      out << "," << buf;
    }
    out << "\n";
  }
};

}  // namespace

RunResult run(const RunConfig& cfg) {
  ModelSpec spec = cfg.model;
  BuiltModel built = build_model(spec);
  auxk::GenSSMTarget target = built.target;
  const int T = target.horizon();
  const int dx = target.dx();
  const int workers = env_workers(cfg.workers);
  const long keep = cfg.chain_length - cfg.burn_in;

  const std::vector<int> times = choose_probes(cfg, T, dx);
  std::vector<long> coords;
  for (int t : times)
    for (int j = 0; j < dx; ++j) coords.push_back(static_cast<long>(t) * dx + j);

  fs::create_directories(cfg.output_dir);
  RunResult res;
  res.trace_path = (fs::path(cfg.output_dir) / "trace.csv").string();
  res.summary_path = (fs::path(cfg.output_dir) / "summary.json").string();
  TraceWriter trace(res.trace_path, coords);

  const RngStream root = RngStream::from_seed(cfg.seed).derive(stream::kChain, 0);
  const Trajectory x0 = target.m0().transpose().replicate(T + 1, 1);

  Mat draws(std::max<long>(keep, 0), coords.size());
  std::vector<double> param_draws;
  const bool aux = is_aux_family(cfg.sampler);
  const clk::time_point t0 = clk::now();
  double burn_seconds = 0.0;
  double rate_num = 0.0;
  double final_delta = cfg.delta_init;

  auto record = [&](long iter, const Trajectory& x) {
    const long k = iter - cfg.burn_in;
    trace.row(iter, x, dx);
    for (std::size_t c = 0; c < coords.size(); ++c)
      draws(k, c) = x(coords[c] / dx, coords[c] % dx);
    if (cfg.sample_param) param_draws.push_back(spec.lz_gamma);
  };

  if (aux) {
    auxk::KernelOptions opts;
    opts.backend = backend_of(cfg.sampler);
    opts.workers = workers;
    auxk::AuxChainState st = auxk::init_chain(target, x0, cfg.delta_init);
    long acc_mark = 0;
    for (long iter = 0; iter < cfg.chain_length; ++iter) {
      auxk::kernel_step(target, st, root, opts);
      if (cfg.sample_param &&
          gamma_move(spec, target, st.x, cfg.param_step,
                     root.derive(stream::kParam, iter))) {
        target = make_target(spec, built.data);
        auxk::AuxChainState fresh = auxk::init_chain(target, st.x, st.delta);
        fresh.iter = st.iter;
        fresh.stats = st.stats;
        st = std::move(fresh);
      }
      if (iter < cfg.burn_in) {
        auxk::adapt_delta(st, cfg.target_acceptance);
        if (iter + 1 == cfg.burn_in) {
          burn_seconds = seconds_since(t0);
          acc_mark = st.stats.accepted;
        }
      } else {
        record(iter, st.x);
      }
    }
    if (cfg.burn_in == 0) burn_seconds = 0.0;
    rate_num = static_cast<double>(st.stats.accepted - acc_mark);
    final_delta = st.delta;
  } else {
    fkpg::PgOptions opts;
    opts.mode = mode_of(cfg.sampler);
    fkpg::PGState st = fkpg::init_pg(x0, cfg.delta_init);
    long upd_mark = 0;
    for (long iter = 0; iter < cfg.chain_length; ++iter) {
      fkpg::aux_pgibbs_step(target, st, cfg.particles, root, opts);
      if (cfg.sample_param &&
          gamma_move(spec, target, st.x, cfg.param_step,
                     root.derive(stream::kParam, iter))) {
        target = make_target(spec, built.data);
      }
      if (iter < cfg.burn_in) {
        fkpg::adapt_delta(st, cfg.target_acceptance);
        if (iter + 1 == cfg.burn_in) {
          burn_seconds = seconds_since(t0);
          upd_mark = st.updates;
        }
      } else {
        record(iter, st.x);
      }
    }
    rate_num = static_cast<double>(st.updates - upd_mark);
    final_delta = st.delta;
  }

  ChainSummary& s = res.summary;
  s.probe_times = times;
  s.probe_coords = coords;
  s.kept = std::max<long>(keep, 0);
  s.final_delta = final_delta;
  s.burn_seconds = burn_seconds;
  s.sample_seconds = seconds_since(t0) - burn_seconds;
  if (s.kept > 0) {
    const Moments m = column_moments(draws);
    s.mean = m.mean;
    s.sd = m.sd;
    s.rate = rate_num / static_cast<double>(s.kept);
    s.ess.assign(coords.size(), std::nan(""));
    if (s.kept >= 100) {
      for (std::size_t c = 0; c < coords.size(); ++c) {
        try {
          s.ess[c] = std::min(ess(Vec(draws.col(c))),
                              static_cast<double>(s.kept));
        } catch (const ContractError&) {
        }
      }
    }
    if (cfg.sample_param) {
      Mat pd(param_draws.size(), 1);
      for (std::size_t i = 0; i < param_draws.size(); ++i)
        pd(i, 0) = param_draws[i];
      const Moments pm = column_moments(pd);
      s.has_param = true;
      s.param_mean = pm.mean[0];
      s.param_sd = pm.sd[0];
    }
  }

  std::ofstream sf(res.summary_path);
  if (!sf) throw ConfigError("cannot write summary file: " + res.summary_path);
  sf << summary_json(s, cfg).dump(2) << "\n";
  return res;
}

namespace {

// Largest elementwise deviation between a sampler's induced law and the
// dense-conditioning posterior.
double law_deviation(pit::Sampler which, const lgssm::Model& model,
                     const Mat& obs) {
  const lgssm::FilterResult fr = lgssm::kalman_filter(model, obs);
  const lgssm::DenseOracle oracle = lgssm::dense_oracle(model, obs);
  const gauss::Gaussian law = pit::extract_affine_law(which, model, fr);
  const double dm = (law.mean - oracle.posterior.mean).cwiseAbs().maxCoeff();
  const double dc = (law.cov - oracle.posterior.cov).cwiseAbs().maxCoeff();
  return std::max(dm, dc);
}

ModelSpec small_synth(int T, int dx, int dy, std::uint64_t seed) {
  ModelSpec ms;
  ms.kind = "lgssm-synthetic";
  ms.T = T;
  ms.dx = dx;
  ms.dy = dy;
  ms.data_seed = seed;
  return ms;
}

}  // namespace

std::vector<ValidationItem> validate() {
  std::vector<ValidationItem> items;
  auto add = [&](const std::string& name, bool pass, std::string detail) {
    items.push_back({name, pass, std::move(detail)});
  };
  char buf[128];

  {
    const char* names[3] = {"law-sequential-vs-dense", "law-prefix-vs-dense",
                            "law-dnc-vs-dense"};
    const pit::Sampler which[3] = {pit::Sampler::kSequential,
                                   pit::Sampler::kPrefix, pit::Sampler::kDnc};
    double worst[3] = {0.0, 0.0, 0.0};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const ModelSpec ms = small_synth(2 + seed % 5, 1 + seed % 3,
                                       1 + (seed / 2) % 2, seed);
      const BuiltModel bm = build_model(ms);
      for (int k = 0; k < 3; ++k)
        worst[k] =
            std::max(worst[k], law_deviation(which[k], *bm.exact, bm.data));
    }
    for (int k = 0; k < 3; ++k) {
      std::snprintf(buf, sizeof buf, "max deviation %.3g (tol 1e-8)",
                    worst[k]);
      add(names[k], worst[k] < 1e-8, buf);
    }
  }

  {
    const BuiltModel bm = build_model(small_synth(10, 2, 1, 3));
    auxk::AuxChainState st = auxk::init_chain(
        bm.target, bm.target.m0().transpose().replicate(11, 1), 0.8);
    const RngStream rng = RngStream::from_seed(99);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      auxk::kernel_step(bm.target, st, rng);
      worst = std::max(worst, std::abs(st.stats.last_log_alpha));
    }
    std::snprintf(buf, sizeof buf, "max |log alpha| %.3g over 50 steps",
                  worst);
    add("exact-target-unit-acceptance", worst < 1e-8, buf);
  }

  {
    const BuiltModel bm = build_model(small_synth(3, 1, 1, 11));
    const lgssm::DenseOracle oracle = lgssm::dense_oracle(*bm.exact, bm.data);
    const long iters = 5000;
    fkpg::PGState st =
        fkpg::init_pg(bm.target.m0().transpose().replicate(4, 1), 1.0);
    const RngStream rng = RngStream::from_seed(7);
    Mat draws(iters, 4);
    for (long i = 0; i < iters; ++i) {
      fkpg::aux_pgibbs_step(bm.target, st, 8, rng);
      draws.row(i) = st.x.transpose();
    }
    double worst_z = 0.0;
    for (int t = 0; t < 4; ++t) {
      const Vec col = draws.col(t);
      const double se = mcse(col);
      worst_z = std::max(
          worst_z, std::abs(col.mean() - oracle.posterior.mean[t]) / se);
    }
    std::snprintf(buf, sizeof buf, "max |z| %.2f (limit 4)", worst_z);
    add("pgibbs-moment-agreement", worst_z < 4.0, buf);
  }

  {
    const BuiltModel bm = build_model(small_synth(6, 2, 1, 5));
    testhooks::flip_backward_gain = true;
    const double dev = law_deviation(pit::Sampler::kSequential, *bm.exact,
                                     bm.data);
    testhooks::flip_backward_gain = false;
    std::snprintf(buf, sizeof buf,
                  "flipped-gain deviation %.3g (must exceed 1e-8)", dev);
    add("backward-gain-mutation-detected", dev > 1e-8, buf);
  }

  return items;
}

nlohmann::json validation_json(const std::vector<ValidationItem>& items) {
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& it : items) {
    arr.push_back({{"name", it.name}, {"pass", it.pass}, {"detail", it.detail}});
    all = all && it.pass;
  }
  return nlohmann::json{
      {"version", kVersion}, {"all_pass", all}, {"items", arr}};
}

double seconds_per_step(const std::string& sampler, int T, int iters,
                        int workers) {
  const BuiltModel bm = build_model(small_synth(T, 2, 1, 17));
  const Trajectory x0 = bm.target.m0().transpose().replicate(T + 1, 1);
  const RngStream rng = RngStream::from_seed(23);

  if (is_aux_family(sampler)) {
    auxk::KernelOptions opts;
    opts.backend = backend_of(sampler);
    opts.workers = workers;
    auxk::AuxChainState st = auxk::init_chain(bm.target, x0, 1.0);
    auxk::kernel_step(bm.target, st, rng, opts);  // warm-up
    const clk::time_point t0 = clk::now();
    for (int i = 0; i < iters; ++i)
      auxk::kernel_step(bm.target, st, rng, opts);
    return seconds_since(t0) / iters;
  }
  fkpg::PgOptions opts;
  opts.mode = mode_of(sampler);
  fkpg::PGState st = fkpg::init_pg(x0, 1.0);
  fkpg::aux_pgibbs_step(bm.target, st, 8, rng, opts);
  const clk::time_point t0 = clk::now();
  for (int i = 0; i < iters; ++i)
    fkpg::aux_pgibbs_step(bm.target, st, 8, rng, opts);
  return seconds_since(t0) / iters;
}

void bench_table(const std::string& sampler, const std::vector<int>& sizes,
                 std::ostream& out) {
  out << "sampler,T,iters,seconds_per_step\n";
  for (int T : sizes) {
    const int iters = std::max(5, 50000 / std::max(T, 1));
    const double sec = seconds_per_step(sampler, T, iters, env_workers(1));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", sec);
    out << sampler << "," << T << "," << iters << "," << buf << "\n";
  }
}

}  // namespace auxmc::bench
