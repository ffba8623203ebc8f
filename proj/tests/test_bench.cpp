#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "auxmc/bench/config.hpp"
#include "auxmc/bench/diagnostics.hpp"
#include "auxmc/bench/grid_hmm.hpp"
#include "auxmc/bench/models.hpp"
#include "auxmc/bench/runner.hpp"
#include "auxmc/lgssm.hpp"
#include "testutil.hpp"

using namespace auxmc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("auxmc_test_" + tag);
  fs::create_directories(p);
  return p;
}

Mat read_trace(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::string line;
  REQUIRE(static_cast<bool>(std::getline(in, line)));  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat out(static_cast<long>(rows.size()), static_cast<long>(rows[0].size()));
  for (long i = 0; i < out.rows(); ++i)
    for (long j = 0; j < out.cols(); ++j)
      out(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return out;
}

}  // namespace

TEST_CASE("build_model: frozen volatility dynamics give a constant latent") {
  bench::ModelSpec spec;
  spec.kind = "stochvol";
  spec.T = 12;
  spec.dx = 2;
  spec.sv_sig2 = 0.0;
  bench::BuiltModel built = bench::build_model(spec);
  REQUIRE(built.latent_true.rows() == 13);
  for (int t = 0; t <= 12; ++t)
    for (int j = 0; j < 2; ++j)
      CHECK(built.latent_true(t, j) == spec.sv_mu);
  CHECK(built.data.rows() == 13);
  CHECK(built.data.cols() == 2);
}

TEST_CASE("build_model: simulation is a pure function of the data seed") {
  bench::ModelSpec spec;
  spec.kind = "lgssm-synthetic";
  spec.T = 9;
  spec.dx = 2;
  spec.dy = 2;
  spec.data_seed = 7;
  bench::BuiltModel a = bench::build_model(spec);
  bench::BuiltModel b = bench::build_model(spec);
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.latent_true - b.latent_true).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.exact.has_value());
  CHECK(a.exact->horizon() == 9);

  spec.data_seed = 8;
  bench::BuiltModel c = bench::build_model(spec);
  CHECK((a.data - c.data).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("grid posterior agrees with importance sampling on the quartic model") {
  bench::ModelSpec spec;
  spec.kind = "grid-1d-test";
  spec.T = 4;
  bench::BuiltModel built = bench::build_model(spec);
  bench::GridPosterior grid =
      bench::grid_hmm_posterior(built.target, -3.0, 3.0, 1500);

  for (int t = 0; t <= 4; ++t)
    CHECK(grid.marginals.row(t).sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::isfinite(grid.log_evidence));

  // Self-normalized importance sampling from the AR(1) prior, weighted by
  // the quartic potentials.
  const int n = 400000;
  RngStream rng = RngStream::from_seed(31);
  Vec logw(n), x0(n);
  for (int i = 0; i < n; ++i) {
    double x = spec.g1_m0 + std::sqrt(spec.g1_p0) * rng.next_normal();
    x0[i] = x;
    double lw = -std::pow(x, 4);
    for (int t = 1; t <= 4; ++t) {
      x = spec.g1_phi * x + std::sqrt(spec.g1_q) * rng.next_normal();
      lw -= std::pow(x, 4);
    }
    logw[i] = lw;
  }
  Vec w = (logw.array() - logw.maxCoeff()).exp();
  w /= w.sum();
  const double is_mean = w.dot(x0);
  // Delta-method standard error of the self-normalized estimator.
  const double is_se =
      std::sqrt((w.array().square() * (x0.array() - is_mean).square()).sum());
  CHECK(std::abs(grid.mean[0] - is_mean) < 4.0 * is_se);
}

TEST_CASE("grid posterior is exact on a linear-Gaussian target") {
  RngStream rng = RngStream::from_seed(32).derive(stream::kSimulate, 0);
  lgssm::Model m = testutil::random_model(rng, 6, 1, 1);
  Mat obs = testutil::simulate_obs(m, RngStream::from_seed(33));
  auxk::GenSSMTarget target = testutil::lgssm_target_exact(m, obs);

  lgssm::FilterResult filt = lgssm::kalman_filter(m, obs);
  auto smooth = lgssm::rts_smoother(m, filt);
  bench::GridPosterior grid =
      bench::grid_hmm_posterior(target, -10.0, 10.0, 2000);

  for (int t = 0; t <= 6; ++t) {
    CHECK(grid.mean[t] ==
          doctest::Approx(smooth[static_cast<size_t>(t)].mean[0]).epsilon(1e-6));
    CHECK(grid.var[t] ==
          doctest::Approx(smooth[static_cast<size_t>(t)].cov(0, 0)).epsilon(1e-6));
  }
  CHECK(grid.log_evidence == doctest::Approx(filt.log_marginal).epsilon(1e-6));
}

TEST_CASE("ess: independent, autocorrelated, and duplicated chains") {
  RngStream rng = RngStream::from_seed(34);

  SUBCASE("independent draws have ess near n") {
    const long n = 20000;
    Vec chain = rng.normal_vec(n);
    const double r = bench::ess(chain) / static_cast<double>(n);
    CHECK(r > 0.9);
    CHECK(r < 1.1);
  }

  SUBCASE("AR(1) at rho 0.5 has ess near n/3") {
    const long n = 200000;
    Vec chain(n);
    double x = 0.0;
    const double rho = 0.5, s = std::sqrt(1.0 - rho * rho);
    for (long i = 0; i < n; ++i) {
      x = rho * x + s * rng.next_normal();
      chain[i] = x;
    }
    const double r = bench::ess(chain) / static_cast<double>(n);
    CHECK(std::abs(r - 1.0 / 3.0) < 0.05);
  }

  SUBCASE("pairwise duplication halves the ess fraction") {
    const long n = 5000;
    Vec base = rng.normal_vec(n);
    Vec dup(2 * n);
    for (long i = 0; i < n; ++i) {
      dup[2 * i] = base[i];
      dup[2 * i + 1] = base[i];
    }
    const double r = bench::ess(dup) / static_cast<double>(2 * n);
    CHECK(r > 0.45);
    CHECK(r < 0.55);
  }

  SUBCASE("undefined cases throw") {
    CHECK_THROWS_AS(bench::ess(Vec::Zero(50)), DimensionError);
    CHECK_THROWS_AS(bench::ess(Vec::Constant(500, 2.0)), ContractError);
  }
}

TEST_CASE("mcse matches sd/sqrt(n) scaled by the autocorrelation time") {
  RngStream rng = RngStream::from_seed(35);
  const long n = 100000;

  Vec iid = rng.normal_vec(n);
  const double sd_iid =
      std::sqrt((iid.array() - iid.mean()).square().sum() / (n - 1.0));
  CHECK(bench::mcse(iid) ==
        doctest::Approx(sd_iid / std::sqrt(static_cast<double>(n))).epsilon(0.15));

  Vec ar(n);
  double x = 0.0;
  const double rho = 0.5, s = std::sqrt(1.0 - rho * rho);
  for (long i = 0; i < n; ++i) {
    x = rho * x + s * rng.next_normal();
    ar[i] = x;
  }
  const double sd_ar =
      std::sqrt((ar.array() - ar.mean()).square().sum() / (n - 1.0));
  CHECK(bench::mcse(ar) ==
        doctest::Approx(std::sqrt(3.0) * sd_ar / std::sqrt(static_cast<double>(n)))
            .epsilon(0.15));
}

TEST_CASE("column_moments on a hand matrix") {
  Mat draws(3, 2);
  draws << 1.0, -2.0, 2.0, 0.0, 3.0, 2.0;
  bench::Moments mom = bench::column_moments(draws);
  CHECK(mom.mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mom.mean[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mom.sd[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mom.sd[1] == doctest::Approx(2.0).epsilon(1e-12));

  bench::Moments single = bench::column_moments(Mat::Constant(1, 2, 4.0));
  CHECK(single.sd[0] == 0.0);
}

TEST_CASE("config parsing is strict and round-trips") {
  nlohmann::json j = {
      {"sampler", "pgibbs-gradient"},
      {"chain_length", 500},
      {"burn_in", 100},
      {"particles", 32},
      {"delta_init", 0.7},
      {"seed", 42},
      {"probe_times", {0, 3, 8}},
      {"model", {{"kind", "stochvol"}, {"T", 8}, {"dx", 3}, {"sv_mu", -0.5}}},
  };
  bench::RunConfig cfg = bench::parse_run_config(j);
  CHECK(cfg.sampler == "pgibbs-gradient");
  CHECK(cfg.chain_length == 500);
  CHECK(cfg.particles == 32);
  CHECK(cfg.model.kind == "stochvol");
  CHECK(cfg.model.sv_mu == -0.5);
  CHECK(cfg.probe_times == std::vector<int>{0, 3, 8});

  bench::RunConfig back = bench::parse_run_config(bench::config_json(cfg));
  CHECK(back.sampler == cfg.sampler);
  CHECK(back.chain_length == cfg.chain_length);
  CHECK(back.burn_in == cfg.burn_in);
  CHECK(back.particles == cfg.particles);
  CHECK(back.delta_init == cfg.delta_init);
  CHECK(back.seed == cfg.seed);
  CHECK(back.probe_times == cfg.probe_times);
  CHECK(back.model.kind == cfg.model.kind);
  CHECK(back.model.T == cfg.model.T);
  CHECK(back.model.sv_mu == cfg.model.sv_mu);

  SUBCASE("unknown keys are rejected at both levels") {
    nlohmann::json bad = j;
    bad["chain_lenght"] = 10;
    CHECK_THROWS_AS(bench::parse_run_config(bad), ConfigError);
    nlohmann::json bad2 = j;
    bad2["model"]["sv_muu"] = 0.0;
    CHECK_THROWS_AS(bench::parse_run_config(bad2), ConfigError);
  }

  SUBCASE("value constraints are enforced") {
    nlohmann::json bad = j;
    bad["sampler"] = "aux-kalman-quadratic";
    CHECK_THROWS_AS(bench::parse_run_config(bad), ConfigError);
    nlohmann::json bad2 = j;
    bad2["burn_in"] = 501;
    CHECK_THROWS_AS(bench::parse_run_config(bad2), ConfigError);
    nlohmann::json bad3 = j;
    bad3["delta_init"] = 0.0;
    CHECK_THROWS_AS(bench::parse_run_config(bad3), ConfigError);
    nlohmann::json bad4 = j;
    bad4["probe_times"] = {0, 99};
    CHECK_THROWS_AS(bench::parse_run_config(bad4), ConfigError);
    nlohmann::json bad5 = j;
    bad5["model"]["sv_rho"] = 1.0;
    CHECK_THROWS_AS(bench::parse_run_config(bad5), ConfigError);
  }
}

TEST_CASE("data CSV round-trips at full precision and rejects ragged rows") {
  fs::path dir = temp_dir("csv");
  const std::string path = (dir / "data.csv").string();

  Mat data(3, 2);
  data << 1.0 / 3.0, -0.0, 1e-17, 123456789.123456789, -2.5e16, 0.1;
  bench::write_data_csv(path, data);
  Mat back = bench::read_data_csv(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(back(i, j) == data(i, j));

  std::ofstream out(path);
  out << "t,y_0,y_1\n0,1.0,2.0\n1,3.0\n";
  out.close();
  CHECK_THROWS_AS(bench::read_data_csv(path), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("runner: sequential and prefix backends draw the same chain") {
  fs::path dir = temp_dir("backends");
  bench::RunConfig cfg;
  cfg.sampler = "aux-kalman-seq";
  cfg.chain_length = 60;
  cfg.burn_in = 10;
  cfg.seed = 11;
  cfg.model.kind = "grid-1d-test";
  cfg.model.T = 6;
  cfg.output_dir = (dir / "seq").string();
  bench::RunResult a = bench::run(cfg);

  cfg.sampler = "aux-kalman-prefix";
  cfg.output_dir = (dir / "prefix").string();
  bench::RunResult b = bench::run(cfg);

  Mat ta = read_trace(a.trace_path), tb = read_trace(b.trace_path);
  REQUIRE(ta.rows() == tb.rows());
  REQUIRE(ta.cols() == tb.cols());
  CHECK((ta - tb).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(a.summary.rate == doctest::Approx(b.summary.rate).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("runner: burn-only schedule yields null statistics") {
  fs::path dir = temp_dir("burnonly");
  bench::RunConfig cfg;
  cfg.sampler = "aux-kalman-seq";
  cfg.chain_length = 30;
  cfg.burn_in = 30;
  cfg.model.kind = "grid-1d-test";
  cfg.model.T = 3;
  cfg.output_dir = dir.string();
  bench::RunResult res = bench::run(cfg);
  CHECK(res.summary.kept == 0);
  CHECK(res.summary.mean.size() == 0);
  CHECK(res.summary.ess.empty());

  nlohmann::json j;
  std::ifstream in(res.summary_path);
  in >> j;
  CHECK(j.at("kept") == 0);
  CHECK(j.at("mean").is_null());
  CHECK(j.at("sd").is_null());
  CHECK(j.at("ess").is_null());
  CHECK(j.at("rate").is_null());
  fs::remove_all(dir);
}

TEST_CASE("runner: summary statistics are recomputable from the trace") {
  fs::path dir = temp_dir("recompute");
  bench::RunConfig cfg;
  cfg.sampler = "pgibbs-gradient";
  cfg.particles = 8;
  cfg.chain_length = 260;
  cfg.burn_in = 60;
  cfg.seed = 12;
  cfg.model.kind = "grid-1d-test";
  cfg.model.T = 5;
  cfg.probe_times = {0, 2, 5};
  cfg.output_dir = dir.string();
  bench::RunResult res = bench::run(cfg);

  CHECK(res.summary.probe_times == std::vector<int>{0, 2, 5});
  CHECK(res.summary.kept == 200);
  CHECK(res.summary.rate >= 0.0);
  CHECK(res.summary.rate <= 1.0);
  CHECK(res.summary.final_delta > 0.0);

  Mat trace = read_trace(res.trace_path);
  REQUIRE(trace.rows() == 200);
  REQUIRE(trace.cols() == 1 + 3);  // iter column plus one coord per probe
  for (int c = 0; c < 3; ++c) {
    Vec col = trace.col(c + 1);
    CHECK(res.summary.mean[c] == doctest::Approx(col.mean()).epsilon(1e-12));
    const double sd =
        std::sqrt((col.array() - col.mean()).square().sum() / (col.size() - 1.0));
    CHECK(res.summary.sd[c] == doctest::Approx(sd).epsilon(1e-12));
    CHECK(res.summary.ess[c] <= 200.0 + 1e-12);
  }
  fs::remove_all(dir);
}

TEST_CASE("runner: automatic probes cover both endpoints") {
  fs::path dir = temp_dir("probes");
  bench::RunConfig cfg;
  cfg.sampler = "aux-kalman-seq";
  cfg.chain_length = 25;
  cfg.burn_in = 5;
  cfg.model.kind = "grid-1d-test";
  cfg.model.T = 40;
  cfg.output_dir = dir.string();
  bench::RunResult res = bench::run(cfg);
  REQUIRE(!res.summary.probe_times.empty());
  CHECK(res.summary.probe_times.front() == 0);
  CHECK(res.summary.probe_times.back() == 40);
  CHECK(std::is_sorted(res.summary.probe_times.begin(),
                       res.summary.probe_times.end()));
  fs::remove_all(dir);
}

TEST_CASE("built-in validation suite passes and detects the planted bug") {
  std::vector<bench::ValidationItem> items = bench::validate();
  REQUIRE(!items.empty());
  for (const auto& item : items) {
    CAPTURE(item.name);
    CAPTURE(item.detail);
    CHECK(item.pass);
  }
}

TEST_CASE("model potential gradients match finite differences") {
  const char* kinds[] = {"lgssm-synthetic", "stochvol", "diffusion-smoothing",
                         "spatio-temporal", "grid-1d-test"};
  RngStream rng = RngStream::from_seed(36);
  for (const char* kind : kinds) {
    CAPTURE(kind);
    bench::ModelSpec spec;
    spec.kind = kind;
    spec.T = 6;
    spec.dx = 2;
    spec.dy = 2;
    spec.grid = 2;
    bench::BuiltModel built = bench::build_model(spec);
    const auxk::GenSSMTarget& target = built.target;

    for (int t : {0, 3, 6}) {
      for (int rep = 0; rep < 8; ++rep) {
        // Stay near the latent scale so Poisson/volatility terms are tame.
        Vec x = 0.5 * rng.normal_vec(target.dx());
        Vec grad = target.grad_pot(t, x);
        Vec fd = testutil::fd_gradient(
            [&](const Vec& z) { return target.log_pot(t, z); }, x);
        CHECK(testutil::rel_err(grad, fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("tractable dynamics expose consistent mean and Jacobian") {
  bench::ModelSpec spec;
  spec.kind = "diffusion-smoothing";
  spec.T = 4;
  bench::BuiltModel built = bench::build_model(spec);
  RngStream rng = RngStream::from_seed(37);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = rng.normal_vec(3);
    Mat jac = built.target.dyn_jac(1, x);
    for (int j = 0; j < 3; ++j) {
      Vec fd = testutil::fd_gradient(
          [&](const Vec& z) { return built.target.dyn_mean(1, z)[j]; }, x);
      CHECK(testutil::rel_err(Vec(jac.row(j).transpose()), fd) < 1e-5);
    }
  }
}
