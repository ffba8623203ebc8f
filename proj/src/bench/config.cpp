#include "auxmc/bench/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "auxmc/version.hpp"

namespace auxmc::bench {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.find(it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key +
                      "': " + e.what());
  }
}

const std::set<std::string> kSamplers = {
    "aux-kalman-seq",  "aux-kalman-prefix", "aux-kalman-dnc",
    "pgibbs-prior",    "pgibbs-gradient",   "pgibbs-adapted"};

json vec_json(const Vec& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

bool is_aux_family(const std::string& sampler) {
  return sampler.rfind("aux-kalman-", 0) == 0;
}

bool is_pgibbs_family(const std::string& sampler) {
  return sampler.rfind("pgibbs-", 0) == 0;
}

ModelSpec parse_model_spec(const nlohmann::json& j) {
  check_keys(j,
             {"kind",      "T",         "dx",        "dy",       "grid",
              "data_seed", "data_file", "sv_mu",     "sv_phi",   "sv_sig2",
              "sv_rho",    "lz_sigma",  "lz_rho",    "lz_beta",  "lz_h",
              "lz_gamma",  "lz_obs_var", "st_phi",   "st_kappa2", "st_tau2",
              "g1_phi",    "g1_q",      "g1_m0",     "g1_p0"},
             "model");
  ModelSpec s;
  read_field(j, "kind", s.kind);
  read_field(j, "T", s.T);
  read_field(j, "dx", s.dx);
  read_field(j, "dy", s.dy);
  read_field(j, "grid", s.grid);
  read_field(j, "data_seed", s.data_seed);
  read_field(j, "data_file", s.data_file);
  read_field(j, "sv_mu", s.sv_mu);
  read_field(j, "sv_phi", s.sv_phi);
  read_field(j, "sv_sig2", s.sv_sig2);
  read_field(j, "sv_rho", s.sv_rho);
  read_field(j, "lz_sigma", s.lz_sigma);
  read_field(j, "lz_rho", s.lz_rho);
  read_field(j, "lz_beta", s.lz_beta);
  read_field(j, "lz_h", s.lz_h);
  read_field(j, "lz_gamma", s.lz_gamma);
  read_field(j, "lz_obs_var", s.lz_obs_var);
  read_field(j, "st_phi", s.st_phi);
  read_field(j, "st_kappa2", s.st_kappa2);
  read_field(j, "st_tau2", s.st_tau2);
  read_field(j, "g1_phi", s.g1_phi);
  read_field(j, "g1_q", s.g1_q);
  read_field(j, "g1_m0", s.g1_m0);
  read_field(j, "g1_p0", s.g1_p0);
  check_model_spec(s);
  latent_dim(s);  // rejects unknown kinds
  return s;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  check_keys(j,
             {"sampler", "chain_length", "burn_in", "particles", "delta_init",
              "target_acceptance", "seed", "workers", "output_dir",
              "probe_times", "sample_param", "param_step", "model"},
             "config");
  RunConfig c;
  read_field(j, "sampler", c.sampler);
  read_field(j, "chain_length", c.chain_length);
  read_field(j, "burn_in", c.burn_in);
  read_field(j, "particles", c.particles);
  read_field(j, "delta_init", c.delta_init);
  read_field(j, "target_acceptance", c.target_acceptance);
  read_field(j, "seed", c.seed);
  read_field(j, "workers", c.workers);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "probe_times", c.probe_times);
  read_field(j, "sample_param", c.sample_param);
  read_field(j, "param_step", c.param_step);
  if (j.contains("model")) c.model = parse_model_spec(j.at("model"));

  if (kSamplers.find(c.sampler) == kSamplers.end())
    throw ConfigError("unknown sampler: " + c.sampler);
  if (c.chain_length < 0) throw ConfigError("chain_length must be >= 0");
  if (c.burn_in < 0 || c.burn_in > c.chain_length)
    throw ConfigError("burn_in must be in [0, chain_length]");
  if (c.particles < 1) throw ConfigError("particles must be >= 1");
  if (!(c.delta_init > 0)) throw ConfigError("delta_init must be > 0");
  if (c.target_acceptance < 0 || c.target_acceptance >= 1)
    throw ConfigError("target_acceptance must be in [0, 1)");
  if (c.target_acceptance == 0.0)
    c.target_acceptance = is_aux_family(c.sampler) ? 0.574 : 0.9;
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  for (int t : c.probe_times)
    if (t < 0 || t > c.model.T)
      throw ConfigError("probe_times entries must be in [0, model.T]");
  if (c.sample_param && c.model.kind != "diffusion-smoothing")
    throw ConfigError("sample_param requires the diffusion-smoothing model");
  if (!(c.param_step > 0)) throw ConfigError("param_step must be > 0");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json model_json(const ModelSpec& s) {
  return nlohmann::json{
      {"kind", s.kind},           {"T", s.T},
      {"dx", s.dx},               {"dy", s.dy},
      {"grid", s.grid},           {"data_seed", s.data_seed},
      {"data_file", s.data_file}, {"sv_mu", s.sv_mu},
      {"sv_phi", s.sv_phi},       {"sv_sig2", s.sv_sig2},
      {"sv_rho", s.sv_rho},       {"lz_sigma", s.lz_sigma},
      {"lz_rho", s.lz_rho},       {"lz_beta", s.lz_beta},
      {"lz_h", s.lz_h},           {"lz_gamma", s.lz_gamma},
      {"lz_obs_var", s.lz_obs_var}, {"st_phi", s.st_phi},
      {"st_kappa2", s.st_kappa2}, {"st_tau2", s.st_tau2},
      {"g1_phi", s.g1_phi},       {"g1_q", s.g1_q},
      {"g1_m0", s.g1_m0},         {"g1_p0", s.g1_p0}};
}

nlohmann::json config_json(const RunConfig& c) {
  return nlohmann::json{{"sampler", c.sampler},
                        {"chain_length", c.chain_length},
                        {"burn_in", c.burn_in},
                        {"particles", c.particles},
                        {"delta_init", c.delta_init},
                        {"target_acceptance", c.target_acceptance},
                        {"seed", c.seed},
                        {"workers", c.workers},
                        {"output_dir", c.output_dir},
                        {"probe_times", c.probe_times},
                        {"sample_param", c.sample_param},
                        {"param_step", c.param_step},
                        {"model", model_json(c.model)}};
}

nlohmann::json summary_json(const ChainSummary& s, const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_json(cfg);
  j["probe_times"] = s.probe_times;
  j["probe_coords"] = s.probe_coords;
  j["kept"] = s.kept;
  if (s.kept > 0) {
    j["mean"] = vec_json(s.mean);
    j["sd"] = vec_json(s.sd);
    nlohmann::json e = nlohmann::json::array();
    for (double v : s.ess)
      e.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
    j["ess"] = e;
    j["rate"] = s.rate;
  } else {
    j["mean"] = nullptr;
    j["sd"] = nullptr;
    j["ess"] = nullptr;
    j["rate"] = nullptr;
  }
  j["final_delta"] = s.final_delta;
  j["burn_seconds"] = s.burn_seconds;
  j["sample_seconds"] = s.sample_seconds;
  if (s.has_param) {
    j["param_mean"] = s.param_mean;
    j["param_sd"] = s.param_sd;
  }
  return j;
}

}  // namespace auxmc::bench
