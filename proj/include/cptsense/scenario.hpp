#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpt.hpp"
#include "errors.hpp"
#include "ou.hpp"
#include "units.hpp"
#include "version.hpp"

namespace cptsense {

/// Time-grid and pipeline switches for one simulated experiment.
struct SimConfig {
  double duration = 10e-3;         // total simulated time per run, s
  double t_discard = 2e-3;         // warm-up excluded from variance summaries
  double update_interval = 10e-6;  // count bin width tau, s
  double bath_dt = 0.1e-6;         // bath sample spacing, s
  bool sse = false;                // full wavefunction unravelling vs
                                   // steady-state Poisson counts
  double sse_dt = 0.6e-9;          // integrator step for the unravelling, s

  void validate() const {
    if (!(duration > 0.0)) throw InvalidParams("duration_s must be > 0");
    if (!(t_discard >= 0.0 && t_discard < duration))
      throw InvalidParams("t_discard_s must lie in [0, duration_s)");
    if (!(update_interval > 0.0))
      throw InvalidParams("update_interval_s must be > 0");
    if (!(bath_dt > 0.0)) throw InvalidParams("bath_dt_s must be > 0");
    if (!(sse_dt > 0.0)) throw InvalidParams("sse_dt_s must be > 0");
    const double stride = update_interval / bath_dt;
    if (std::abs(stride - std::llround(stride)) > 1e-6)
      throw InvalidParams(
          "update_interval_s must be an integer multiple of bath_dt_s");
  }
};

/// Full description of a numerical experiment: emitter, true bath, the bath
/// statistics the estimators assume, time grids, and Monte Carlo bookkeeping.
/// External representation (JSON / CLI) quotes frequencies in MHz; the
/// constructor-validated members are angular rad/s.
struct ScenarioConfig {
  CptParams cpt;
  BathParams bath;
  BathParams assumed_bath;
  SimConfig sim;
  int runs = 100;
  std::uint64_t master_seed = 12345;

  static ScenarioConfig defaults() {
    const CptParams cpt(mhz_to_rad_s(2.8), mhz_to_rad_s(13.0),
                        mhz_to_rad_s(0.25), 0.016);
    const BathParams bath(1e-3, mhz_to_rad_s(0.13));
    return ScenarioConfig{cpt, bath, bath, SimConfig{}, 100, 12345};
  }

  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  void validate() const {
    sim.validate();
    if (runs < 1) throw InvalidParams("runs must be >= 1");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const char* section) {
  if (!j.is_object()) {
    std::ostringstream os;
    os << "config section '" << section << "' must be a JSON object";
    throw ConfigError(os.str());
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) {
      std::ostringstream os;
      os << "unknown config field '" << section << "." << item.key() << "'";
      throw ConfigError(os.str());
    }
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    std::ostringstream os;
    os << "config field '" << key << "' has the wrong type";
    throw ConfigError(os.str());
  }
}

}  // namespace detail

inline ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j, {"cpt", "bath", "assumed_bath", "sim", "runs", "master_seed"}, "");

  const ScenarioConfig base = defaults();
  double rabi_mhz = 2.8, gamma_mhz = 13.0, bias_mhz = 0.25, eta = 0.016;
  std::optional<double> kappa_mhz;
  double gamma_s_mhz = 0.0;
  if (j.contains("cpt")) {
    const auto& c = j.at("cpt");
    detail::reject_unknown_keys(c,
                                {"rabi_mhz", "gamma_mhz", "bias_mhz",
                                 "kappa_mhz", "gamma_s_mhz", "eta"},
                                "cpt");
    rabi_mhz = detail::get_or(c, "rabi_mhz", rabi_mhz);
    gamma_mhz = detail::get_or(c, "gamma_mhz", gamma_mhz);
    bias_mhz = detail::get_or(c, "bias_mhz", bias_mhz);
    eta = detail::get_or(c, "eta", eta);
    gamma_s_mhz = detail::get_or(c, "gamma_s_mhz", gamma_s_mhz);
    if (c.contains("kappa_mhz"))
      kappa_mhz = detail::get_or(c, "kappa_mhz", 0.0);
  }

  double tau_n_s = base.bath.tau_n, sigma_mhz = rad_s_to_mhz(base.bath.sigma);
  if (j.contains("bath")) {
    const auto& b = j.at("bath");
    detail::reject_unknown_keys(b, {"tau_n_s", "sigma_mhz"}, "bath");
    tau_n_s = detail::get_or(b, "tau_n_s", tau_n_s);
    sigma_mhz = detail::get_or(b, "sigma_mhz", sigma_mhz);
  }

  double assumed_tau_n_s = tau_n_s, assumed_sigma_mhz = sigma_mhz;
  if (j.contains("assumed_bath")) {
    const auto& b = j.at("assumed_bath");
    detail::reject_unknown_keys(b, {"tau_n_s", "sigma_mhz"}, "assumed_bath");
    assumed_tau_n_s = detail::get_or(b, "tau_n_s", assumed_tau_n_s);
    assumed_sigma_mhz = detail::get_or(b, "sigma_mhz", assumed_sigma_mhz);
  }

  SimConfig sim = base.sim;
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    detail::reject_unknown_keys(s,
                                {"duration_s", "t_discard_s",
                                 "update_interval_s", "bath_dt_s", "sse",
                                 "sse_dt_s"},
                                "sim");
    sim.duration = detail::get_or(s, "duration_s", sim.duration);
    sim.t_discard = detail::get_or(s, "t_discard_s", sim.t_discard);
    sim.update_interval = detail::get_or(s, "update_interval_s", sim.update_interval);
    sim.bath_dt = detail::get_or(s, "bath_dt_s", sim.bath_dt);
    sim.sse = detail::get_or(s, "sse", sim.sse);
    sim.sse_dt = detail::get_or(s, "sse_dt_s", sim.sse_dt);
  }

  std::optional<double> kappa_rad;
  if (kappa_mhz) kappa_rad = mhz_to_rad_s(*kappa_mhz);
  ScenarioConfig cfg{
      CptParams(mhz_to_rad_s(rabi_mhz), mhz_to_rad_s(gamma_mhz),
                mhz_to_rad_s(bias_mhz), eta, kappa_rad,
                mhz_to_rad_s(gamma_s_mhz)),
      BathParams(tau_n_s, mhz_to_rad_s(sigma_mhz)),
      BathParams(assumed_tau_n_s, mhz_to_rad_s(assumed_sigma_mhz)),
      sim,
      detail::get_or(j, "runs", base.runs),
      detail::get_or(j, "master_seed", base.master_seed)};
  cfg.validate();
  return cfg;
}

inline nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["cpt"]["rabi_mhz"] = rad_s_to_mhz(cpt.rabi);
  j["cpt"]["gamma_mhz"] = rad_s_to_mhz(cpt.gamma);
  j["cpt"]["bias_mhz"] = rad_s_to_mhz(cpt.bias);
  j["cpt"]["kappa_mhz"] = rad_s_to_mhz(cpt.kappa);
  j["cpt"]["gamma_s_mhz"] = rad_s_to_mhz(cpt.gamma_s);
  j["cpt"]["eta"] = cpt.eta;
  j["bath"]["tau_n_s"] = bath.tau_n;
  j["bath"]["sigma_mhz"] = rad_s_to_mhz(bath.sigma);
  j["assumed_bath"]["tau_n_s"] = assumed_bath.tau_n;
  j["assumed_bath"]["sigma_mhz"] = rad_s_to_mhz(assumed_bath.sigma);
  j["sim"]["duration_s"] = sim.duration;
  j["sim"]["t_discard_s"] = sim.t_discard;
  j["sim"]["update_interval_s"] = sim.update_interval;
  j["sim"]["bath_dt_s"] = sim.bath_dt;
  j["sim"]["sse"] = sim.sse;
  j["sim"]["sse_dt_s"] = sim.sse_dt;
  j["runs"] = runs;
  j["master_seed"] = master_seed;
  return j;
}

}  // namespace cptsense
