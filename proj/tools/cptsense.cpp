// Command-line front end: scenario simulation, estimation, bounds, parameter
// sweeps, pipeline comparisons, and canned figure-style experiments.  Every
// failure is reported as a JSON object on stdout with a stable "type" tag.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cptsense/cptsense.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs = 0;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required = true) {
  cmd->add_option("--config", opts.config_path,
                  "Scenario config JSON (defaults used when omitted)");
  auto* out = cmd->add_option("--out", opts.out_dir, "Output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", opts.seed, "Override master_seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--runs", opts.runs, "Override Monte Carlo run count");
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (default: hardware concurrency)");
}

cptsense::ScenarioConfig load_config(const CommonOpts& opts) {
  cptsense::ScenarioConfig cfg = cptsense::ScenarioConfig::defaults();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in)
      throw cptsense::IoError("cannot open config file " + opts.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw cptsense::ConfigError(std::string("config is not valid JSON: ") +
                                  e.what());
    }
    cfg = cptsense::ScenarioConfig::from_json(j);
  }
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (opts.runs > 0) cfg.runs = opts.runs;
  cfg.validate();
  return cfg;
}

fs::path prepare_out_dir(const std::string& dir, bool with_runs = false) {
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (with_runs) fs::create_directories(out / "runs", ec);
  if (ec) throw cptsense::IoError("cannot create output directory " + dir);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw cptsense::IoError("cannot write " + path.string());
  os << text;
}

void write_json_file(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_config(const fs::path& out, const cptsense::ScenarioConfig& cfg) {
  write_json_file(out / "config.json", cfg.to_json());
}

json with_meta(const cptsense::ScenarioConfig& cfg, json body) {
  body["config"] = cfg.to_json();
  body["generator"] = std::string(cptsense::project_name) + " " +
                      std::string(cptsense::project_version);
  return body;
}

fs::path run_csv_path(const fs::path& out, std::uint64_t run_index) {
  char name[32];
  std::snprintf(name, sizeof name, "run_%04llu.csv",
                static_cast<unsigned long long>(run_index));
  return out / "runs" / name;
}

std::vector<double> parse_grid(const std::string& csv, const char* flag) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw cptsense::ConfigError(std::string("bad value '") + token +
                                  "' in " + flag);
    }
  }
  if (values.empty())
    throw cptsense::ConfigError(std::string(flag) + " needs at least one value");
  return values;
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_simulate(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const fs::path out = prepare_out_dir(opts.out_dir, true);
  write_config(out, cfg);

  std::vector<std::uint64_t> totals(cfg.runs, 0);
  cptsense::detail::parallel_for(
      cfg.runs, cptsense::detail::resolve_threads(opts.threads, cfg.runs),
      [&](int r) {
        const auto ri = static_cast<std::uint64_t>(r);
        cptsense::RunResult run;
        run.run_index = ri;
        run.bath = cptsense::scenario_bath(cfg, ri);
        run.counts = cptsense::scenario_counts(cfg, run.bath, ri, cfg.sim.sse);
        totals[r] = run.counts.total();
        std::ostringstream os;
        cptsense::write_run_csv(os, cfg, run, /*with_estimates=*/false);
        write_text(run_csv_path(out, ri), os.str());
      });

  std::uint64_t total = 0;
  for (auto t : totals) total += t;
  const double t_obs = cfg.sim.duration * cfg.runs;
  write_json_file(out / "summary.json",
                  with_meta(cfg, {{"runs", cfg.runs},
                                  {"total_counts", total},
                                  {"mean_count_rate_per_s", total / t_obs}}));
  std::cout << "wrote " << cfg.runs << " runs to " << out.string() << "\n";
  return 0;
}

int cmd_estimate(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const fs::path out = prepare_out_dir(opts.out_dir, true);
  write_config(out, cfg);

  const auto summary = cptsense::run_scenario(
      cfg, opts.threads, [&](const cptsense::RunResult& run) {
        std::ostringstream os;
        cptsense::write_run_csv(os, cfg, run);
        write_text(run_csv_path(out, run.run_index), os.str());
      });
  write_json_file(out / "summary.json",
                  with_meta(cfg, cptsense::summary_to_json(summary)));
  std::cout << "var_ou = " << summary.ou.variance
            << " (rad/s)^2 over " << cfg.runs << " runs; summary in "
            << (out / "summary.json").string() << "\n";
  return 0;
}

int cmd_crlb(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const auto report = cptsense::make_crlb_report(cfg.cpt, cfg.bath);
  const json j = with_meta(cfg, {{"crlb", cptsense::crlb_to_json(report)},
                                 {"sigma_sq", cfg.bath.sigma * cfg.bath.sigma}});
  if (!opts.out_dir.empty()) {
    const fs::path out = prepare_out_dir(opts.out_dir);
    write_json_file(out / "crlb.json", j);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_sweep_to(const fs::path& out, const cptsense::ScenarioConfig& cfg,
                 const cptsense::SweepResult& sweep, const char* filename) {
  std::ostringstream os;
  cptsense::write_sweep_csv(os, sweep);
  write_text(out / filename, os.str());
  std::cout << sweep.points.size() << " sweep points written to "
            << (out / filename).string() << "\n";
  return 0;
}

int cmd_compare_sse(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const fs::path out = prepare_out_dir(opts.out_dir);
  write_config(out, cfg);
  const auto report = cptsense::compare_sse_steady(cfg, opts.threads);
  write_json_file(out / "compare.json",
                  with_meta(cfg, cptsense::compare_to_json(report)));
  std::cout << "var_ou: sse " << report.ou_sse.variance << " vs steady "
            << report.ou_steady.variance << " (" << cfg.runs << " runs)\n";
  return 0;
}

int cmd_figure(const std::string& which, const CommonOpts& opts) {
  cptsense::ScenarioConfig cfg = load_config(opts);
  const fs::path out = prepare_out_dir(opts.out_dir);

  if (which == "2a") {
    // Lineshape scan: analytic dip formula against the exact steady state.
    std::ostringstream os;
    os << "x_mhz,rho_analytic,rho_liouville\n";
    const int n = 501;
    for (int i = 0; i < n; ++i) {
      const double x_mhz = -1.0 + 2.5 * i / (n - 1.0);
      const double x = cptsense::mhz_to_rad_s(x_mhz);
      os << cptsense::format_g17(x_mhz) << ','
         << cptsense::format_g17(cptsense::rho_ee_analytic(cfg.cpt, x)) << ','
         << cptsense::format_g17(cptsense::rho_ee_exact(cfg.cpt, x)) << "\n";
    }
    write_text(out / "figure2a.csv", os.str());
    write_config(out, cfg);
    std::cout << "lineshape scan written to " << (out / "figure2a.csv").string()
              << "\n";
    return 0;
  }
  if (which == "3") {
    write_config(out, cfg);
    const auto sweep = cptsense::sweep_tau_n(
        cfg, {0.25e-3, 0.5e-3, 1e-3, 2e-3, 4e-3}, opts.threads);
    return run_sweep_to(out, cfg, sweep, "figure3.csv");
  }
  if (which == "4a") {
    write_config(out, cfg);
    const auto track = cptsense::run_mse_track(cfg, opts.threads);
    std::ostringstream os;
    cptsense::write_mse_track_csv(os, track);
    write_text(out / "figure4a.csv", os.str());
    const auto summary = cptsense::run_scenario(cfg, opts.threads);
    write_json_file(out / "summary.json",
                    with_meta(cfg, cptsense::summary_to_json(summary)));
    std::cout << "per-bin MSE track written to "
              << (out / "figure4a.csv").string() << "\n";
    return 0;
  }
  if (which == "4b") {
    write_config(out, cfg);
    std::vector<double> taus, sigmas;
    for (double f : {0.5, 0.8, 1.0, 1.25, 2.0}) {
      taus.push_back(f * cfg.bath.tau_n);
      sigmas.push_back(f * cfg.bath.sigma);
    }
    const auto sweep = cptsense::sweep_mismatch(cfg, taus, sigmas, opts.threads);
    return run_sweep_to(out, cfg, sweep, "figure4b.csv");
  }
  if (which == "5" || which == "7") {
    if (opts.runs <= 0) cfg.runs = 50;
    write_config(out, cfg);
    std::vector<double> rabis, biases;
    for (double v : {1.5, 2.0, 2.5, 3.0, 4.0})
      rabis.push_back(cptsense::mhz_to_rad_s(v));
    for (double v : {0.05, 0.1, 0.2, 0.3, 0.5})
      biases.push_back(cptsense::mhz_to_rad_s(v));
    const auto sweep =
        which == "5"
            ? cptsense::sweep_omega_bias(cfg, rabis, biases, opts.threads)
            : cptsense::sweep_omega_optbias(cfg, rabis, biases, opts.threads);
    return run_sweep_to(out, cfg, sweep,
                        which == "5" ? "figure5.csv" : "figure7.csv");
  }
  if (which == "6b") {
    cfg.sim.sse = true;
    cfg.sim.duration = 2e-3;
    cfg.sim.t_discard = 1e-3;
    cfg.validate();
    write_config(out, cfg);
    const auto report = cptsense::compare_sse_steady(cfg, opts.threads);
    write_json_file(out / "figure6b.json",
                    with_meta(cfg, cptsense::compare_to_json(report)));
    std::cout << "pipeline comparison written to "
              << (out / "figure6b.json").string() << "\n";
    return 0;
  }
  throw cptsense::ConfigError("unknown figure '" + which +
                              "' (expected 2a, 3, 4a, 4b, 5, 6b or 7)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous magnetic-field sensing with a CPT dark-state "
               "emitter: simulation, estimation, and bounds"};
  app.require_subcommand(1);

  CommonOpts sim_opts, est_opts, crlb_opts, cmp_opts, fig_opts;
  CommonOpts sweep_opts;
  std::string sweep_tau_list, sweep_factor_list, sweep_rabi_list,
      sweep_bias_list;
  std::string figure_name;

  add_common(app.add_subcommand("simulate",
                                "Generate bath + photon-count records"),
             sim_opts);
  add_common(app.add_subcommand(
                 "estimate", "Simulate and run all three causal estimators"),
             est_opts);
  add_common(app.add_subcommand("crlb", "Evaluate the estimation bounds"),
             crlb_opts, /*out_required=*/false);

  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
  sweep->require_subcommand(1);
  auto* sw_tau = sweep->add_subcommand("tau-n", "Bath correlation-time sweep");
  auto* sw_mis = sweep->add_subcommand("mismatch", "Assumed-bath mismatch grid");
  auto* sw_ob = sweep->add_subcommand("omega-bias", "Drive/bias working grid");
  auto* sw_opt = sweep->add_subcommand(
      "omega-optbias", "Optimal bias per drive strength");
  for (CLI::App* s : {sw_tau, sw_mis, sw_ob, sw_opt}) add_common(s, sweep_opts);
  sw_tau->add_option("--tau-n-s", sweep_tau_list,
                     "Comma list of correlation times in seconds");
  sw_mis->add_option("--factors", sweep_factor_list,
                     "Comma list of multipliers applied to the assumed bath");
  for (CLI::App* s : {sw_ob, sw_opt}) {
    s->add_option("--rabi-mhz", sweep_rabi_list, "Comma list of Rabi freqs");
    s->add_option("--bias-mhz", sweep_bias_list, "Comma list of bias detunings");
  }

  add_common(app.add_subcommand("compare-sse",
                                "Unravelled vs steady-state count pipelines"),
             cmp_opts);
  auto* fig = app.add_subcommand("figure", "Canned experiment presets");
  fig->add_option("name", figure_name, "One of: 2a 3 4a 4b 5 6b 7")->required();
  add_common(fig, fig_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("simulate")) return cmd_simulate(sim_opts);
    if (app.got_subcommand("estimate")) return cmd_estimate(est_opts);
    if (app.got_subcommand("crlb")) return cmd_crlb(crlb_opts);
    if (app.got_subcommand("compare-sse")) return cmd_compare_sse(cmp_opts);
    if (app.got_subcommand("figure")) return cmd_figure(figure_name, fig_opts);
    if (app.got_subcommand("sweep")) {
      const auto cfg = load_config(sweep_opts);
      const fs::path out = prepare_out_dir(sweep_opts.out_dir);
      write_config(out, cfg);
      cptsense::SweepResult result;
      if (sweep->got_subcommand("tau-n")) {
        const auto taus = sweep_tau_list.empty()
                              ? std::vector<double>{0.25e-3, 0.5e-3, 1e-3,
                                                    2e-3, 4e-3}
                              : parse_grid(sweep_tau_list, "--tau-n-s");
        result = cptsense::sweep_tau_n(cfg, taus, sweep_opts.threads);
      } else if (sweep->got_subcommand("mismatch")) {
        const auto factors =
            sweep_factor_list.empty()
                ? std::vector<double>{0.5, 0.8, 1.0, 1.25, 2.0}
                : parse_grid(sweep_factor_list, "--factors");
        std::vector<double> taus, sigmas;
        for (double f : factors) {
          taus.push_back(f * cfg.bath.tau_n);
          sigmas.push_back(f * cfg.bath.sigma);
        }
        result = cptsense::sweep_mismatch(cfg, taus, sigmas, sweep_opts.threads);
      } else {
        const auto rabis_mhz =
            sweep_rabi_list.empty()
                ? std::vector<double>{1.5, 2.0, 2.5, 3.0, 4.0}
                : parse_grid(sweep_rabi_list, "--rabi-mhz");
        const auto biases_mhz =
            sweep_bias_list.empty()
                ? std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.5}
                : parse_grid(sweep_bias_list, "--bias-mhz");
        std::vector<double> rabis, biases;
        for (double v : rabis_mhz) rabis.push_back(cptsense::mhz_to_rad_s(v));
        for (double v : biases_mhz) biases.push_back(cptsense::mhz_to_rad_s(v));
        result = sweep->got_subcommand("omega-bias")
                     ? cptsense::sweep_omega_bias(cfg, rabis, biases,
                                                  sweep_opts.threads)
                     : cptsense::sweep_omega_optbias(cfg, rabis, biases,
                                                     sweep_opts.threads);
      }
      return run_sweep_to(out, cfg, result, "sweep.csv");
    }
  } catch (const cptsense::Error& e) {
    const json err = {{"error", {{"type", e.kind()}, {"message", e.what()}}}};
    std::cout << err.dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    const json err = {{"error", {{"type", "internal"}, {"message", e.what()}}}};
    std::cout << err.dump(2) << "\n";
    return 1;
  }
  return 0;
}
