#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "crlb.hpp"
#include "estimators.hpp"
#include "format.hpp"
#include "scenario.hpp"

namespace cptsense {

/// Everything produced by one Monte Carlo run.
struct RunResult {
  std::uint64_t run_index = 0;
  BathPath bath;
  CountSeries counts;
  EstimateSeries est_avg, est_simple, est_ou;
};

inline EstimatorConfig estimator_config(const ScenarioConfig& cfg) {
  return EstimatorConfig(cfg.cpt, cfg.assumed_bath, cfg.sim.update_interval);
}

/// True bath realization for run r.  Both count pipelines draw from here, so
/// a steady-state and an unravelled run with the same index see the same
/// field history.
inline BathPath scenario_bath(const ScenarioConfig& cfg, std::uint64_t r) {
  return ou_path(cfg.bath, cfg.sim.duration, cfg.sim.bath_dt,
                 derive_seed(cfg.master_seed, r, "bath"));
}

/// Detected count record for run r along the given bath, using whichever
/// pipeline `use_sse` selects.
inline CountSeries scenario_counts(const ScenarioConfig& cfg,
                                   const BathPath& bath, std::uint64_t r,
                                   bool use_sse) {
  const std::uint64_t counts_seed = derive_seed(cfg.master_seed, r, "counts");
  if (!use_sse)
    return steady_emission_counts(cfg.cpt, bath, cfg.sim.update_interval,
                                  counts_seed);
  const SseResult traj = sse_trajectory(cfg.cpt, bath, cfg.sim.sse_dt,
                                        derive_seed(counts_seed, 0, "jumps"));
  const auto detected =
      thin_detect(traj.events, cfg.cpt.eta, derive_seed(counts_seed, 1, "thin"));
  return bin_events(detected, cfg.sim.update_interval, bath.t_start,
                    bath.duration());
}

/// One full run: bath, counts, and all three estimate tracks.
inline RunResult run_one(const ScenarioConfig& cfg, std::uint64_t r) {
  RunResult out;
  out.run_index = r;
  out.bath = scenario_bath(cfg, r);
  out.counts = scenario_counts(cfg, out.bath, r, cfg.sim.sse);
  const EstimatorConfig ecfg = estimator_config(cfg);
  out.est_avg = run_average_count(out.counts, ecfg);
  out.est_simple = run_simple_bayes(out.counts, ecfg);
  out.est_ou = run_ou_bayes(out.counts, ecfg);
  return out;
}

namespace detail {

inline unsigned resolve_threads(unsigned requested, int jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned t = requested ? requested : hw;
  return std::max(1u, std::min(t, static_cast<unsigned>(jobs)));
}

/// Runs fn(0..n-1) on a small thread pool.  The work must be independent per
/// index; the first exception wins and is rethrown on the calling thread.
inline void parallel_for(int n, unsigned threads,
                         const std::function<void(int)>& fn) {
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct EstimatorSummary {
  double variance = 0.0;   // pooled over all (run, bin) pairs in the window
  double std_error = 0.0;  // spread of per-run means / sqrt(runs)
};

struct ScenarioSummary {
  EstimatorSummary avg, simple, ou;
  CrlbReport crlb;
  double sigma_sq = 0.0;  // stationary bath variance, the trivial baseline
  int runs = 0;
  double window_start = 0.0;
  double window_end = 0.0;
};

namespace detail {

inline EstimatorSummary summarize(const std::vector<SquaredErrorStats>& stats) {
  SquaredErrorStats pooled;
  for (const auto& s : stats) pooled += s;
  EstimatorSummary out;
  out.variance = pooled.mean();
  if (stats.size() > 1) {
    double mean_of_means = 0.0;
    for (const auto& s : stats) mean_of_means += s.mean();
    mean_of_means /= static_cast<double>(stats.size());
    double ss = 0.0;
    for (const auto& s : stats) {
      const double d = s.mean() - mean_of_means;
      ss += d * d;
    }
    const auto r = static_cast<double>(stats.size());
    out.std_error = std::sqrt(ss / (r - 1.0) / r);
  }
  return out;
}

}  // namespace detail

/// Optional per-run hook, e.g. for streaming CSVs to disk.  May be invoked
/// from worker threads concurrently (distinct runs).
using RunSink = std::function<void(const RunResult&)>;

/// Full Monte Carlo experiment: cfg.runs independent runs, pooled estimator
/// variances over the post-discard window, bounds attached.
inline ScenarioSummary run_scenario(const ScenarioConfig& cfg,
                                    unsigned threads = 0,
                                    const RunSink& sink = {}) {
  cfg.validate();
  std::vector<SquaredErrorStats> stats_avg(cfg.runs), stats_simple(cfg.runs),
      stats_ou(cfg.runs);
  detail::parallel_for(
      cfg.runs, detail::resolve_threads(threads, cfg.runs), [&](int r) {
        const RunResult run = run_one(cfg, static_cast<std::uint64_t>(r));
        stats_avg[r] =
            accumulate_squared_error(run.est_avg, run.bath, cfg.sim.t_discard);
        stats_simple[r] = accumulate_squared_error(run.est_simple, run.bath,
                                                   cfg.sim.t_discard);
        stats_ou[r] =
            accumulate_squared_error(run.est_ou, run.bath, cfg.sim.t_discard);
        if (sink) sink(run);
      });

  ScenarioSummary s;
  s.avg = detail::summarize(stats_avg);
  s.simple = detail::summarize(stats_simple);
  s.ou = detail::summarize(stats_ou);
  s.crlb = make_crlb_report(cfg.cpt, cfg.bath);
  s.sigma_sq = cfg.bath.sigma * cfg.bath.sigma;
  s.runs = cfg.runs;
  s.window_start = cfg.sim.t_discard;
  s.window_end = cfg.sim.duration;
  return s;
}

/// Per-bin pooled MSE trajectories (convergence curves), including the
/// warm-up region the scalar summaries discard.
struct MseTrack {
  double tau = 0.0;
  std::vector<double> t;
  std::vector<double> mse_avg, mse_simple, mse_ou;
};

inline MseTrack run_mse_track(const ScenarioConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const auto n_bins = static_cast<std::size_t>(
      cfg.sim.duration / cfg.sim.update_interval + 1e-9);
  const auto stride = static_cast<std::size_t>(
      std::llround(cfg.sim.update_interval / cfg.sim.bath_dt));

  struct PerBin {
    std::vector<double> sum_avg, sum_simple, sum_ou;
    std::vector<std::size_t> n_avg;
  };
  std::vector<PerBin> acc(cfg.runs);
  detail::parallel_for(
      cfg.runs, detail::resolve_threads(threads, cfg.runs), [&](int r) {
        const RunResult run = run_one(cfg, static_cast<std::uint64_t>(r));
        PerBin& a = acc[r];
        a.sum_avg.assign(n_bins, 0.0);
        a.sum_simple.assign(n_bins, 0.0);
        a.sum_ou.assign(n_bins, 0.0);
        a.n_avg.assign(n_bins, 0);
        for (std::size_t n = 0; n < n_bins; ++n) {
          const double x = run.bath.samples[n * stride];
          const double e_s = run.est_simple.estimates[n] - x;
          const double e_o = run.est_ou.estimates[n] - x;
          a.sum_simple[n] = e_s * e_s;
          a.sum_ou[n] = e_o * e_o;
          if (n >= run.est_avg.valid_from) {
            const double e_a = run.est_avg.estimates[n] - x;
            a.sum_avg[n] = e_a * e_a;
            a.n_avg[n] = 1;
          }
        }
      });

  MseTrack track;
  track.tau = cfg.sim.update_interval;
  track.t.resize(n_bins);
  track.mse_avg.assign(n_bins, 0.0);
  track.mse_simple.assign(n_bins, 0.0);
  track.mse_ou.assign(n_bins, 0.0);
  for (std::size_t n = 0; n < n_bins; ++n) {
    track.t[n] = static_cast<double>(n) * cfg.sim.update_interval;
    std::size_t n_avg = 0;
    for (int r = 0; r < cfg.runs; ++r) {
      track.mse_avg[n] += acc[r].sum_avg[n];
      track.mse_simple[n] += acc[r].sum_simple[n];
      track.mse_ou[n] += acc[r].sum_ou[n];
      n_avg += acc[r].n_avg[n];
    }
    track.mse_simple[n] /= static_cast<double>(cfg.runs);
    track.mse_ou[n] /= static_cast<double>(cfg.runs);
    track.mse_avg[n] = n_avg ? track.mse_avg[n] / static_cast<double>(n_avg)
                             : std::numeric_limits<double>::quiet_NaN();
  }
  return track;
}

/// Head-to-head validation of the steady-state shortcut against the full
/// wavefunction unravelling: same bath realizations, same estimator, two
/// count pipelines.
struct CompareReport {
  EstimatorSummary ou_sse, ou_steady;
  int runs = 0;
  double window_start = 0.0;
};

inline CompareReport compare_sse_steady(const ScenarioConfig& cfg,
                                        unsigned threads = 0) {
  cfg.validate();
  const EstimatorConfig ecfg = estimator_config(cfg);
  std::vector<SquaredErrorStats> stats_sse(cfg.runs), stats_steady(cfg.runs);
  detail::parallel_for(
      cfg.runs, detail::resolve_threads(threads, cfg.runs), [&](int r) {
        const auto ri = static_cast<std::uint64_t>(r);
        const BathPath bath = scenario_bath(cfg, ri);
        const CountSeries c_sse = scenario_counts(cfg, bath, ri, true);
        const CountSeries c_steady = scenario_counts(cfg, bath, ri, false);
        stats_sse[r] = accumulate_squared_error(run_ou_bayes(c_sse, ecfg), bath,
                                                cfg.sim.t_discard);
        stats_steady[r] = accumulate_squared_error(run_ou_bayes(c_steady, ecfg),
                                                   bath, cfg.sim.t_discard);
      });
  CompareReport rep;
  rep.ou_sse = detail::summarize(stats_sse);
  rep.ou_steady = detail::summarize(stats_steady);
  rep.runs = cfg.runs;
  rep.window_start = cfg.sim.t_discard;
  return rep;
}

/// One swept parameter point: the swept values (already in their external
/// units, ready for the CSV) plus the full summary at that point.
struct SweepPoint {
  std::vector<double> values;
  ScenarioSummary summary;
};

struct SweepResult {
  std::vector<std::string> columns;  // names of the swept-value columns
  std::vector<SweepPoint> points;
};

/// Correlation-time sweep with matched estimation (the assumed tau_n tracks
/// the truth).  Every point reuses the scenario master seed, so points share
/// bath randomness and differences between points are parameter effects, not
/// Monte Carlo noise.
inline SweepResult sweep_tau_n(const ScenarioConfig& cfg,
                               const std::vector<double>& tau_n_values,
                               unsigned threads = 0) {
  SweepResult out;
  out.columns = {"tau_n_s"};
  for (double tau_n : tau_n_values) {
    ScenarioConfig c = cfg;
    c.bath = BathParams(tau_n, cfg.bath.sigma);
    c.assumed_bath = BathParams(tau_n, cfg.assumed_bath.sigma);
    out.points.push_back({{tau_n}, run_scenario(c, threads)});
  }
  return out;
}

/// Model mismatch sweep: the truth stays fixed while the estimator's assumed
/// bath walks a (tau_n', sigma') grid.
inline SweepResult sweep_mismatch(const ScenarioConfig& cfg,
                                  const std::vector<double>& tau_n_assumed,
                                  const std::vector<double>& sigma_assumed,
                                  unsigned threads = 0) {
  SweepResult out;
  out.columns = {"tau_n_assumed_s", "sigma_assumed_mhz"};
  for (double tau_n : tau_n_assumed)
    for (double sigma : sigma_assumed) {
      ScenarioConfig c = cfg;
      c.assumed_bath = BathParams(tau_n, sigma);
      out.points.push_back(
          {{tau_n, rad_s_to_mhz(sigma)}, run_scenario(c, threads)});
    }
  return out;
}

/// Working-point sweep over drive strength and bias detuning (truth and
/// estimator share the emitter, so this is a matched-model scan).
inline SweepResult sweep_omega_bias(const ScenarioConfig& cfg,
                                    const std::vector<double>& rabi_values,
                                    const std::vector<double>& bias_values,
                                    unsigned threads = 0) {
  SweepResult out;
  out.columns = {"rabi_mhz", "bias_mhz"};
  for (double rabi : rabi_values)
    for (double bias : bias_values) {
      ScenarioConfig c = cfg;
      c.cpt = CptParams(rabi, cfg.cpt.gamma, bias, cfg.cpt.eta, cfg.cpt.kappa,
                        cfg.cpt.gamma_s);
      out.points.push_back(
          {{rad_s_to_mhz(rabi), rad_s_to_mhz(bias)}, run_scenario(c, threads)});
    }
  return out;
}

/// As sweep_omega_bias, but reporting only the bias that minimizes the
/// OU-Bayes variance for each drive strength.
inline SweepResult sweep_omega_optbias(const ScenarioConfig& cfg,
                                       const std::vector<double>& rabi_values,
                                       const std::vector<double>& bias_values,
                                       unsigned threads = 0) {
  SweepResult out;
  out.columns = {"rabi_mhz", "bias_opt_mhz"};
  for (double rabi : rabi_values) {
    ScenarioConfig base = cfg;
    base.cpt = CptParams(rabi, cfg.cpt.gamma, cfg.cpt.bias, cfg.cpt.eta,
                         cfg.cpt.kappa, cfg.cpt.gamma_s);
    const SweepResult grid = sweep_omega_bias(base, {rabi}, bias_values, threads);
    const SweepPoint* best = &grid.points.front();
    for (const auto& pt : grid.points)
      if (pt.summary.ou.variance < best->summary.ou.variance) best = &pt;
    out.points.push_back({{rad_s_to_mhz(rabi), best->values[1]}, best->summary});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

inline void write_run_csv(std::ostream& os, const ScenarioConfig& cfg,
                          const RunResult& run, bool with_estimates = true) {
  const auto stride = static_cast<std::size_t>(
      std::llround(cfg.sim.update_interval / cfg.sim.bath_dt));
  os << "bin_index,t_s,x_true_rad_s,count";
  if (with_estimates) os << ",est_avg,est_simple,est_ou";
  os << "\n";
  for (std::size_t n = 0; n < run.counts.counts.size(); ++n) {
    const double t = static_cast<double>(n) * cfg.sim.update_interval;
    os << n << ',' << format_g17(t) << ','
       << format_g17(run.bath.samples[n * stride]) << ','
       << run.counts.counts[n];
    if (with_estimates)
      os << ',' << format_g17(run.est_avg.estimates[n]) << ','
         << format_g17(run.est_simple.estimates[n]) << ','
         << format_g17(run.est_ou.estimates[n]);
    os << "\n";
  }
}

inline nlohmann::json crlb_to_json(const CrlbReport& r) {
  return {{"g", r.g_value},
          {"info_product", r.info_product},
          {"var_full", r.var_full},
          {"var_causal", r.var_causal},
          {"causal_assumption_ok", r.causal_assumption_ok}};
}

inline nlohmann::json summary_to_json(const ScenarioSummary& s) {
  return {{"var_avg", s.avg.variance},
          {"se_avg", s.avg.std_error},
          {"var_simple", s.simple.variance},
          {"se_simple", s.simple.std_error},
          {"var_ou", s.ou.variance},
          {"se_ou", s.ou.std_error},
          {"sigma_sq", s.sigma_sq},
          {"crlb", crlb_to_json(s.crlb)},
          {"runs", s.runs},
          {"window_start_s", s.window_start},
          {"window_end_s", s.window_end}};
}

inline nlohmann::json compare_to_json(const CompareReport& r) {
  return {{"var_ou_sse", r.ou_sse.variance},
          {"se_ou_sse", r.ou_sse.std_error},
          {"var_ou_steady", r.ou_steady.variance},
          {"se_ou_steady", r.ou_steady.std_error},
          {"runs", r.runs},
          {"window_start_s", r.window_start}};
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  for (const auto& c : sweep.columns) os << c << ',';
  os << "var_avg,se_avg,var_simple,se_simple,var_ou,se_ou,"
        "crlb_full,crlb_causal,info_product,sigma_sq,runs\n";
  for (const auto& pt : sweep.points) {
    for (double v : pt.values) os << format_g17(v) << ',';
    const ScenarioSummary& s = pt.summary;
    os << format_g17(s.avg.variance) << ',' << format_g17(s.avg.std_error)
       << ',' << format_g17(s.simple.variance) << ','
       << format_g17(s.simple.std_error) << ',' << format_g17(s.ou.variance)
       << ',' << format_g17(s.ou.std_error) << ','
       << format_g17(s.crlb.var_full) << ',' << format_g17(s.crlb.var_causal)
       << ',' << format_g17(s.crlb.info_product) << ','
       << format_g17(s.sigma_sq) << ',' << s.runs << "\n";
  }
}

inline void write_mse_track_csv(std::ostream& os, const MseTrack& track) {
  os << "bin_index,t_s,mse_avg,mse_simple,mse_ou\n";
  for (std::size_t n = 0; n < track.t.size(); ++n) {
    os << n << ',' << format_g17(track.t[n]) << ','
       << format_g17(track.mse_avg[n]) << ',' << format_g17(track.mse_simple[n])
       << ',' << format_g17(track.mse_ou[n]) << "\n";
  }
}

}  // namespace cptsense
