#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <vector>

#include "cpt.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "ou.hpp"
#include "rng.hpp"

namespace cptsense {

/// Ground state a spontaneously emitted photon projects the emitter into.
enum class DecayChannel : std::uint8_t { to_state_0 = 0, to_state_1 = 1 };

struct EmissionEvent {
  double time;  // seconds, absolute (same clock as the bath path)
  DecayChannel channel;
};

/// Photon counts on a uniform binning grid: counts[n] covers
/// [t_start + n bin_width, t_start + (n+1) bin_width).
struct CountSeries {
  double bin_width = 0.0;
  double t_start = 0.0;
  std::vector<std::uint32_t> counts;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

struct SseResult {
  std::vector<EmissionEvent> events;
  /// Conditional excited population |c_e|^2 / |psi|^2 sampled once per bath
  /// grid point; empty unless requested.
  std::vector<double> rho_ee_trace;
};

/// Stochastic wavefunction unravelling of the emitter driven through one bath
/// realization (piecewise-constant x over each bath grid interval).
///
/// Uses the standard norm-threshold jump algorithm on the unnormalized state:
/// integrate d psi/dt = -i H_eff psi with H_eff = H - i(Gamma/2)|e><e| by RK4
/// steps of size <= dt_int; when |psi|^2 first drops below a uniform threshold
/// u, a photon is emitted at that step, the emitter is projected onto |0> or
/// |1> (equal branching), and u is redrawn.  The squared norm must decrease
/// monotonically between jumps; growth beyond roundoff means the integrator
/// step is unstable and is reported rather than silently absorbed.
inline SseResult sse_trajectory(const CptParams& p, const BathPath& bath,
                                double dt_int, std::uint64_t seed,
                                bool record_rho_trace = false) {
  if (!(dt_int > 0.0)) throw InvalidParams("sse_trajectory requires dt_int > 0");
  if (p.gamma * dt_int > 0.05) {
    std::ostringstream os;
    os << "integration step too coarse: gamma*dt = " << p.gamma * dt_int
       << " exceeds 0.05";
    throw StepTooCoarse(os.str());
  }
  if (bath.samples.empty())
    throw InvalidParams("sse_trajectory requires a non-empty bath path");

  const auto n_sub = static_cast<std::size_t>(
      std::ceil(bath.dt / dt_int - 1e-12));
  const double h = bath.dt / static_cast<double>(std::max<std::size_t>(1, n_sub));
  const std::complex<double> im(0.0, 1.0);
  const double half_rabi = p.rabi / 2.0;
  const double half_gamma = p.gamma / 2.0;

  RngStream rng(seed);
  SseResult out;
  if (record_rho_trace) out.rho_ee_trace.reserve(bath.samples.size());

  std::complex<double> c0(1.0, 0.0), c1(0.0, 0.0), ce(0.0, 0.0);
  double threshold = rng.uniform01();
  double norm2 = 1.0;
  std::uint64_t step = 0;

  for (std::size_t k = 0; k < bath.samples.size(); ++k) {
    const double detuning = p.bias - bath.samples[k];
    if (record_rho_trace)
      out.rho_ee_trace.push_back(std::norm(ce) / norm2);

    for (std::size_t s = 0; s < n_sub; ++s, ++step) {
      auto d0 = [&](std::complex<double> e) { return -im * half_rabi * e; };
      auto d1 = [&](std::complex<double> b, std::complex<double> e) {
        return -im * (detuning * b + half_rabi * e);
      };
      auto de = [&](std::complex<double> a, std::complex<double> b,
                    std::complex<double> e) {
        return -im * half_rabi * (a + b) - half_gamma * e;
      };

      const auto k1_0 = d0(ce), k1_1 = d1(c1, ce), k1_e = de(c0, c1, ce);
      const auto a2 = c0 + 0.5 * h * k1_0, b2 = c1 + 0.5 * h * k1_1,
                 e2 = ce + 0.5 * h * k1_e;
      const auto k2_0 = d0(e2), k2_1 = d1(b2, e2), k2_e = de(a2, b2, e2);
      const auto a3 = c0 + 0.5 * h * k2_0, b3 = c1 + 0.5 * h * k2_1,
                 e3 = ce + 0.5 * h * k2_e;
      const auto k3_0 = d0(e3), k3_1 = d1(b3, e3), k3_e = de(a3, b3, e3);
      const auto a4 = c0 + h * k3_0, b4 = c1 + h * k3_1, e4 = ce + h * k3_e;
      const auto k4_0 = d0(e4), k4_1 = d1(b4, e4), k4_e = de(a4, b4, e4);

      c0 += (h / 6.0) * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0);
      c1 += (h / 6.0) * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1);
      ce += (h / 6.0) * (k1_e + 2.0 * k2_e + 2.0 * k3_e + k4_e);

      const double n2 = std::norm(c0) + std::norm(c1) + std::norm(ce);
      if (n2 > norm2 * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "state norm grew between jumps (" << norm2 << " -> " << n2
           << "); integrator unstable at step " << step;
        throw Error("numerical_instability", os.str());
      }
      norm2 = n2;

      if (norm2 < threshold) {
        const DecayChannel ch = rng.bernoulli(0.5) ? DecayChannel::to_state_0
                                                   : DecayChannel::to_state_1;
        c0 = (ch == DecayChannel::to_state_0) ? 1.0 : 0.0;
        c1 = (ch == DecayChannel::to_state_1) ? 1.0 : 0.0;
        ce = 0.0;
        norm2 = 1.0;
        const double t =
            bath.t_start + static_cast<double>(step + 1) * h;
        out.events.push_back({t, ch});
        threshold = rng.uniform01();
      }
    }
  }
  return out;
}

/// Independent Bernoulli(eta) thinning of an emission record: the detected
/// subset, order preserved.
inline std::vector<EmissionEvent> thin_detect(
    const std::vector<EmissionEvent>& events, double eta, std::uint64_t seed) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw InvalidParams("thin_detect requires eta in [0, 1]");
  RngStream rng(seed);
  std::vector<EmissionEvent> kept;
  kept.reserve(static_cast<std::size_t>(events.size() * eta) + 8);
  for (const auto& ev : events)
    if (rng.bernoulli(eta)) kept.push_back(ev);
  return kept;
}

/// Histograms events into uniform bins of width tau_bin covering
/// [t_start, t_start + duration); events outside are dropped.
inline CountSeries bin_events(const std::vector<EmissionEvent>& events,
                              double tau_bin, double t_start, double duration) {
  if (!(tau_bin > 0.0) || !(duration > 0.0))
    throw InvalidParams("bin_events requires tau_bin > 0 and duration > 0");
  CountSeries out;
  out.bin_width = tau_bin;
  out.t_start = t_start;
  out.counts.assign(static_cast<std::size_t>(duration / tau_bin + 1e-9), 0);
  for (const auto& ev : events) {
    const double rel = ev.time - t_start;
    if (rel < 0.0) continue;
    const auto idx = static_cast<std::size_t>(rel / tau_bin);
    if (idx < out.counts.size()) ++out.counts[idx];
  }
  return out;
}

inline void write_events_csv(std::ostream& os,
                             const std::vector<EmissionEvent>& events) {
  os << "time_s,channel\n";
  for (const auto& ev : events)
    os << format_g17(ev.time) << ',' << static_cast<int>(ev.channel) << "\n";
}

inline void write_counts_csv(std::ostream& os, const CountSeries& counts) {
  os << "bin_index,t_s,count\n";
  for (std::size_t n = 0; n < counts.counts.size(); ++n) {
    const double t = counts.t_start + static_cast<double>(n) * counts.bin_width;
    os << n << ',' << format_g17(t) << ',' << counts.counts[n] << "\n";
  }
}

/// Steady-state shortcut pipeline: since the emitter relaxes much faster than
/// both the bath and the bin clock, each bin's detected count is Poisson with
/// mean eta Gamma tau_bin rho_ee(x) evaluated at the bin-start bath sample.
inline CountSeries steady_emission_counts(const CptParams& p,
                                          const BathPath& bath, double tau_bin,
                                          std::uint64_t seed) {
  if (!(tau_bin > 0.0))
    throw InvalidParams("steady_emission_counts requires tau_bin > 0");
  if (bath.samples.empty())
    throw InvalidParams("steady_emission_counts requires a non-empty bath path");

  const auto n_bins =
      static_cast<std::size_t>(bath.duration() / tau_bin + 1e-9);
  RngStream rng(seed);
  CountSeries out;
  out.bin_width = tau_bin;
  out.t_start = bath.t_start;
  out.counts.resize(n_bins);
  for (std::size_t n = 0; n < n_bins; ++n) {
    auto idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * tau_bin / bath.dt));
    if (idx >= bath.samples.size()) idx = bath.samples.size() - 1;
    const double mean =
        p.eta * p.gamma * tau_bin * rho_ee_analytic(p, bath.samples[idx]);
    out.counts[n] = static_cast<std::uint32_t>(rng.poisson(mean));
  }
  return out;
}

}  // namespace cptsense
