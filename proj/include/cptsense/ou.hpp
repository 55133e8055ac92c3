#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "rng.hpp"
#include "units.hpp"

namespace cptsense {

/// Stationary Ornstein-Uhlenbeck bath: correlation time tau_n (s) and
/// stationary standard deviation sigma (rad/s).
struct BathParams {
  double tau_n;
  double sigma;

  BathParams(double tau_n_, double sigma_) : tau_n(tau_n_), sigma(sigma_) {
    if (!(tau_n > 0.0)) throw InvalidParams("tau_n must be > 0");
    if (!(sigma > 0.0)) throw InvalidParams("sigma must be > 0");
  }

  /// Free-induction dephasing time sqrt(2)/sigma of a qubit riding this bath.
  double t2_star() const { return std::sqrt(2.0) / sigma; }

  /// Stationary autocovariance sigma^2 exp(-|t|/tau_n).
  double autocovariance(double t) const {
    return sigma * sigma * std::exp(-std::abs(t) / tau_n);
  }
};

/// One realization sampled on a uniform grid: samples[k] = x(t_start + k dt).
struct BathPath {
  double t_start = 0.0;
  double dt = 0.0;
  std::vector<double> samples;

  double duration() const { return static_cast<double>(samples.size()) * dt; }
};

/// Exact one-step update of the OU process over an interval dt, given a
/// standard normal draw.  Exact for any dt (transition kernel, not an Euler
/// scheme), so coarse grids stay unbiased.
inline double ou_step(double x_prev, double dt, const BathParams& b,
                      double normal_draw) {
  const double decay = std::exp(-dt / b.tau_n);
  const double s = b.sigma * std::sqrt(1.0 - decay * decay);
  return x_prev * decay + s * normal_draw;
}

/// Gaussian transition density p(x_next | x_prev, dt).
inline double ou_transition_pdf(double x_next, double x_prev, double dt,
                                const BathParams& b) {
  if (!(dt > 0.0)) throw InvalidParams("ou_transition_pdf requires dt > 0");
  const double decay = std::exp(-dt / b.tau_n);
  const double var = b.sigma * b.sigma * (1.0 - decay * decay);
  const double d = x_next - x_prev * decay;
  return std::exp(-0.5 * d * d / var) / std::sqrt(two_pi * var);
}

/// Samples one stationary path on a uniform grid of spacing dt covering
/// [0, duration).  The initial sample is drawn from the stationary law
/// N(0, sigma^2), so no burn-in is needed.
inline BathPath ou_path(const BathParams& b, double duration, double dt,
                        std::uint64_t seed) {
  if (!(dt > 0.0) || !(duration > 0.0))
    throw InvalidParams("ou_path requires duration > 0 and dt > 0");
  const auto n = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(duration / dt)));

  RngStream rng(seed);
  BathPath path;
  path.dt = dt;
  path.samples.resize(n);
  path.samples[0] = b.sigma * rng.normal();
  for (std::size_t k = 1; k < n; ++k)
    path.samples[k] = ou_step(path.samples[k - 1], dt, b, rng.normal());
  return path;
}

inline void write_bath_csv(std::ostream& os, const BathPath& path) {
  os << "t,x_rad_per_s\n";
  for (std::size_t k = 0; k < path.samples.size(); ++k) {
    const double t = path.t_start + static_cast<double>(k) * path.dt;
    os << format_g17(t) << ',' << format_g17(path.samples[k]) << "\n";
  }
}

/// Ensemble-and-time averaged autocorrelation of a set of equally sampled
/// paths; returns (lag in seconds, R) for lags 0, dt, ..., up to max_lag.
inline std::vector<std::pair<double, double>> autocorrelation_estimate(
    const std::vector<BathPath>& paths, double max_lag) {
  if (paths.empty())
    throw MismatchedPaths("autocorrelation needs at least one path");
  const double dt = paths.front().dt;
  const std::size_t len = paths.front().samples.size();
  for (const auto& p : paths) {
    if (p.dt != dt || p.samples.size() != len) {
      std::ostringstream os;
      os << "autocorrelation over inconsistent paths: expected " << len
         << " samples at dt " << dt;
      throw MismatchedPaths(os.str());
    }
  }

  const auto max_shift = static_cast<std::size_t>(max_lag / dt + 1e-9);
  const std::size_t n_lags = std::min(max_shift, len - 1) + 1;
  std::vector<std::pair<double, double>> acf(n_lags);
  for (std::size_t lag = 0; lag < n_lags; ++lag) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& p : paths) {
      for (std::size_t k = 0; k + lag < len; ++k)
        sum += p.samples[k] * p.samples[k + lag];
      count += len - lag;
    }
    acf[lag] = {static_cast<double>(lag) * dt, sum / static_cast<double>(count)};
  }
  return acf;
}

}  // namespace cptsense
