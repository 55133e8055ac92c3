#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <vector>

#include "cpt.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "ou.hpp"
#include "photon.hpp"

namespace cptsense {

/// Everything an estimator is allowed to know: the emitter model, the
/// *assumed* bath statistics (which may differ from the truth that generated
/// the data), and the update clock.
struct EstimatorConfig {
  CptParams cpt;
  BathParams assumed_bath;
  double update_interval;                // tau, seconds per count bin
  double grid_halfwidth_multiple = 5.0;  // grid spans +-M sigma'
  int grid_size = 251;                   // odd so a node sits exactly at 0
  int avg_window_bins = 100;             // averaging window, in bins

  EstimatorConfig(CptParams cpt_, BathParams assumed_bath_,
                  double update_interval_, double grid_halfwidth_multiple_ = 5.0,
                  int grid_size_ = 251, int avg_window_bins_ = 100)
      : cpt(cpt_),
        assumed_bath(assumed_bath_),
        update_interval(update_interval_),
        grid_halfwidth_multiple(grid_halfwidth_multiple_),
        grid_size(grid_size_),
        avg_window_bins(avg_window_bins_) {
    if (!(update_interval > 0.0))
      throw InvalidParams("update_interval must be > 0");
    if (!(grid_halfwidth_multiple >= 4.0))
      throw InvalidParams("grid halfwidth must be >= 4 sigma");
    if (grid_size < 101 || grid_size % 2 == 0)
      throw InvalidParams("grid_size must be odd and >= 101");
    if (avg_window_bins < 1) throw InvalidParams("avg_window_bins must be >= 1");
  }

  /// Mean detected counts per bin if the field sat at x.
  double expected_counts(double x) const {
    return update_interval * detection_rate(cpt, x);
  }
};

/// Discretized posterior over the field value: uniform nodes, weights
/// normalized so sum(weights) * dx = 1.
struct PosteriorGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double dx = 0.0;
};

namespace detail {

inline void normalize(PosteriorGrid& g) {
  double sum = 0.0;
  for (double w : g.weights) sum += w;
  const double z = sum * g.dx;
  for (double& w : g.weights) w /= z;
}

}  // namespace detail

/// Stationary prior N(0, sigma'^2) truncated to +-M sigma'.
inline PosteriorGrid init_prior(const EstimatorConfig& cfg) {
  const int n = cfg.grid_size;
  const int center = (n - 1) / 2;
  const double sd = cfg.assumed_bath.sigma;
  PosteriorGrid g;
  g.dx = 2.0 * cfg.grid_halfwidth_multiple * sd / static_cast<double>(n - 1);
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    g.nodes[i] = g.dx * static_cast<double>(i - center);
    g.weights[i] = std::exp(-0.5 * g.nodes[i] * g.nodes[i] / (sd * sd));
  }
  detail::normalize(g);
  return g;
}

/// Posterior mean, the Bayes point estimate under squared error.
inline double posterior_mean(const PosteriorGrid& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) m += g.nodes[i] * g.weights[i];
  return m * g.dx;
}

/// Multiplies in the Poisson likelihood of observing y counts in one bin and
/// renormalizes.  Evaluated through exp(y ln m - m - lgamma(y+1)) so large
/// counts neither overflow the y! factor nor lose the shape of the
/// likelihood; if every node underflows to zero the posterior is gone and
/// that is reported, not masked.
inline PosteriorGrid bayes_update(PosteriorGrid g, std::uint32_t y,
                                  const EstimatorConfig& cfg) {
  const double lgy = std::lgamma(static_cast<double>(y) + 1.0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double mean = cfg.expected_counts(g.nodes[i]);
    double lik;
    if (mean > 0.0)
      lik = std::exp(static_cast<double>(y) * std::log(mean) - mean - lgy);
    else
      lik = (y == 0) ? 1.0 : 0.0;
    g.weights[i] *= lik;
  }
  const double peak = *std::max_element(g.weights.begin(), g.weights.end());
  if (!(peak >= 1e-300)) {
    std::ostringstream os;
    os << "posterior degenerated: max weight " << peak << " after y = " << y;
    throw DegeneratePosterior(os.str());
  }
  detail::normalize(g);
  return g;
}

/// Discretized Chapman-Kolmogorov kernel for one update interval of the
/// assumed OU process.  Each column is the transition density out of node j,
/// renormalized on the truncated grid so propagation conserves probability.
inline Eigen::MatrixXd ou_transition_matrix(const PosteriorGrid& g,
                                            const EstimatorConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double col_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, j) = ou_transition_pdf(g.nodes[i], g.nodes[j], cfg.update_interval,
                                  cfg.assumed_bath);
      col_sum += k(i, j);
    }
    if (col_sum > 0.0) {
      k.col(j) /= col_sum * g.dx;
    } else {
      // Kernel narrower than the node spacing: collapse onto the node
      // nearest the decayed mean so mass is never lost.
      const double decay = std::exp(-cfg.update_interval / cfg.assumed_bath.tau_n);
      auto nearest = static_cast<Eigen::Index>(std::llround(
          (g.nodes[j] * decay - g.nodes[0]) / g.dx));
      nearest = std::clamp<Eigen::Index>(nearest, 0, n - 1);
      k(nearest, j) = 1.0 / g.dx;
    }
  }
  return k;
}

/// One prediction step: pushes the posterior through the assumed OU dynamics.
inline PosteriorGrid ou_propagate(const PosteriorGrid& g,
                                  const Eigen::MatrixXd& kernel) {
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  Eigen::Map<const Eigen::VectorXd> w(g.weights.data(), n);
  Eigen::VectorXd out = (kernel * w) * g.dx;
  PosteriorGrid r = g;
  Eigen::Map<Eigen::VectorXd>(r.weights.data(), n) = out;
  detail::normalize(r);
  return r;
}

inline PosteriorGrid ou_propagate(const PosteriorGrid& g,
                                  const EstimatorConfig& cfg) {
  return ou_propagate(g, ou_transition_matrix(g, cfg));
}

/// A per-bin estimate track.  estimates[n] is the estimate available at the
/// end of bin n; bins before valid_from are warm-up (reported as 0).
struct EstimateSeries {
  double t_start = 0.0;
  double tau = 0.0;
  std::size_t valid_from = 0;
  std::vector<double> estimates;
};

namespace detail {

inline DegeneratePosterior at_bin(const DegeneratePosterior& e, std::size_t n) {
  std::ostringstream os;
  os << e.what() << " (bin " << n << ")";
  return DegeneratePosterior(os.str());
}

}  // namespace detail

/// Static-prior Bayesian estimator: accumulates the Poisson likelihood of
/// every bin against the stationary prior, never letting the field move.
inline EstimateSeries run_simple_bayes(const CountSeries& counts,
                                       const EstimatorConfig& cfg) {
  PosteriorGrid g = init_prior(cfg);
  EstimateSeries out;
  out.t_start = counts.t_start;
  out.tau = counts.bin_width;
  out.estimates.reserve(counts.counts.size());
  for (std::size_t n = 0; n < counts.counts.size(); ++n) {
    try {
      g = bayes_update(std::move(g), counts.counts[n], cfg);
    } catch (const DegeneratePosterior& e) {
      throw detail::at_bin(e, n);
    }
    out.estimates.push_back(posterior_mean(g));
  }
  return out;
}

/// Full Bayesian filter: alternates OU prediction and Poisson correction, so
/// stale information decays at the assumed bath rate instead of accumulating.
inline EstimateSeries run_ou_bayes(const CountSeries& counts,
                                   const EstimatorConfig& cfg) {
  PosteriorGrid g = init_prior(cfg);
  const Eigen::MatrixXd kernel = ou_transition_matrix(g, cfg);
  EstimateSeries out;
  out.t_start = counts.t_start;
  out.tau = counts.bin_width;
  out.estimates.reserve(counts.counts.size());
  for (std::size_t n = 0; n < counts.counts.size(); ++n) {
    g = ou_propagate(g, kernel);
    try {
      g = bayes_update(std::move(g), counts.counts[n], cfg);
    } catch (const DegeneratePosterior& e) {
      throw detail::at_bin(e, n);
    }
    out.estimates.push_back(posterior_mean(g));
  }
  return out;
}

/// Inverts the mean-count relation rho_ee(x) = rho_hat on the branch
/// x <= bias.  Closed form when the dip goes all the way to zero (gamma_s = 0);
/// monotone bisection in Delta = bias - x >= 0 otherwise.
inline double average_count_inverse(const CptParams& p, double rho_hat) {
  const double a0 = p.rho_ee_ceiling();
  const double cap = a0 * (1.0 - 1e-9);
  rho_hat = std::clamp(rho_hat, 0.0, cap);

  if (p.gamma_s == 0.0) {
    const double g = p.dip_halfwidth();
    return p.bias - g * std::sqrt(rho_hat / (a0 - rho_hat));
  }

  const double floor = rho_ee_analytic(p, p.bias);
  if (rho_hat <= floor) return p.bias;
  double lo = 0.0, hi = p.dip_halfwidth();
  for (int i = 0; i < 64 && rho_ee_analytic(p, p.bias - hi) < rho_hat; ++i)
    hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (rho_ee_analytic(p, p.bias - mid) < rho_hat)
      lo = mid;
    else
      hi = mid;
  }
  return p.bias - 0.5 * (lo + hi);
}

/// Baseline non-Bayesian protocol: counts are accumulated over disjoint
/// windows of avg_window_bins bins; each completed window is converted to an
/// excited-population estimate rho_hat = y / (eta Gamma T_window) and inverted
/// through the lineshape, and that value is held until the next window
/// completes.  Bins before the first complete window carry no estimate.
inline EstimateSeries run_average_count(const CountSeries& counts,
                                        const EstimatorConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.avg_window_bins);
  EstimateSeries out;
  out.t_start = counts.t_start;
  out.tau = counts.bin_width;
  out.valid_from = w - 1;
  out.estimates.assign(counts.counts.size(), 0.0);

  const double window_norm =
      cfg.cpt.eta * cfg.cpt.gamma * counts.bin_width * static_cast<double>(w);
  double held = 0.0;
  std::uint64_t window_sum = 0;
  for (std::size_t n = 0; n < counts.counts.size(); ++n) {
    window_sum += counts.counts[n];
    if ((n + 1) % w == 0) {
      const double rho_hat = static_cast<double>(window_sum) / window_norm;
      held = average_count_inverse(cfg.cpt, rho_hat);
      window_sum = 0;
    }
    if (n >= out.valid_from) out.estimates[n] = held;
  }
  return out;
}

/// Running sum of squared estimation errors; split out so several runs can be
/// pooled before taking the mean.
struct SquaredErrorStats {
  double sum = 0.0;
  std::size_t n = 0;

  double mean() const {
    if (n == 0) throw AlignmentError("no bins left in the analysis window");
    return sum / static_cast<double>(n);
  }

  SquaredErrorStats& operator+=(const SquaredErrorStats& o) {
    sum += o.sum;
    n += o.n;
    return *this;
  }
};

/// Accumulates (estimate - truth)^2 over every valid bin at or after
/// discard_before, pairing estimate n with the truth sample at the bin start.
inline SquaredErrorStats accumulate_squared_error(const EstimateSeries& est,
                                                  const BathPath& truth,
                                                  double discard_before) {
  if (truth.samples.empty() || est.tau <= 0.0)
    throw AlignmentError("empty truth path or unset bin width");
  const double stride = est.tau / truth.dt;
  if (std::abs(stride - std::llround(stride)) > 1e-6)
    throw AlignmentError("bin width is not a multiple of the truth sample step");

  SquaredErrorStats stats;
  for (std::size_t n = est.valid_from; n < est.estimates.size(); ++n) {
    const double t = est.t_start + static_cast<double>(n) * est.tau;
    if (t < discard_before) continue;
    const auto idx = static_cast<std::size_t>(
        std::llround((t - truth.t_start) / truth.dt));
    if (idx >= truth.samples.size()) {
      std::ostringstream os;
      os << "estimate bin " << n << " lies past the end of the truth path";
      throw AlignmentError(os.str());
    }
    const double err = est.estimates[n] - truth.samples[idx];
    stats.sum += err * err;
    ++stats.n;
  }
  return stats;
}

/// Mean squared error of one estimate track against its truth path.
inline double estimation_variance(const EstimateSeries& est,
                                  const BathPath& truth, double discard_before) {
  return accumulate_squared_error(est, truth, discard_before).mean();
}

/// One estimate track with its inputs, aligned bin by bin.
inline void write_estimate_csv(std::ostream& os, const EstimateSeries& est,
                               const CountSeries& counts,
                               const BathPath& truth) {
  if (truth.samples.empty() || est.tau <= 0.0)
    throw AlignmentError("empty truth path or unset bin width");
  if (counts.counts.size() != est.estimates.size())
    throw AlignmentError("count series and estimate series differ in length");
  const double stride = est.tau / truth.dt;
  if (std::abs(stride - std::llround(stride)) > 1e-6)
    throw AlignmentError("bin width is not a multiple of the truth sample step");

  os << "bin_index,t_s,x_true,y_n,x_est\n";
  for (std::size_t n = 0; n < est.estimates.size(); ++n) {
    const double t = est.t_start + static_cast<double>(n) * est.tau;
    auto idx = static_cast<std::size_t>(
        std::llround((t - truth.t_start) / truth.dt));
    if (idx >= truth.samples.size()) idx = truth.samples.size() - 1;
    os << n << ',' << format_g17(t) << ',' << format_g17(truth.samples[idx])
       << ',' << counts.counts[n] << ',' << format_g17(est.estimates[n])
       << "\n";
  }
}

}  // namespace cptsense
