#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "cpt.hpp"
#include "errors.hpp"
#include "ou.hpp"
#include "quadrature.hpp"

namespace cptsense {

/// Photon-shot-noise Fisher density per unit excited population,
/// (d rho/dx)^2 / rho.  At a gamma_s = 0 dark point both numerator and
/// denominator vanish; the ratio's limit 4 A0 / W^2 is substituted so the
/// integrand stays finite and continuous.
inline double g_integrand(const CptParams& p, double x) {
  const double rho = rho_ee_analytic(p, x);
  if (rho <= 0.0) {
    const double a0 = p.rho_ee_ceiling();
    const double w = p.power_broadening();
    return 4.0 * a0 / (w * w);
  }
  const double d = rho_ee_derivative(p, x);
  return d * d / rho;
}

/// Bath-averaged Fisher density g(sigma) = E[(rho')^2 / rho] over
/// x ~ N(0, sigma^2).  Evaluated by Gauss-Hermite at two orders as a built-in
/// convergence check.
inline double g_of_sigma(const CptParams& p, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParams("g_of_sigma requires sigma > 0");
  auto integrand = [&p](double x) { return g_integrand(p, x); };
  const double coarse =
      gauss_hermite_expect(GaussHermite::compute(64), 0.0, sigma, integrand);
  const double fine =
      gauss_hermite_expect(GaussHermite::compute(128), 0.0, sigma, integrand);
  if (std::abs(fine - coarse) > 1e-3 * std::abs(fine)) {
    std::ostringstream os;
    os << "Gauss-Hermite estimate of g not converged: 64-node " << coarse
       << " vs 128-node " << fine;
    throw QuadratureNotConverged(os.str());
  }
  return fine;
}

/// Dimensionless information product tau_n * eta * Gamma * sigma^2 * g: photon
/// information collected per bath correlation time, in units of the prior
/// precision.
inline double information_product(const CptParams& p, const BathParams& b) {
  return b.tau_n * p.eta * p.gamma * b.sigma * b.sigma * g_of_sigma(p, b.sigma);
}

/// Continuous-time bound algebra, split out from the quadrature so synthetic
/// g values can exercise the asymptotics directly.
inline double crlb_full_from(double g, double sigma, double tau_n, double eta,
                             double gamma) {
  const double u = 2.0 * tau_n * eta * gamma * sigma * sigma * g;
  return sigma * sigma / std::sqrt(1.0 + u);
}

/// Penalty of causal (filtering) versus full-record (smoothing) estimation;
/// approaches 2 as the information product grows.
inline double causal_factor(double info_product) {
  return 2.0 / (1.0 + 4.0 / std::sqrt(1.0 + 32.0 * info_product));
}

/// Cramer-Rao bound on the steady-state MSE of any estimator allowed to use
/// the whole photon record (past and future).
inline double crlb_full(const CptParams& p, const BathParams& b) {
  return crlb_full_from(g_of_sigma(p, b.sigma), b.sigma, b.tau_n, p.eta,
                        p.gamma);
}

/// Bound for causal (real-time) estimators.  Its derivation assumes the
/// information product is large; below 2 the expansion is meaningless and the
/// call refuses to return a number.
inline double crlb_causal(const CptParams& p, const BathParams& b) {
  const double info = information_product(p, b);
  const double value = crlb_full(p, b) * causal_factor(info);
  if (info <= 2.0) {
    std::ostringstream os;
    os << "causal bound outside its validity regime: information product "
       << info << " <= 2 (nominal bound value " << value << ")";
    throw AssumptionViolated(os.str());
  }
  return value;
}

struct CrlbReport {
  double g_value = 0.0;
  double info_product = 0.0;
  double var_full = 0.0;
  double var_causal = 0.0;  // nominal value even when the assumption fails
  bool causal_assumption_ok = false;
};

inline CrlbReport make_crlb_report(const CptParams& p, const BathParams& b) {
  CrlbReport r;
  r.g_value = g_of_sigma(p, b.sigma);
  r.info_product = b.tau_n * p.eta * p.gamma * b.sigma * b.sigma * r.g_value;
  r.var_full = crlb_full_from(r.g_value, b.sigma, b.tau_n, p.eta, p.gamma);
  r.causal_assumption_ok = r.info_product > 2.0;
  r.var_causal = r.var_full * causal_factor(r.info_product);
  return r;
}

/// Fisher information of the discretized problem: n_steps field values on a
/// grid of spacing tau.  F_M is the (diagonal) photon measurement block,
/// F_B the (tridiagonal) AR(1) prior precision of the stationary OU path.
struct FisherMatrices {
  Eigen::VectorXd fm_diag;
  Eigen::VectorXd fb_diag;
  Eigen::VectorXd fb_off;  // superdiagonal, size n_steps - 1
  int n_steps = 0;
  double tau = 0.0;
};

inline FisherMatrices fisher_matrices(const CptParams& p, const BathParams& b,
                                      double tau, int n_steps) {
  if (n_steps < 2) throw InvalidParams("fisher_matrices requires n_steps >= 2");
  if (!(tau > 0.0)) throw InvalidParams("fisher_matrices requires tau > 0");

  FisherMatrices f;
  f.n_steps = n_steps;
  f.tau = tau;
  f.fm_diag = Eigen::VectorXd::Constant(
      n_steps, p.eta * p.gamma * tau * g_of_sigma(p, b.sigma));
  // Stationary AR(1): x_{k+1} = a x_k + noise of variance q.
  const double a = std::exp(-tau / b.tau_n);
  const double q = b.sigma * b.sigma * (1.0 - a * a);
  f.fb_diag = Eigen::VectorXd::Constant(n_steps, (1.0 + a * a) / q);
  f.fb_diag(0) = 1.0 / (b.sigma * b.sigma) + a * a / q;
  f.fb_diag(n_steps - 1) = 1.0 / q;
  f.fb_off = Eigen::VectorXd::Constant(n_steps - 1, -a / q);
  return f;
}

/// Diagonal element (F_M + F_B)^{-1}[index, index]: the discrete bound on the
/// MSE of x at that grid point.  Solved by the symmetric tridiagonal LDL^T
/// factorization; a nonpositive pivot means the assembled information matrix
/// is not positive definite.
inline double crlb_discrete(const FisherMatrices& f, int index) {
  const int n = f.n_steps;
  if (index < 0 || index >= n)
    throw InvalidParams("crlb_discrete index out of range");

  Eigen::VectorXd d(n), l(n - 1);
  double pivot = f.fm_diag(0) + f.fb_diag(0);
  if (!(pivot > 0.0))
    throw NotPositiveDefinite("Fisher matrix has a nonpositive pivot");
  d(0) = pivot;
  for (int k = 1; k < n; ++k) {
    l(k - 1) = f.fb_off(k - 1) / d(k - 1);
    pivot = f.fm_diag(k) + f.fb_diag(k) - l(k - 1) * f.fb_off(k - 1);
    if (!(pivot > 0.0))
      throw NotPositiveDefinite("Fisher matrix has a nonpositive pivot");
    d(k) = pivot;
  }

  // Solve (L D L^T) z = e_index.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  z(index) = 1.0;
  for (int k = index + 1; k < n; ++k) z(k) = -l(k - 1) * z(k - 1);
  for (int k = 0; k < n; ++k) z(k) /= d(k);
  for (int k = n - 2; k >= 0; --k) z(k) -= l(k) * z(k + 1);
  return z(index);
}

}  // namespace cptsense
