#pragma once

#include <cmath>
#include <optional>

#include "errors.hpp"

namespace cptsense {

/// Drive and decay parameters of the Lambda emitter plus the photon detection
/// efficiency.  All rates and detunings are angular frequencies in rad/s.
struct CptParams {
  double rabi;     // Omega, drive Rabi frequency on both legs
  double gamma;    // Gamma, excited-state spontaneous emission rate
  double kappa;    // optical coherence decay rate (defaults to Gamma/2)
  double gamma_s;  // ground-state spin decoherence rate
  double bias;     // Delta0, static two-photon detuning offset
  double eta;      // photon detection efficiency, in (0, 1]

  CptParams(double rabi_, double gamma_, double bias_, double eta_,
            std::optional<double> kappa_ = std::nullopt, double gamma_s_ = 0.0)
      : rabi(rabi_),
        gamma(gamma_),
        kappa(kappa_.value_or(gamma_ / 2.0)),
        gamma_s(gamma_s_),
        bias(bias_),
        eta(eta_) {
    if (!(rabi > 0.0)) throw InvalidParams("rabi must be > 0");
    if (!(gamma > 0.0)) throw InvalidParams("gamma must be > 0");
    if (!(kappa > 0.0)) throw InvalidParams("kappa must be > 0");
    if (!(gamma_s >= 0.0)) throw InvalidParams("gamma_s must be >= 0");
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParams("eta must be in (0, 1]");
    if (!std::isfinite(bias)) throw InvalidParams("bias must be finite");
  }

  /// Excited population far from the dark resonance, Omega^2 / (2 Gamma kappa).
  double rho_ee_ceiling() const { return rabi * rabi / (2.0 * gamma * kappa); }

  /// Power-broadened contribution to the dip width, Omega^2 / (2 kappa).
  double power_broadening() const { return rabi * rabi / (2.0 * kappa); }

  /// Half width of the dark dip, gamma_s + Omega^2 / (2 kappa).
  double dip_halfwidth() const { return gamma_s + power_broadening(); }

  /// Ground-state cooperativity Omega^2 / (2 kappa gamma_s); unbounded (and
  /// reported as nullopt) when the spin coherence is perfect.
  std::optional<double> cooperativity() const {
    if (gamma_s == 0.0) return std::nullopt;
    return rabi * rabi / (2.0 * kappa * gamma_s);
  }
};

/// Steady-state excited population at two-photon detuning Delta = bias - x.
///
/// Algebraically identical to the textbook Lorentzian-dip form
///   A0 [1 - W (G / (Delta^2 + G^2))]  with A0 = Omega^2/(2 Gamma kappa),
///   W = Omega^2/(2 kappa), G = gamma_s + W,
/// but rearranged to A0 (Delta^2 + gamma_s G) / (Delta^2 + G^2) so the dark
/// point evaluates without cancellation: every term is nonnegative and the
/// result is exactly 0 at Delta = 0 when gamma_s = 0.
inline double rho_ee_analytic(const CptParams& p, double x) {
  const double a0 = p.rho_ee_ceiling();
  const double w = p.power_broadening();
  const double g = p.gamma_s + w;
  const double delta = p.bias - x;
  const double d2 = delta * delta;
  double rho = a0 * (d2 + p.gamma_s * g) / (d2 + g * g);
  if (rho < 0.0) rho = (rho > -1e-15) ? 0.0 : rho;  // guard against FP drift
  return rho;
}

/// d rho_ee / dx at fixed parameters; the sensitivity the estimators and the
/// Fisher information are built from.
inline double rho_ee_derivative(const CptParams& p, double x) {
  const double a0 = p.rho_ee_ceiling();
  const double w = p.power_broadening();
  const double g = p.gamma_s + w;
  const double delta = p.bias - x;
  const double den = delta * delta + g * g;
  // d/dx = -d/dDelta; the gamma_s*G offset in the numerator is constant.
  return -2.0 * a0 * delta * g * w / (den * den);
}

/// Mean detected photon rate eta * Gamma * rho_ee(x), in counts/s.
inline double detection_rate(const CptParams& p, double x) {
  return p.eta * p.gamma * rho_ee_analytic(p, x);
}

}  // namespace cptsense
