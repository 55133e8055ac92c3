#pragma once

#include <Eigen/Dense>
#include <complex>
#include <sstream>

#include "cpt.hpp"
#include "errors.hpp"

namespace cptsense {

using Matrix3c = Eigen::Matrix3cd;

/// 3x3 density matrix in the basis (|0>, |1>, |e>).
struct DensityMatrix3 {
  Matrix3c m;

  double rho_ee() const { return m(2, 2).real(); }

  /// Throws unless the matrix is Hermitian, unit-trace and positive
  /// semidefinite within the given tolerances.
  void validate(double herm_tol = 1e-12, double trace_tol = 1e-12,
                double eig_floor = -1e-10) const {
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol) {
      std::ostringstream os;
      os << "density matrix not Hermitian: max asymmetry " << herm;
      throw Error("invalid_state", os.str());
    }
    const double tr_err = std::abs(m.trace() - std::complex<double>(1.0, 0.0));
    if (tr_err > trace_tol) {
      std::ostringstream os;
      os << "density matrix trace deviates from 1 by " << tr_err;
      throw Error("invalid_state", os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(m);
    if (es.eigenvalues().minCoeff() < eig_floor) {
      std::ostringstream os;
      os << "density matrix not PSD: min eigenvalue "
         << es.eigenvalues().minCoeff();
      throw Error("invalid_state", os.str());
    }
  }
};

/// Lambda-system Hamiltonian in the rotating frame at bath field x:
///   H = (Omega/2)(|e><0| + |e><1| + h.c.) + (Delta0 - x)|1><1|.
/// The two-photon detuning enters on |1> with the x sign chosen so the dark
/// resonance sits at x = +Delta0, matching the analytic lineshape.
inline Matrix3c lambda_hamiltonian(const CptParams& p, double x) {
  Matrix3c h = Matrix3c::Zero();
  const double half_rabi = p.rabi / 2.0;
  h(2, 0) = h(2, 1) = half_rabi;
  h(0, 2) = h(1, 2) = half_rabi;
  h(1, 1) = p.bias - x;
  return h;
}

namespace detail {

inline Eigen::Matrix<std::complex<double>, 9, 9> kron3(const Matrix3c& a,
                                                       const Matrix3c& b) {
  Eigen::Matrix<std::complex<double>, 9, 9> k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return k;
}

/// Vectorized (column-major) generator of the master equation
///   d rho/dt = -i[H, rho] + sum_k w_k D[L_k] rho,
/// using vec(A rho B) = (B^T kron A) vec(rho).  Decay is spontaneous emission
/// at rate Gamma split evenly over the two ground states.
inline Eigen::Matrix<std::complex<double>, 9, 9> liouvillian_matrix(
    const CptParams& p, double x) {
  using M9 = Eigen::Matrix<std::complex<double>, 9, 9>;
  const std::complex<double> im(0.0, 1.0);
  const Matrix3c h = lambda_hamiltonian(p, x);
  const Matrix3c id = Matrix3c::Identity();

  M9 l = -im * (kron3(id, h) - kron3(h.transpose(), id));
  for (int target = 0; target < 2; ++target) {
    Matrix3c jump = Matrix3c::Zero();
    jump(target, 2) = 1.0;  // |target><e|
    const Matrix3c jj = jump.adjoint() * jump;
    l += (p.gamma / 2.0) *
         (kron3(jump.conjugate(), jump) -
          0.5 * (kron3(id, jj) + kron3(jj.transpose(), id)));
  }
  return l;
}

}  // namespace detail

/// Exact steady state: solves L vec(rho) = 0 with the trace row replacing the
/// first equation.  Scaled by 1/Gamma first so the pivot-based rank test sees
/// O(1) entries.
inline DensityMatrix3 liouvillian_steady_state(const CptParams& p, double x) {
  using M9 = Eigen::Matrix<std::complex<double>, 9, 9>;
  using V9 = Eigen::Matrix<std::complex<double>, 9, 1>;

  M9 m = detail::liouvillian_matrix(p, x) / p.gamma;
  m.row(0).setZero();
  m(0, 0) = m(0, 4) = m(0, 8) = 1.0;  // trace(rho) = 1 (column-major diagonal)
  V9 b = V9::Zero();
  b(0) = 1.0;

  Eigen::FullPivLU<M9> lu(m);
  if (!lu.isInvertible()) {
    throw SingularLiouvillian(
        "steady state not unique: Liouvillian null space has dimension != 1 "
        "after the trace constraint");
  }
  const V9 v = lu.solve(b);

  DensityMatrix3 rho;
  for (int col = 0; col < 3; ++col)
    for (int row = 0; row < 3; ++row) rho.m(row, col) = v(3 * col + row);
  rho.m = 0.5 * (rho.m + rho.m.adjoint()).eval();
  return rho;
}

/// Scalar convenience wrapper: exact steady-state excited population.
inline double rho_ee_exact(const CptParams& p, double x) {
  return liouvillian_steady_state(p, x).rho_ee();
}

}  // namespace cptsense
