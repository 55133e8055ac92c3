#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace cptsense {

/// Gauss-Hermite rule for the weight exp(-t^2) on the real line, computed by
/// the Golub-Welsch eigenvalue method: nodes are eigenvalues of the symmetric
/// tridiagonal Jacobi matrix (zero diagonal, off-diagonal sqrt(k/2)), weights
/// come from the first components of its eigenvectors.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussHermite compute(int n) {
    if (n < 1) throw InvalidParams("Gauss-Hermite order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double beta = std::sqrt(static_cast<double>(k) / 2.0);
      jacobi(k, k - 1) = beta;
      jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success)
      throw QuadratureNotConverged("Jacobi matrix eigensolve failed");

    const double mu0 = std::sqrt(std::numbers::pi);
    GaussHermite q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      q.nodes[i] = es.eigenvalues()(i);
      const double v0 = es.eigenvectors()(0, i);
      q.weights[i] = mu0 * v0 * v0;
    }
    return q;
  }
};

/// Expectation of f under N(mean, sd^2) by substituting x = mean + sqrt(2) sd t.
template <class F>
double gauss_hermite_expect(const GaussHermite& q, double mean, double sd,
                            F&& f) {
  const double scale = std::numbers::sqrt2 * sd;
  double sum = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i)
    sum += q.weights[i] * f(mean + scale * q.nodes[i]);
  return sum / std::sqrt(std::numbers::pi);
}

}  // namespace cptsense
