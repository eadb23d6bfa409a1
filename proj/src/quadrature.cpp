#include "freeburgers/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "freeburgers/error.hpp"

namespace freeburgers {

GaussRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1 || !(alpha > -1.0) || !(beta > -1.0)) {
    throw Error(ErrorCode::invalid_parameter, "gauss_jacobi needs n >= 1 and exponents > -1");
  }
  const double s = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    const double d = 2.0 * k + s;
    diag(k) = (k == 0) ? (beta - alpha) / (s + 2.0) : (beta * beta - alpha * alpha) / (d * (d + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double d = 2.0 * k + s;
    double b2;
    if (k == 1) {
      // (1 + s) cancels between numerator and denominator.
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s) * (2.0 + s) * (3.0 + s));
    } else {
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + s) / (d * d * (d + 1.0) * (d - 1.0));
    }
    sub(k - 1) = std::sqrt(b2);
  }
  const double mu0 = std::exp((s + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(s + 2.0));
  GaussRule rule;
  rule.alpha = alpha;
  rule.beta = beta;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  for (int k = 0; k < n; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
  }
  return rule;
}

double trapezoid(const std::vector<double>& values, double h) {
  if (values.size() < 2) return 0.0;
  double acc = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += values[i];
  return acc * h;
}

}  // namespace freeburgers
