#pragma once

#include <vector>

namespace freeburgers {

/// Gauss quadrature on [-1, 1] for the Jacobi weight (1 - x)^alpha (1 + x)^beta.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Golub-Welsch construction; alpha, beta > -1.
GaussRule gauss_jacobi(int n, double alpha, double beta);

/// Trapezoidal rule on a uniform grid with spacing h.
double trapezoid(const std::vector<double>& values, double h);

}  // namespace freeburgers
