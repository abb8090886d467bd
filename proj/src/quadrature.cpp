#include "bsl/quadrature.hpp"

#include <cmath>

#include "bsl/errors.hpp"
#include "bsl/grid.hpp"

namespace bsl {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("quadrature order must be positive");
  QuadratureRule r{Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  r.nodes = mid + half * r.nodes;
  r.weights *= half;
  return r;
}

}  // namespace bsl
