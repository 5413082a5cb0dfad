#include "core/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace so3rep {

void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess for the i-th root of P_n, then Newton
    // iterations using the three-term recurrence for P_n and its derivative.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      // p0 = P_n(z); derivative from P_n and P_{n-1}.
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    nodes[i] = -z;          // ascending order: most negative root first
    nodes[n - 1 - i] = z;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

SphereQuadrature build_quadrature(int L) {
  if (L < 0) throw std::invalid_argument("build_quadrature: L must be >= 0");
  const int n_gl = L + 1;
  const int n_az = 2 * L + 1;
  Eigen::VectorXd x, w;
  gauss_legendre(n_gl, x, w);

  SphereQuadrature q;
  q.bandlimit = L;
  const int n = n_gl * n_az;
  q.theta.resize(n);
  q.phi.resize(n);
  q.weight.resize(n);
  const double az_weight = 2.0 * M_PI / n_az;
  int k = 0;
  for (int i = 0; i < n_gl; ++i) {
    const double th = std::acos(std::clamp(x[i], -1.0, 1.0));
    for (int j = 0; j < n_az; ++j, ++k) {
      q.theta[k] = th;
      q.phi[k] = 2.0 * M_PI * j / n_az;
      q.weight[k] = w[i] * az_weight;
    }
  }
  return q;
}

}  // namespace so3rep
