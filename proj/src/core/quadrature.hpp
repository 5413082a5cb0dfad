#pragma once

#include <Eigen/Dense>

namespace so3rep {

// Product quadrature on the unit sphere: Gauss-Legendre nodes in cos(theta)
// crossed with equispaced azimuths.  build_quadrature(L) integrates any
// integrand of spherical-harmonic degree <= 2L exactly (up to round-off),
// which is what the orthonormality and matrix-element integrals need.
struct SphereQuadrature {
  int bandlimit = 0;       // the L it was built for
  Eigen::VectorXd theta;   // polar angle per node
  Eigen::VectorXd phi;     // azimuth per node
  Eigen::VectorXd weight;  // positive, sums to 4*pi

  int size() const { return static_cast<int>(weight.size()); }
};

// (L+1) Gauss-Legendre colatitudes x (2L+1) azimuths.  Node order is fixed:
// Gauss-Legendre index ascending in cos(theta), azimuth index innermost.
SphereQuadrature build_quadrature(int L);

// Gauss-Legendre nodes and weights on [-1, 1] (ascending nodes).
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace so3rep
