#pragma once

#include <Eigen/Dense>

#include "core/euler.hpp"
#include "core/quadrature.hpp"

namespace so3rep {

// Real spherical harmonics.
//
// Convention used everywhere in this library:
//   * fully normalized associated Legendre functions, no Condon-Shortley
//     phase;
//   * within a degree l the basis is ordered m = -l .. l;
//   * m < 0 carries sin(|m| phi), m > 0 carries cos(m phi), m = 0 is the
//     zonal term;
//   * the basis is orthonormal: <Y_lm, Y_l'm'> = delta delta over the sphere.

// Coefficients of a bandlimited real function on the sphere,
// x(p) = sum_{l<=L} sum_m c_lm Y_lm(p), stored with l ascending and m
// ascending inside each degree; length (L+1)^2.
struct SphericalSignal {
  int bandlimit = 0;
  Eigen::VectorXd coeffs;
};

inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int L) { return (L + 1) * (L + 1); }

// Single basis function value.  Throws std::invalid_argument if |m| > l,
// l < 0, or theta is outside [0, pi].
double real_sh(int l, int m, double theta, double phi);

// All values Y_lm(theta, phi) for l <= L, packed in sh_index order.
Eigen::VectorXd real_sh_point(int L, double theta, double phi);

// Dense node-by-basis table: row k holds Y_lm at quadrature node k for all
// l <= L.  This is the workhorse for analysis and the integral oracles.
Eigen::MatrixXd sh_basis_matrix(int L, const SphereQuadrature& q);

// Quadrature analysis c_lm = sum_k w_k x(p_k) Y_lm(p_k).  Exact for signals
// of bandlimit <= L when q = build_quadrature(L').  Requires q.bandlimit >= L
// and samples aligned with q's nodes.
SphericalSignal analyze(const Eigen::VectorXd& samples,
                        const SphereQuadrature& q, int L);

// Pointwise synthesis of a coefficient vector at arbitrary directions.
Eigen::VectorXd synthesize(const SphericalSignal& s,
                           const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& phi);

// Brute-force matrix elements of the rotation operator on the weight-l
// subspace, entry (m, n) = integral of Y_lm(p) * Y_ln(g^{-1} p) over the
// sphere, evaluated by quadrature.  This integral is the ground truth that
// pins every convention in the fast rotation code; requires
// q.bandlimit >= l.  Row/column index 0 corresponds to m = -l.
Eigen::MatrixXd matrix_elements_oracle(int l, const EulerZYZ& g,
                                       const SphereQuadrature& q);

// Brute-force matrix of the axis exchange (x, y, z) -> (x, z, y) on the
// weight-l subspace, entry (m, n) = integral of Y_lm(x,y,z) * Y_ln(x,z,y).
// Symmetric, orthogonal and involutory up to quadrature round-off.
Eigen::MatrixXd axis_exchange_oracle(int l, const SphereQuadrature& q);

}  // namespace so3rep
