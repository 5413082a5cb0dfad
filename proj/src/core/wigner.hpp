#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/euler.hpp"

namespace so3rep {

// Fast rotation operators on the real spherical-harmonic basis.
//
// The weight-l rotation matrix factorizes into sparse z-rotation blocks and a
// fixed axis-exchange matrix J^l:
//
//   T^l(g) = T_z(g3) * J^l * T_z(-g2) * J^l * T_z(g1)
//
// with R(g) = R_z(g3) R_y(g2) R_z(g1) and (T(g) x)(p) = x(g^{-1} p).  J^l is
// the symmetric orthogonal involution representing the axis exchange
// (x, y, z) -> (x, z, y).  The middle factor carries the negated angle
// because conjugating a z-rotation by that axis exchange yields a y-rotation
// by the opposite angle:  S R_z(b) S = R_y(-b).  The whole chain is pinned
// end-to-end against the brute-force quadrature oracle in
// harmonics::matrix_elements_oracle.

// T_z(alpha) in the m = -l .. l ordering mixes each (-m, +m) pair by a
// planar rotation of angle m*alpha and leaves m = 0 untouched:
//   out[-m] =  cos(m a) x[-m] + sin(m a) x[+m]
//   out[+m] = -sin(m a) x[-m] + cos(m a) x[+m]
// O(l) time; x and out may alias.
void tz_apply(int l, double alpha, const double* x, double* out);
Eigen::VectorXd tz_apply(int l, double alpha, const Eigen::VectorXd& x);

// Derivative d/d alpha of tz_apply at fixed input.
void dtz_apply(int l, double alpha, const double* x, double* out);

// Dense (2l+1) x (2l+1) form of T_z(alpha).
Eigen::MatrixXd tz_matrix(int l, double alpha);

// Precomputed table of the axis-exchange matrices J^l for l = 0 .. l_max.
// Immutable after construction; shareable across threads.
//
// Each J^l is built independently of the quadrature oracle so the two can be
// cross-checked: the generator of rotations about x is tridiagonal in the
// complex basis, so a quarter turn about x is obtained from its
// eigendecomposition; conjugating into the real basis and composing with the
// reflection that flips the sin components yields the (x,z,y) exchange.  A
// final symmetrize-and-project step snaps the block onto the nearest
// symmetric orthogonal involution, which keeps J^l * J^l = I at machine
// precision even at l = 35.
class JTable {
 public:
  explicit JTable(int l_max);

  // Binary cache, format: one text header line "JTABLE v1 L=<max>\n"
  // followed by the row-major 64-bit float blocks in ascending l
  // (little-endian).  Loading reproduces the built table bit-for-bit.
  static JTable load(const std::string& path);
  void save(const std::string& path) const;

  int l_max() const { return static_cast<int>(blocks_.size()) - 1; }

  // Throws std::out_of_range when l exceeds the table.
  const Eigen::MatrixXd& j(int l) const;

 private:
  JTable() = default;
  std::vector<Eigen::MatrixXd> blocks_;
};

// Dense weight-l rotation matrix; O(l^3) (two dense multiplies by J^l).
Eigen::MatrixXd wigner_matrix(const JTable& jt, int l, const EulerZYZ& g);

// Matrix-free application T^l(g) x; O(l^2), dominated by the two J^l
// products.
Eigen::VectorXd wigner_apply(const JTable& jt, int l, const EulerZYZ& g,
                             const Eigen::VectorXd& x);

struct EulerJacobian {
  Eigen::VectorXd d_g1, d_g2, d_g3;
};

// Analytic partial derivatives of T^l(g) x with respect to the three Euler
// angles, obtained by replacing one T_z factor at a time with its derivative.
EulerJacobian wigner_apply_jacobian(const JTable& jt, int l, const EulerZYZ& g,
                                    const Eigen::VectorXd& x);

}  // namespace so3rep
