#pragma once

#include <Eigen/Dense>

#include "core/rng.hpp"

namespace so3rep {

using Mat3 = Eigen::Matrix3d;

// A rotation expressed in ZYZ Euler angles.  The canonical ranges are
// g1, g3 in [0, 2*pi) and g2 in [0, pi]; the corresponding matrix is
//
//   R(g) = R_z(g3) * R_y(g2) * R_z(g1),
//
// i.e. g1 is applied first.  Operators on sphere functions use the active
// convention (T(g) x)(p) = x(g^{-1} p) throughout the library.
//
// Most functions accept angles outside the canonical ranges (everything is
// built from trigonometric functions), but all angles *returned* by this
// module are normalized.
struct EulerZYZ {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

inline EulerZYZ euler_identity() { return {0.0, 0.0, 0.0}; }

// Maps the angles onto the canonical ranges without changing the rotation.
// When g2 has to be reflected back into [0, pi], g1 and g3 pick up the
// compensating half turns (R_y(-b) = R_z(pi) R_y(b) R_z(-pi)).  Idempotent.
EulerZYZ normalize_angles(const EulerZYZ& g);

Mat3 to_rotation_matrix(const EulerZYZ& g);

// Inverse of to_rotation_matrix.  Requires R to be a rotation matrix
// (orthogonal, det +1) within 1e-9 and throws std::invalid_argument with the
// measured residual otherwise.  At gimbal lock (g2 in {0, pi}) g1 and g3 are
// not separately identifiable; the canonical form returned here sets g1 = 0
// and carries the whole z-angle in g3.
EulerZYZ from_rotation_matrix(const Mat3& R);

// Euler angles of R(g) * R(h); "apply h first, then g".
EulerZYZ compose(const EulerZYZ& g, const EulerZYZ& h);

// Euler angles of R(g)^T, computed in closed form from (-g3, -g2, -g1).
EulerZYZ inverse(const EulerZYZ& g);

// Draws a rotation from the uniform (rotation-invariant) distribution:
// g1 ~ U[0, 2*pi), cos(g2) ~ U[-1, 1], g3 ~ U[0, 2*pi), in that draw order.
EulerZYZ haar_sample(RngStream& rng);

// Frobenius distance between the two rotation matrices; convenient for tests
// that must compare rotations rather than (non-unique) angle triples.
double rotation_distance(const EulerZYZ& a, const EulerZYZ& b);

}  // namespace so3rep
