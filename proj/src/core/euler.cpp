#include "core/euler.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace so3rep {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod can return exactly 2*pi after the correction when a is a tiny
  // negative number; fold that back to 0 so the range contract holds.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return m;
}

}  // namespace

EulerZYZ normalize_angles(const EulerZYZ& g) {
  double g1 = g.g1, g2 = wrap_two_pi(g.g2), g3 = g.g3;
  if (g2 > M_PI) {
    // R_y(t) for t in (pi, 2*pi) equals R_z(pi) R_y(2*pi - t) R_z(-pi);
    // absorb the half turns into the neighbouring z-angles.
    g2 = kTwoPi - g2;
    g1 -= M_PI;
    g3 += M_PI;
  }
  return {wrap_two_pi(g1), g2, wrap_two_pi(g3)};
}

Mat3 to_rotation_matrix(const EulerZYZ& g) {
  return rot_z(g.g3) * rot_y(g.g2) * rot_z(g.g1);
}

EulerZYZ from_rotation_matrix(const Mat3& R) {
  const double ortho_residual = (R.transpose() * R - Mat3::Identity())
                                    .cwiseAbs()
                                    .maxCoeff();
  const double det_residual = std::abs(R.determinant() - 1.0);
  if (ortho_residual > 1e-9 || det_residual > 1e-9) {
    std::ostringstream msg;
    msg << "from_rotation_matrix: input is not a rotation matrix "
        << "(orthogonality residual " << ortho_residual << ", |det - 1| "
        << det_residual << ", tolerance 1e-9)";
    throw std::invalid_argument(msg.str());
  }

  // With R = R_z(g3) R_y(g2) R_z(g1):
  //   R02 = cos(g3) sin(g2),  R12 = sin(g3) sin(g2),  R22 = cos(g2),
  //   R20 = -sin(g2) cos(g1), R21 = sin(g2) sin(g1).
  const double sb = std::hypot(R(0, 2), R(1, 2));
  double g1, g2, g3;
  if (sb > 1e-13) {
    g3 = std::atan2(R(1, 2), R(0, 2));
    g1 = std::atan2(R(2, 1), -R(2, 0));
    g2 = std::atan2(sb, R(2, 2));
  } else {
    // Gimbal lock: only the sum (g2 = 0) or difference (g2 = pi) of the two
    // z-angles is observable.  Canonical form: g1 = 0, everything in g3.
    g1 = 0.0;
    if (R(2, 2) > 0.0) {
      g2 = 0.0;
      g3 = std::atan2(R(1, 0), R(0, 0));
    } else {
      g2 = M_PI;
      g3 = std::atan2(-R(0, 1), -R(0, 0));
    }
  }
  return {wrap_two_pi(g1), g2, wrap_two_pi(g3)};
}

EulerZYZ compose(const EulerZYZ& g, const EulerZYZ& h) {
  return from_rotation_matrix(to_rotation_matrix(g) * to_rotation_matrix(h));
}

EulerZYZ inverse(const EulerZYZ& g) {
  return normalize_angles({-g.g3, -g.g2, -g.g1});
}

EulerZYZ haar_sample(RngStream& rng) {
  const double g1 = kTwoPi * rng.uniform();
  const double u = 2.0 * rng.uniform() - 1.0;
  const double g2 = std::acos(std::clamp(u, -1.0, 1.0));
  const double g3 = kTwoPi * rng.uniform();
  return {g1, g2, g3};
}

double rotation_distance(const EulerZYZ& a, const EulerZYZ& b) {
  return (to_rotation_matrix(a) - to_rotation_matrix(b)).norm();
}

}  // namespace so3rep
