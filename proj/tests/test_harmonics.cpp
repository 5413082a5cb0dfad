// Real spherical harmonics, sphere quadrature, and the brute-force
// rotation-operator oracles.

#include <cmath>

#include <doctest.h>

#include "core/euler.hpp"
#include "core/harmonics.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"

using namespace so3rep;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Unit-sphere Cartesian coordinates of a quadrature direction.
struct Dir {
  double x, y, z;
};
Dir dir(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
          std::cos(theta)};
}
}  // namespace

TEST_SUITE("harmonics") {

TEST_CASE("index helpers") {
  CHECK(sh_count(0) == 1);
  CHECK(sh_count(3) == 16);
  CHECK(sh_index(0, 0) == 0);
  CHECK(sh_index(1, -1) == 1);
  CHECK(sh_index(1, 0) == 2);
  CHECK(sh_index(1, 1) == 3);
  CHECK(sh_index(2, -2) == 4);
}

TEST_CASE("low-degree harmonics match their closed forms") {
  // Fully normalized real basis without the alternating phase:
  //   Y_00 = 1 / (2 sqrt(pi))
  //   Y_1,-1 = sqrt(3/4pi) y,  Y_10 = sqrt(3/4pi) z,  Y_11 = sqrt(3/4pi) x
  //   Y_2,-2 = 1/2 sqrt(15/pi) xy          Y_2,-1 = 1/2 sqrt(15/pi) yz
  //   Y_20 = 1/4 sqrt(5/pi) (3z^2 - 1)     Y_21 = 1/2 sqrt(15/pi) xz
  //   Y_22 = 1/4 sqrt(15/pi) (x^2 - y^2)
  const double c0 = 0.5 / std::sqrt(kPi);
  const double c1 = std::sqrt(3.0 / (4.0 * kPi));
  const double c2a = 0.5 * std::sqrt(15.0 / kPi);
  const double c2b = 0.25 * std::sqrt(5.0 / kPi);
  const double c2c = 0.25 * std::sqrt(15.0 / kPi);

  for (const auto& [theta, phi] : {std::pair{0.3, 0.8}, std::pair{1.2, 4.0},
                                   std::pair{2.5, 2.2}, std::pair{1.8, 5.9}}) {
    const Dir p = dir(theta, phi);
    CHECK(real_sh(0, 0, theta, phi) == doctest::Approx(c0).epsilon(1e-13));
    CHECK(real_sh(1, -1, theta, phi) ==
          doctest::Approx(c1 * p.y).epsilon(1e-13));
    CHECK(real_sh(1, 0, theta, phi) ==
          doctest::Approx(c1 * p.z).epsilon(1e-13));
    CHECK(real_sh(1, 1, theta, phi) ==
          doctest::Approx(c1 * p.x).epsilon(1e-13));
    CHECK(real_sh(2, -2, theta, phi) ==
          doctest::Approx(c2a * p.x * p.y).epsilon(1e-12));
    CHECK(real_sh(2, -1, theta, phi) ==
          doctest::Approx(c2a * p.y * p.z).epsilon(1e-12));
    CHECK(real_sh(2, 0, theta, phi) ==
          doctest::Approx(c2b * (3.0 * p.z * p.z - 1.0)).epsilon(1e-12));
    CHECK(real_sh(2, 1, theta, phi) ==
          doctest::Approx(c2a * p.x * p.z).epsilon(1e-12));
    CHECK(real_sh(2, 2, theta, phi) ==
          doctest::Approx(c2c * (p.x * p.x - p.y * p.y)).epsilon(1e-12));
  }
}

TEST_CASE("quadrature weights integrate the sphere") {
  for (const int L : {0, 1, 5, 12}) {
    const SphereQuadrature q = build_quadrature(L);
    CHECK(q.bandlimit == L);
    CHECK(q.size() == (L + 1) * (2 * L + 1));
    CHECK(q.weight.sum() == doctest::Approx(4.0 * kPi).epsilon(1e-13));
    CHECK(q.weight.minCoeff() > 0.0);
  }
}

TEST_CASE("quadrature integrates polynomials it promises to handle") {
  // x^2 integrates to 4*pi/3; x^2 y^2 to 4*pi/15; odd powers vanish.
  const SphereQuadrature q = build_quadrature(4);
  double ix2 = 0.0, ix2y2 = 0.0, ixz = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    const Dir p = dir(q.theta[i], q.phi[i]);
    ix2 += q.weight[i] * p.x * p.x;
    ix2y2 += q.weight[i] * p.x * p.x * p.y * p.y;
    ixz += q.weight[i] * p.x * p.z;
  }
  CHECK(ix2 == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-13));
  CHECK(ix2y2 == doctest::Approx(4.0 * kPi / 15.0).epsilon(1e-13));
  CHECK(std::abs(ixz) < 1e-14);
}

TEST_CASE("Gauss-Legendre nodes and weights at n=5 match references") {
  Eigen::VectorXd nodes, weights;
  gauss_legendre(5, nodes, weights);
  REQUIRE(nodes.size() == 5);
  // Abramowitz & Stegun 25.4.29 values.
  CHECK(nodes[0] == doctest::Approx(-0.9061798459386640).epsilon(1e-14));
  CHECK(nodes[1] == doctest::Approx(-0.5384693101056831).epsilon(1e-14));
  CHECK(nodes[2] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(weights[0] == doctest::Approx(0.2369268850561891).epsilon(1e-13));
  CHECK(weights[1] == doctest::Approx(0.4786286704993665).epsilon(1e-13));
  CHECK(weights[2] == doctest::Approx(0.5688888888888889).epsilon(1e-13));
  CHECK(weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("the basis is orthonormal under the quadrature") {
  const int L = 8;
  const SphereQuadrature q = build_quadrature(L);
  const Eigen::MatrixXd B = sh_basis_matrix(L, q);  // nodes x count
  REQUIRE(B.rows() == q.size());
  REQUIRE(B.cols() == sh_count(L));
  const Eigen::MatrixXd gram =
      B.transpose() * q.weight.asDiagonal() * B;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("analysis inverts synthesis") {
  const int L = 6;
  const SphereQuadrature q = build_quadrature(L);
  RngStream rng(5);
  SphericalSignal s;
  s.bandlimit = L;
  s.coeffs.resize(sh_count(L));
  for (int i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] = rng.normal();
  const Eigen::VectorXd samples = synthesize(s, q.theta, q.phi);
  const SphericalSignal back = analyze(samples, q, L);
  CHECK((back.coeffs - s.coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the matrix-element oracle is orthogonal and respects identity") {
  const SphereQuadrature q = build_quadrature(6);
  RngStream rng(6);
  for (const int l : {0, 1, 2, 3}) {
    const Eigen::MatrixXd at_id =
        matrix_elements_oracle(l, euler_identity(), q);
    CHECK((at_id - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    const Eigen::MatrixXd T = matrix_elements_oracle(l, haar_sample(rng), q);
    CHECK((T.transpose() * T -
           Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("the oracle realizes function rotation") {
  // (T(g) x)(p) = x(g^{-1} p): rotate coefficients with the oracle, compare
  // pointwise with evaluating the original expansion at pulled-back points.
  const int l = 3;
  const SphereQuadrature q = build_quadrature(5);
  RngStream rng(7);
  const EulerZYZ g = haar_sample(rng);
  Eigen::VectorXd coeff(2 * l + 1);
  for (int i = 0; i < coeff.size(); ++i) coeff[i] = rng.normal();
  const Eigen::VectorXd rotated = matrix_elements_oracle(l, g, q) * coeff;

  const Mat3 Rinv = to_rotation_matrix(inverse(g));
  for (const auto& [theta, phi] :
       {std::pair{0.4, 1.0}, std::pair{2.0, 3.3}, std::pair{1.1, 5.2}}) {
    const Dir p = dir(theta, phi);
    const Eigen::Vector3d pulled =
        Rinv * Eigen::Vector3d(p.x, p.y, p.z);
    const double theta_p = std::acos(std::clamp(pulled.z(), -1.0, 1.0));
    const double phi_p = std::atan2(pulled.y(), pulled.x());
    double lhs = 0.0, rhs = 0.0;
    for (int m = -l; m <= l; ++m) {
      lhs += rotated[m + l] * real_sh(l, m, theta, phi);
      rhs += coeff[m + l] * real_sh(l, m, theta_p, phi_p);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("the axis-exchange oracle matches the hand-derived blocks") {
  const SphereQuadrature q = build_quadrature(4);

  // l = 1, basis (y, z, x): swapping y and z swaps the first two functions.
  Eigen::MatrixXd J1(3, 3);
  J1 << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((axis_exchange_oracle(1, q) - J1).cwiseAbs().maxCoeff() < 1e-12);

  // l = 2: xy <-> xz, yz fixed, and the (Y_20, Y_22) pair mixes by the
  // constant matrix [[-1/2, -sqrt(3)/2], [-sqrt(3)/2, 1/2]].
  const double s = std::sqrt(3.0) / 2.0;
  Eigen::MatrixXd J2(5, 5);
  J2 << 0, 0, 0, 1, 0,   //
      0, 1, 0, 0, 0,     //
      0, 0, -0.5, 0, -s, //
      1, 0, 0, 0, 0,     //
      0, 0, -s, 0, 0.5;
  CHECK((axis_exchange_oracle(2, q) - J2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the axis-exchange oracle is a symmetric involution") {
  const SphereQuadrature q = build_quadrature(8);
  for (const int l : {3, 4}) {
    const Eigen::MatrixXd J = axis_exchange_oracle(l, q);
    CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((J * J - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

}  // TEST_SUITE
