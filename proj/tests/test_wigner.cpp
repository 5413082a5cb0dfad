// Fast rotation operators: z-rotation blocks, the axis-exchange table, the
// factorized rotation matrices, and their angle derivatives.

#include <cmath>
#include <cstdio>
#include <string>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/euler.hpp"
#include "core/harmonics.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"
#include "core/wigner.hpp"

using namespace so3rep;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::string temp_path(const char* name) {
  return std::string("wigner_test_") + name + ".bin";
}
}  // namespace

TEST_SUITE("wigner") {

TEST_CASE("z-rotation blocks follow the planar pair law") {
  const int l = 3;
  const double a = 0.7;
  const Eigen::MatrixXd T = tz_matrix(l, a);
  // m = 0 row/column untouched.
  CHECK(T(l, l) == doctest::Approx(1.0));
  for (int m = 1; m <= l; ++m) {
    CHECK(T(l - m, l - m) == doctest::Approx(std::cos(m * a)));
    CHECK(T(l - m, l + m) == doctest::Approx(std::sin(m * a)));
    CHECK(T(l + m, l - m) == doctest::Approx(-std::sin(m * a)));
    CHECK(T(l + m, l + m) == doctest::Approx(std::cos(m * a)));
  }
  // Everything else is zero.
  Eigen::MatrixXd mask = T;
  for (int m = 0; m <= l; ++m) {
    mask(l - m, l - m) = mask(l - m, l + m) = 0.0;
    mask(l + m, l - m) = mask(l + m, l + m) = 0.0;
  }
  CHECK(mask.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("z-rotation blocks match the function-space oracle") {
  const SphereQuadrature q = build_quadrature(4);
  for (const int l : {1, 2, 3}) {
    for (const double a : {0.3, 2.1, 5.5}) {
      const Eigen::MatrixXd oracle =
          matrix_elements_oracle(l, EulerZYZ{a, 0.0, 0.0}, q);
      CHECK((tz_matrix(l, a) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("z-rotation application composes and differentiates") {
  const int l = 4;
  RngStream rng(21);
  Eigen::VectorXd x(2 * l + 1);
  for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();

  const Eigen::VectorXd once = tz_apply(l, 0.4, tz_apply(l, 0.9, x));
  const Eigen::VectorXd both = tz_apply(l, 1.3, x);
  CHECK((once - both).cwiseAbs().maxCoeff() < 1e-14);

  // Central difference of tz_apply matches dtz_apply.
  const double h = 1e-6, a = 0.8;
  Eigen::VectorXd d(2 * l + 1);
  dtz_apply(l, a, x.data(), d.data());
  const Eigen::VectorXd num =
      (tz_apply(l, a + h, x) - tz_apply(l, a - h, x)) / (2.0 * h);
  CHECK((d - num).cwiseAbs().maxCoeff() < 1e-8);

  // In-place application (aliased input and output) gives the same result.
  Eigen::VectorXd alias = x;
  tz_apply(l, a, alias.data(), alias.data());
  CHECK((alias - tz_apply(l, a, x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("table blocks are symmetric orthogonal involutions") {
  const JTable jt(8);
  CHECK(jt.l_max() == 8);
  for (int l = 0; l <= 8; ++l) {
    const Eigen::MatrixXd& J = jt.j(l);
    const Eigen::MatrixXd I =
        Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1);
    CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((J * J - I).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((J.transpose() * J - I).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK_THROWS_AS((void)jt.j(9), std::out_of_range);
}

TEST_CASE("table blocks agree with the brute-force axis-exchange oracle") {
  const int lmax = 6;
  const JTable jt(lmax);
  const SphereQuadrature q = build_quadrature(lmax);
  for (int l = 0; l <= lmax; ++l) {
    CHECK((jt.j(l) - axis_exchange_oracle(l, q)).cwiseAbs().maxCoeff() <
          1e-11);
  }
}

TEST_CASE("table save/load reproduces the blocks bit for bit") {
  const std::string path = temp_path("jtable");
  const JTable jt(5);
  jt.save(path);
  const JTable back = JTable::load(path);
  REQUIRE(back.l_max() == 5);
  for (int l = 0; l <= 5; ++l) {
    CHECK((back.j(l) - jt.j(l)).cwiseAbs().maxCoeff() == 0.0);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(JTable::load(path), IoError);
}

TEST_CASE("rotation matrices represent the group") {
  const JTable jt(6);
  RngStream rng(22);
  for (int l = 0; l <= 6; ++l) {
    const int dim = 2 * l + 1;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    CHECK((wigner_matrix(jt, l, euler_identity()) - I)
              .cwiseAbs()
              .maxCoeff() < 1e-13);
    for (int rep = 0; rep < 5; ++rep) {
      const EulerZYZ a = haar_sample(rng), b = haar_sample(rng);
      const Eigen::MatrixXd Ta = wigner_matrix(jt, l, a);
      const Eigen::MatrixXd Tb = wigner_matrix(jt, l, b);
      CHECK((wigner_matrix(jt, l, compose(a, b)) - Ta * Tb)
                .cwiseAbs()
                .maxCoeff() < 1e-11);
      CHECK((Ta.transpose() * Ta - I).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((wigner_matrix(jt, l, inverse(a)) - Ta.transpose())
                .cwiseAbs()
                .maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("rotation matrices match the quadrature oracle") {
  const int lmax = 5;
  const JTable jt(lmax);
  const SphereQuadrature q = build_quadrature(lmax);
  RngStream rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    const EulerZYZ g = haar_sample(rng);
    for (int l = 0; l <= lmax; ++l) {
      CHECK((wigner_matrix(jt, l, g) - matrix_elements_oracle(l, g, q))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("pure z-rotations reduce to the sparse block even at weight 35") {
  const JTable jt(35);
  const int l = 35;
  const double a = kPi / 8.0;
  const Eigen::MatrixXd dense = wigner_matrix(jt, l, EulerZYZ{a, 0.0, 0.0});
  CHECK((dense - tz_matrix(l, a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matrix-free application agrees with the dense matrix") {
  const JTable jt(7);
  RngStream rng(24);
  for (const int l : {0, 2, 7}) {
    Eigen::VectorXd x(2 * l + 1);
    for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const EulerZYZ g = haar_sample(rng);
    CHECK((wigner_apply(jt, l, g, x) - wigner_matrix(jt, l, g) * x)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(wigner_apply(jt, l, g, x).norm() ==
          doctest::Approx(x.norm()).epsilon(1e-12));
  }
}

TEST_CASE("angle derivatives match central differences") {
  const JTable jt(4);
  RngStream rng(25);
  const int l = 4;
  Eigen::VectorXd x(2 * l + 1);
  for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const EulerZYZ g = haar_sample(rng);
  const EulerJacobian jac = wigner_apply_jacobian(jt, l, g, x);

  const double h = 1e-6;
  auto shift = [&](int which, double d) {
    EulerZYZ s = g;
    (which == 0 ? s.g1 : which == 1 ? s.g2 : s.g3) += d;
    return wigner_apply(jt, l, s, x);
  };
  for (int which = 0; which < 3; ++which) {
    const Eigen::VectorXd num =
        (shift(which, h) - shift(which, -h)) / (2.0 * h);
    const Eigen::VectorXd& an =
        which == 0 ? jac.d_g1 : which == 1 ? jac.d_g2 : jac.d_g3;
    CHECK((an - num).cwiseAbs().maxCoeff() < 1e-7);
  }
}

}  // TEST_SUITE
