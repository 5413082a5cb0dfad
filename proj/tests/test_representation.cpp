// Block-diagonal representations assembled from a weight list.

#include <stdexcept>

#include <doctest.h>

#include "core/representation.hpp"
#include "core/rng.hpp"

using namespace so3rep;

namespace {
Eigen::VectorXd random_vector(RngStream& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}
}  // namespace

TEST_SUITE("representation") {

TEST_CASE("parsing the run-length weight syntax") {
  const RepSpec spec = RepSpec::parse("0:2,1:2,2:1");
  CHECK(spec.dim() == 2 * 1 + 2 * 3 + 1 * 5);
  CHECK(spec.block_count() == 5);
  CHECK(spec.block_weight(0) == 0);
  CHECK(spec.block_weight(1) == 0);
  CHECK(spec.block_weight(2) == 1);
  CHECK(spec.block_weight(4) == 2);
  CHECK(spec.block_offset(0) == 0);
  CHECK(spec.block_offset(2) == 2);
  CHECK(spec.block_offset(3) == 5);
  CHECK(spec.block_offset(4) == 8);
  CHECK(spec.block_dim(4) == 5);
  CHECK(spec.max_weight() == 2);
  CHECK(spec.to_string() == "0:2,1:2,2:1");
}

TEST_CASE("re-encoding groups adjacent duplicates") {
  CHECK(RepSpec(std::vector<int>{1, 1, 1}).to_string() == "1:3");
  CHECK(RepSpec(std::vector<int>{2, 1, 1, 2}).to_string() == "2:1,1:2,2:1");
}

TEST_CASE("malformed weight lists are rejected with diagnostics") {
  for (const char* bad : {"", "1:x", "x:1", "1:", ":2", "1:0", "-1:2",
                          "1:2,,2:1", "1:2 2:1", "1.5:2"}) {
    CHECK_THROWS_AS(RepSpec::parse(bad), std::invalid_argument);
  }
}

TEST_CASE("block application equals the dense operator") {
  const JTable jt(3);
  const RepSpec spec = RepSpec::parse("0:1,1:2,3:1");
  RngStream rng(31);
  const EulerZYZ g = haar_sample(rng);
  const Eigen::VectorXd z = random_vector(rng, spec.dim());
  const Eigen::MatrixXd D = block_dense(jt, spec, g);
  CHECK((block_apply(jt, spec, g, z) - D * z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((block_dense(jt, spec, euler_identity()) -
         Eigen::MatrixXd::Identity(spec.dim(), spec.dim()))
            .cwiseAbs()
            .maxCoeff() < 1e-13);
}

TEST_CASE("block application is a norm-preserving group action") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("0:2,1:2,2:1");
  RngStream rng(32);
  for (int rep = 0; rep < 20; ++rep) {
    const EulerZYZ a = haar_sample(rng), b = haar_sample(rng);
    const Eigen::VectorXd z = random_vector(rng, spec.dim());
    const Eigen::VectorXd via_compose = block_apply(jt, spec, compose(a, b), z);
    const Eigen::VectorXd via_chain =
        block_apply(jt, spec, a, block_apply(jt, spec, b, z));
    CHECK((via_compose - via_chain).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(block_apply(jt, spec, a, z).norm() ==
          doctest::Approx(z.norm()).epsilon(1e-12));
    // Inverse rotation inverts the action.
    CHECK((block_apply(jt, spec, inverse(a), block_apply(jt, spec, a, z)) - z)
              .cwiseAbs()
              .maxCoeff() < 1e-11);
  }
}

TEST_CASE("weight-zero blocks are left untouched") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("0:2,2:1");
  RngStream rng(33);
  const Eigen::VectorXd z = random_vector(rng, spec.dim());
  const Eigen::VectorXd out = block_apply(jt, spec, haar_sample(rng), z);
  CHECK(out[0] == z[0]);
  CHECK(out[1] == z[1]);
}

TEST_CASE("per-block slices transform by their own weight") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("1:1,2:1");
  RngStream rng(34);
  const EulerZYZ g = haar_sample(rng);
  const Eigen::VectorXd z = random_vector(rng, spec.dim());
  const Eigen::VectorXd out = block_apply(jt, spec, g, z);
  CHECK((out.segment(0, 3) - wigner_apply(jt, 1, g, z.segment(0, 3)))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((out.segment(3, 5) - wigner_apply(jt, 2, g, z.segment(3, 5)))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("angle derivatives of the block action match differences") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("0:1,1:1,2:1");
  RngStream rng(35);
  const EulerZYZ g = haar_sample(rng);
  const Eigen::VectorXd z = random_vector(rng, spec.dim());
  const EulerJacobian jac = block_apply_jacobian(jt, spec, g, z);
  const double h = 1e-6;
  auto shift = [&](int which, double d) {
    EulerZYZ s = g;
    (which == 0 ? s.g1 : which == 1 ? s.g2 : s.g3) += d;
    return block_apply(jt, spec, s, z);
  };
  for (int which = 0; which < 3; ++which) {
    const Eigen::VectorXd num =
        (shift(which, h) - shift(which, -h)) / (2.0 * h);
    const Eigen::VectorXd& an =
        which == 0 ? jac.d_g1 : which == 1 ? jac.d_g2 : jac.d_g3;
    CHECK((an - num).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("operations demand a table that covers the largest weight") {
  const JTable jt(1);
  const RepSpec spec = RepSpec::parse("2:1");
  RngStream rng(36);
  CHECK_THROWS_AS(
      (void)block_apply(jt, spec, haar_sample(rng), random_vector(rng, 5)),
      std::out_of_range);
}

TEST_CASE("vector length must match the layout dimension") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("1:1");
  RngStream rng(37);
  CHECK_THROWS_AS(
      (void)block_apply(jt, spec, haar_sample(rng), random_vector(rng, 4)),
      std::invalid_argument);
}

}  // TEST_SUITE
