// Second-moment decorrelation experiments and the factorization check.

#include <cmath>
#include <complex>
#include <stdexcept>

#include <doctest.h>

#include "core/errors.hpp"
#include "core/representation.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

using namespace so3rep;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Independent reference: squared moduli of the unitary DFT of tau.
Eigen::VectorXd dft_power(const Eigen::VectorXd& tau) {
  const int n = static_cast<int>(tau.size());
  Eigen::VectorXd power(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      acc += tau[j] * std::polar(1.0, -2.0 * kPi * j * k / n);
    }
    power[k] = std::norm(acc) / n;
  }
  return power;
}
}  // namespace

TEST_SUITE("stats") {

TEST_CASE("circle impulse template has an exactly flat spectrum") {
  const int n = 16;
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  tau[0] = 1.0;
  const CovarianceReport r = circle_covariance(tau, 64);
  REQUIRE(r.matrix.rows() == n);
  CHECK(r.n_samples == 64);
  CHECK(r.max_offdiag < 1e-12);
  for (int k = 0; k < n; ++k) {
    CHECK(r.predicted_diag[k] == doctest::Approx(1.0 / n).epsilon(1e-13));
    CHECK(r.matrix(k, k) == doctest::Approx(1.0 / n).epsilon(1e-12));
  }
}

TEST_CASE("circle diagonal equals the DFT power of any template") {
  RngStream rng(41);
  const int n = 12;
  Eigen::VectorXd tau(n);
  for (int i = 0; i < n; ++i) tau[i] = rng.normal();
  const CovarianceReport r = circle_covariance(tau, n);
  const Eigen::VectorXd expected = dft_power(tau);
  for (int k = 0; k < n; ++k) {
    CHECK(r.predicted_diag[k] ==
          doctest::Approx(expected[k]).epsilon(1e-11));
    CHECK(r.matrix(k, k) == doctest::Approx(expected[k]).epsilon(1e-10));
  }
  CHECK(r.max_offdiag < 1e-12);
  // Total power is conserved (Parseval).
  CHECK(r.matrix.trace() ==
        doctest::Approx(tau.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("coarser rotation grids than the signal are rejected") {
  Eigen::VectorXd tau = Eigen::VectorXd::Ones(8);
  CHECK_THROWS_AS((void)circle_covariance(tau, 7), std::invalid_argument);
  Eigen::VectorXd empty;
  CHECK_THROWS_AS((void)circle_covariance(empty, 8), std::invalid_argument);
}

TEST_CASE("orbit second moment is diagonal with equal per-block values") {
  const JTable jt(2);
  const RepSpec spec = RepSpec::parse("1:1,2:1");
  RngStream rng(42);
  Eigen::VectorXd tau(spec.dim());
  for (int i = 0; i < tau.size(); ++i) tau[i] = rng.normal();
  const long long N = 40000;
  const CovarianceReport r = orbit_covariance_mc(jt, spec, tau, N, rng);
  REQUIRE(r.matrix.rows() == spec.dim());
  CHECK(r.n_samples == N);

  const double p1 = tau.segment(0, 3).squaredNorm() / 3.0;
  const double p2 = tau.segment(3, 5).squaredNorm() / 5.0;
  for (int i = 0; i < 3; ++i) {
    CHECK(r.predicted_diag[i] == doctest::Approx(p1).epsilon(1e-12));
  }
  for (int i = 3; i < 8; ++i) {
    CHECK(r.predicted_diag[i] == doctest::Approx(p2).epsilon(1e-12));
  }
  const double scale = r.predicted_diag.maxCoeff();
  CHECK(r.max_offdiag < 0.03 * scale);
  for (int i = 0; i < spec.dim(); ++i) {
    CHECK(std::abs(r.matrix(i, i) - r.predicted_diag[i]) <
          0.05 * r.predicted_diag[i]);
  }
  // Batch-means error bars cover the actual deviations at 4 sigma.
  REQUIRE(r.stderr_matrix.rows() == spec.dim());
  CHECK(r.stderr_matrix.minCoeff() > 0.0);
  int outside = 0;
  for (int i = 0; i < spec.dim(); ++i) {
    for (int j = 0; j < spec.dim(); ++j) {
      const double truth = i == j ? r.predicted_diag[i] : 0.0;
      if (std::abs(r.matrix(i, j) - truth) > 4.0 * r.stderr_matrix(i, j)) {
        ++outside;
      }
    }
  }
  CHECK(outside == 0);
}

TEST_CASE("weight-zero orbit blocks keep their value") {
  const JTable jt(1);
  const RepSpec spec = RepSpec::parse("0:1");
  RngStream rng(43);
  Eigen::VectorXd tau = Eigen::VectorXd::Constant(1, 0.7);
  const CovarianceReport r = orbit_covariance_mc(jt, spec, tau, 10, rng);
  CHECK(r.matrix(0, 0) == doctest::Approx(0.49).epsilon(1e-13));
  CHECK(r.predicted_diag[0] == doctest::Approx(0.49).epsilon(1e-13));
  CHECK(r.max_offdiag == 0.0);
}

TEST_CASE("matrix-element cross moments vanish at the MC rate") {
  const JTable jt(2);
  RngStream rng(44);
  CHECK(schur_orthogonality_check(jt, 0, 0, 1000, rng) < 1e-12);
  CHECK(schur_orthogonality_check(jt, 0, 1, 20000, rng) < 0.03);
  CHECK(schur_orthogonality_check(jt, 1, 1, 20000, rng) < 0.03);
  CHECK(schur_orthogonality_check(jt, 1, 2, 20000, rng) < 0.03);
}

TEST_CASE("two-block conditionals factorize into their marginals") {
  const int n = 8;
  Eigen::VectorXd tau(n);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    tau[i] = std::cos(t) + 0.6 * std::sin(2.0 * t);
  }
  RngStream rng(45);
  const FactorizationReport r =
      conditional_factorization_check(tau, 0.2, 128, 3, rng);
  REQUIRE(r.joint.size() == 3);
  REQUIRE(r.product.size() == 3);
  REQUIRE(r.block_marginals.rows() == 3);
  REQUIRE(r.block_marginals.cols() == 2);
  CHECK(r.joint.minCoeff() > 0.0);
  CHECK(r.max_rel_gap < 1e-6);
  CHECK(r.refinement_gap <= 1e-8);
}

TEST_CASE("single-block signals factorize trivially") {
  const int n = 8;
  Eigen::VectorXd tau(n);
  for (int i = 0; i < n; ++i) tau[i] = std::sin(2.0 * kPi * i / n);
  RngStream rng(46);
  const FactorizationReport r =
      conditional_factorization_check(tau, 0.3, 64, 2, rng);
  CHECK(r.max_rel_gap < 1e-9);
}

TEST_CASE("degenerate factorization inputs are rejected") {
  const int n = 12;
  RngStream rng(47);

  // Three active blocks: frequencies 1, 2, 3.
  Eigen::VectorXd three(n);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    three[i] = std::cos(t) + std::cos(2.0 * t) + std::cos(3.0 * t);
  }
  CHECK_THROWS_AS(
      (void)conditional_factorization_check(three, 0.2, 16, 1, rng),
      std::invalid_argument);

  // Energy at the Nyquist frequency n/2 cannot rotate inside the grid.
  Eigen::VectorXd nyquist(n);
  for (int i = 0; i < n; ++i) nyquist[i] = (i % 2 == 0) ? 1.0 : -1.0;
  CHECK_THROWS_AS(
      (void)conditional_factorization_check(nyquist, 0.2, 16, 1, rng),
      std::invalid_argument);

  // The zero signal has no active blocks at all.
  CHECK_THROWS_AS((void)conditional_factorization_check(
                      Eigen::VectorXd::Zero(n), 0.2, 16, 1, rng),
                  std::invalid_argument);

  // Bad scalar parameters.
  Eigen::VectorXd ok(n);
  for (int i = 0; i < n; ++i) ok[i] = std::cos(2.0 * kPi * i / n);
  CHECK_THROWS_AS((void)conditional_factorization_check(ok, 0.0, 16, 1, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)conditional_factorization_check(ok, 0.2, 3, 1, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)conditional_factorization_check(ok, 0.2, 16, 0, rng),
                  std::invalid_argument);
}

}  // TEST_SUITE
