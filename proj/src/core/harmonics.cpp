#include "core/harmonics.hpp"

#include <cmath>
#include <stdexcept>

namespace so3rep {

namespace {

// Fully normalized associated Legendre values
//   Pbar_lm(x) = sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!) * P_l^m(x),  m >= 0,
// without the Condon-Shortley (-1)^m factor, for all l <= L.  The standard
// upward recursion in l with per-degree normalization is numerically stable
// well past l = 50.  P(l, m) is stored in a (L+1) x (L+1) lower triangle.
Eigen::MatrixXd normalized_legendre_all(int L, double x) {
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(L + 1, L + 1);
  P(0, 0) = std::sqrt(1.0 / (4.0 * M_PI));
  for (int m = 1; m <= L; ++m) {
    P(m, m) = P(m - 1, m - 1) * s * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
  }
  for (int m = 0; m <= L; ++m) {
    if (m + 1 <= L) P(m + 1, m) = x * std::sqrt(2.0 * m + 3.0) * P(m, m);
    for (int l = m + 2; l <= L; ++l) {
      const double a =
          std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      P(l, m) = a * (x * P(l - 1, m) - b * P(l - 2, m));
    }
  }
  return P;
}

void check_angles(int l, double theta) {
  if (l < 0) throw std::invalid_argument("real_sh: l must be >= 0");
  if (theta < -1e-12 || theta > M_PI + 1e-12) {
    throw std::invalid_argument("real_sh: theta must lie in [0, pi]");
  }
}

// Fills out[sh_index(l, m)] for all l <= L given the Legendre table at
// cos(theta).
void fill_point(int L, const Eigen::MatrixXd& P, double phi,
                Eigen::VectorXd& out) {
  const double sqrt2 = std::sqrt(2.0);
  for (int l = 0; l <= L; ++l) {
    out[sh_index(l, 0)] = P(l, 0);
    for (int m = 1; m <= l; ++m) {
      const double base = sqrt2 * P(l, m);
      out[sh_index(l, m)] = base * std::cos(m * phi);
      out[sh_index(l, -m)] = base * std::sin(m * phi);
    }
  }
}

// Direction vector of spherical angles.
inline Eigen::Vector3d unit_vector(double theta, double phi) {
  const double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

inline void to_angles(const Eigen::Vector3d& v, double& theta, double& phi) {
  theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
  phi = std::atan2(v.y(), v.x());
}

// Shared core of the two integral oracles: entry (m, n) = sum over nodes of
// w * Y_lm(p) * Y_ln(map(p)).
template <typename MapFn>
Eigen::MatrixXd mapped_gram(int l, const SphereQuadrature& q, MapFn&& map) {
  if (q.bandlimit < l) {
    throw std::invalid_argument(
        "integral oracle: quadrature bandlimit is below the requested weight");
  }
  const int dim = 2 * l + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd y_here(sh_count(l)), y_there(sh_count(l));
  for (int k = 0; k < q.size(); ++k) {
    const Eigen::Vector3d p = unit_vector(q.theta[k], q.phi[k]);
    const Eigen::Vector3d pm = map(p);
    double th, ph;
    to_angles(pm, th, ph);
    const Eigen::MatrixXd P_here = normalized_legendre_all(l, std::cos(q.theta[k]));
    const Eigen::MatrixXd P_there = normalized_legendre_all(l, std::cos(th));
    fill_point(l, P_here, q.phi[k], y_here);
    fill_point(l, P_there, ph, y_there);
    M.noalias() += q.weight[k] *
                   y_here.segment(l * l, dim) *
                   y_there.segment(l * l, dim).transpose();
  }
  return M;
}

}  // namespace

double real_sh(int l, int m, double theta, double phi) {
  check_angles(l, theta);
  if (std::abs(m) > l) {
    throw std::invalid_argument("real_sh: |m| must not exceed l");
  }
  const Eigen::MatrixXd P = normalized_legendre_all(l, std::cos(theta));
  if (m == 0) return P(l, 0);
  const double base = std::sqrt(2.0) * P(l, std::abs(m));
  return m > 0 ? base * std::cos(m * phi) : base * std::sin(-m * phi);
}

Eigen::VectorXd real_sh_point(int L, double theta, double phi) {
  check_angles(L, theta);
  const Eigen::MatrixXd P = normalized_legendre_all(L, std::cos(theta));
  Eigen::VectorXd out(sh_count(L));
  fill_point(L, P, phi, out);
  return out;
}

Eigen::MatrixXd sh_basis_matrix(int L, const SphereQuadrature& q) {
  Eigen::MatrixXd Y(q.size(), sh_count(L));
  Eigen::VectorXd row(sh_count(L));
  for (int k = 0; k < q.size(); ++k) {
    const Eigen::MatrixXd P = normalized_legendre_all(L, std::cos(q.theta[k]));
    fill_point(L, P, q.phi[k], row);
    Y.row(k) = row;
  }
  return Y;
}

SphericalSignal analyze(const Eigen::VectorXd& samples,
                        const SphereQuadrature& q, int L) {
  if (samples.size() != q.size()) {
    throw std::invalid_argument(
        "analyze: sample count does not match the quadrature node count");
  }
  if (q.bandlimit < L) {
    throw std::invalid_argument(
        "analyze: quadrature bandlimit is below the requested bandlimit");
  }
  const Eigen::MatrixXd Y = sh_basis_matrix(L, q);
  SphericalSignal s;
  s.bandlimit = L;
  s.coeffs = Y.transpose() * (q.weight.array() * samples.array()).matrix();
  return s;
}

Eigen::VectorXd synthesize(const SphericalSignal& s,
                           const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& phi) {
  if (theta.size() != phi.size()) {
    throw std::invalid_argument("synthesize: theta/phi length mismatch");
  }
  Eigen::VectorXd out(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    out[k] = real_sh_point(s.bandlimit, theta[k], phi[k]).dot(s.coeffs);
  }
  return out;
}

Eigen::MatrixXd matrix_elements_oracle(int l, const EulerZYZ& g,
                                       const SphereQuadrature& q) {
  const Mat3 R = to_rotation_matrix(g);
  // g^{-1} p = R^T p for the active convention.
  return mapped_gram(l, q, [&R](const Eigen::Vector3d& p) -> Eigen::Vector3d {
    return R.transpose() * p;
  });
}

Eigen::MatrixXd axis_exchange_oracle(int l, const SphereQuadrature& q) {
  return mapped_gram(l, q, [](const Eigen::Vector3d& p) -> Eigen::Vector3d {
    return {p.x(), p.z(), p.y()};
  });
}

}  // namespace so3rep
