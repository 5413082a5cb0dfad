#include "core/wigner.hpp"

#include "core/errors.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace so3rep {

static_assert(std::endian::native == std::endian::little,
              "binary table formats assume a little-endian host");
static_assert(sizeof(double) == 8, "binary table formats assume 64-bit IEEE");

namespace {

void check_length(int l, Eigen::Index n, const char* who) {
  if (n != 2 * l + 1) {
    std::ostringstream msg;
    msg << who << ": vector length " << n << " does not match 2l+1 = "
        << 2 * l + 1;
    throw std::invalid_argument(msg.str());
  }
}

// One weight-l block of the (x,z,y) axis exchange; see the class comment in
// the header for the construction.
Eigen::MatrixXd build_axis_exchange_block(int l) {
  using Cplx = std::complex<double>;
  const int dim = 2 * l + 1;

  // Generator of rotations about x in the complex basis |l, m>, m = -l..l:
  // real symmetric tridiagonal with entries sqrt((l-m)(l+m+1))/2.
  Eigen::MatrixXd Lx = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) {
    const int m = i - l;
    const double c = std::sqrt(static_cast<double>(l - m) * (l + m + 1)) / 2.0;
    Lx(i + 1, i) = c;
    Lx(i, i + 1) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lx);
  const Eigen::MatrixXd& U = es.eigenvectors();

  // Quarter turn about x: exp(-i (pi/2) Lx).  The eigenvalues of Lx are the
  // integers -l..l up to round-off; snapping them keeps the phases exact.
  Eigen::VectorXcd phase(dim);
  for (int i = 0; i < dim; ++i) {
    const double mu = std::round(es.eigenvalues()[i]);
    phase[i] = std::exp(Cplx(0.0, -M_PI / 2.0 * mu));
  }
  Eigen::MatrixXcd D =
      U.cast<Cplx>() * phase.asDiagonal() * U.transpose().cast<Cplx>();

  // Unitary change of basis, real = C * complex, matching the library's real
  // harmonic convention (m < 0 rows are the sin components, no
  // Condon-Shortley phase).
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(dim, dim);
  C(l, l) = 1.0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int m = 1; m <= l; ++m) {
    const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
    C(l + m, l + m) = sgn * inv_sqrt2;
    C(l + m, l - m) = inv_sqrt2;
    C(l - m, l + m) = Cplx(0.0, -sgn * inv_sqrt2);
    C(l - m, l - m) = Cplx(0.0, inv_sqrt2);
  }
  const Eigen::MatrixXcd Dr_c = C.conjugate() * D * C.transpose();
  if (Dr_c.imag().cwiseAbs().maxCoeff() > 1e-10) {
    throw std::runtime_error(
        "axis-exchange construction produced a non-real block");
  }
  Eigen::MatrixXd Dr = Dr_c.real();

  // The quarter turn about x maps (x,y,z) -> (x,z,-y); composing with the
  // reflection that negates the sin rows turns it into the proper exchange
  // (x,y,z) -> (x,z,y).
  Eigen::MatrixXd J = Dr;
  for (int m = 1; m <= l; ++m) J.row(l - m) *= -1.0;

  // Project onto the nearest symmetric orthogonal involution: symmetrize,
  // then replace the eigenvalues (all within round-off of +-1) by their
  // signs.
  Eigen::MatrixXd S = 0.5 * (J + J.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(S);
  Eigen::VectorXd signs(dim);
  for (int i = 0; i < dim; ++i) {
    signs[i] = es2.eigenvalues()[i] >= 0.0 ? 1.0 : -1.0;
  }
  J = es2.eigenvectors() * signs.asDiagonal() * es2.eigenvectors().transpose();
  return 0.5 * (J + J.transpose());
}

}  // namespace

void tz_apply(int l, double alpha, const double* x, double* out) {
  const int c = l;
  out[c] = x[c];
  for (int m = 1; m <= l; ++m) {
    const double cm = std::cos(m * alpha);
    const double sm = std::sin(m * alpha);
    const double xn = x[c - m];
    const double xp = x[c + m];
    out[c - m] = cm * xn + sm * xp;
    out[c + m] = -sm * xn + cm * xp;
  }
}

Eigen::VectorXd tz_apply(int l, double alpha, const Eigen::VectorXd& x) {
  check_length(l, x.size(), "tz_apply");
  Eigen::VectorXd out(x.size());
  tz_apply(l, alpha, x.data(), out.data());
  return out;
}

void dtz_apply(int l, double alpha, const double* x, double* out) {
  const int c = l;
  out[c] = 0.0;
  for (int m = 1; m <= l; ++m) {
    const double cm = std::cos(m * alpha);
    const double sm = std::sin(m * alpha);
    const double xn = x[c - m];
    const double xp = x[c + m];
    out[c - m] = m * (-sm * xn + cm * xp);
    out[c + m] = m * (-cm * xn - sm * xp);
  }
}

Eigen::MatrixXd tz_matrix(int l, double alpha) {
  if (l < 0) throw std::invalid_argument("tz_matrix: l must be >= 0");
  const int dim = 2 * l + 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
  T(l, l) = 1.0;
  for (int m = 1; m <= l; ++m) {
    const double cm = std::cos(m * alpha);
    const double sm = std::sin(m * alpha);
    T(l - m, l - m) = cm;
    T(l - m, l + m) = sm;
    T(l + m, l - m) = -sm;
    T(l + m, l + m) = cm;
  }
  return T;
}

JTable::JTable(int l_max) {
  if (l_max < 0) throw std::invalid_argument("JTable: l_max must be >= 0");
  blocks_.reserve(l_max + 1);
  for (int l = 0; l <= l_max; ++l) {
    blocks_.push_back(build_axis_exchange_block(l));
  }
}

const Eigen::MatrixXd& JTable::j(int l) const {
  if (l < 0 || l > l_max()) {
    std::ostringstream msg;
    msg << "JTable: weight " << l << " exceeds the built table (l_max "
        << l_max() << ")";
    throw std::out_of_range(msg.str());
  }
  return blocks_[static_cast<std::size_t>(l)];
}

void JTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("JTable::save: cannot open " + path);
  char header[64];
  std::snprintf(header, sizeof(header), "JTABLE v1 L=%d\n", l_max());
  out.write(header, static_cast<std::streamsize>(std::strlen(header)));
  for (const Eigen::MatrixXd& block : blocks_) {
    // Blocks are stored row-major regardless of Eigen's in-memory layout.
    const Eigen::MatrixXd rm = block.transpose();
    out.write(reinterpret_cast<const char*>(rm.data()),
              static_cast<std::streamsize>(sizeof(double) * rm.size()));
  }
  if (!out) throw IoError("JTable::save: write failed for " + path);
}

JTable JTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("JTable::load: cannot open " + path);
  std::string header;
  std::getline(in, header);
  int l_max = -1;
  if (std::sscanf(header.c_str(), "JTABLE v1 L=%d", &l_max) != 1 || l_max < 0) {
    throw IoError("JTable::load: bad header in " + path);
  }
  JTable jt;
  jt.blocks_.reserve(l_max + 1);
  for (int l = 0; l <= l_max; ++l) {
    const int dim = 2 * l + 1;
    Eigen::MatrixXd rm(dim, dim);
    in.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rm.size()));
    if (!in) {
      throw IoError("JTable::load: truncated table in " + path);
    }
    jt.blocks_.push_back(rm.transpose());
  }
  return jt;
}

Eigen::MatrixXd wigner_matrix(const JTable& jt, int l, const EulerZYZ& g) {
  const Eigen::MatrixXd& J = jt.j(l);
  const int dim = 2 * l + 1;
  Eigen::MatrixXd M = J * tz_matrix(l, g.g1);
  // Apply T_z(-g2) to every column, then the second J, then T_z(g3).
  for (int c = 0; c < dim; ++c) {
    tz_apply(l, -g.g2, M.col(c).data(), M.col(c).data());
  }
  M = J * M;
  for (int c = 0; c < dim; ++c) {
    tz_apply(l, g.g3, M.col(c).data(), M.col(c).data());
  }
  return M;
}

Eigen::VectorXd wigner_apply(const JTable& jt, int l, const EulerZYZ& g,
                             const Eigen::VectorXd& x) {
  check_length(l, x.size(), "wigner_apply");
  const Eigen::MatrixXd& J = jt.j(l);
  Eigen::VectorXd v = tz_apply(l, g.g1, x);
  v = J * v;
  tz_apply(l, -g.g2, v.data(), v.data());
  v = J * v;
  tz_apply(l, g.g3, v.data(), v.data());
  return v;
}

EulerJacobian wigner_apply_jacobian(const JTable& jt, int l, const EulerZYZ& g,
                                    const Eigen::VectorXd& x) {
  check_length(l, x.size(), "wigner_apply_jacobian");
  const Eigen::MatrixXd& J = jt.j(l);
  const int dim = 2 * l + 1;

  // Stage the shared intermediates once:
  //   a  = T_z(g1) x
  //   b  = J a
  //   c  = T_z(-g2) b
  //   d  = J c            (and the result would be T_z(g3) d).
  Eigen::VectorXd a = tz_apply(l, g.g1, x);
  Eigen::VectorXd b = J * a;
  Eigen::VectorXd c(dim);
  tz_apply(l, -g.g2, b.data(), c.data());
  Eigen::VectorXd d = J * c;

  EulerJacobian jac;
  Eigen::VectorXd tmp(dim);

  // d/d g1: differentiate the innermost factor, push through the rest.
  dtz_apply(l, g.g1, x.data(), tmp.data());
  Eigen::VectorXd t = J * tmp;
  tz_apply(l, -g.g2, t.data(), t.data());
  t = J * t;
  tz_apply(l, g.g3, t.data(), t.data());
  jac.d_g1 = t;

  // d/d g2: the middle factor is T_z(-g2), so the chain rule contributes a
  // minus sign on its angle derivative.
  dtz_apply(l, -g.g2, b.data(), tmp.data());
  t = J * (-tmp);
  tz_apply(l, g.g3, t.data(), t.data());
  jac.d_g2 = t;

  // d/d g3: differentiate the outermost factor only.
  dtz_apply(l, g.g3, d.data(), tmp.data());
  jac.d_g3 = tmp;
  return jac;
}

}  // namespace so3rep
