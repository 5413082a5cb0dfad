#include "core/stats.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "core/errors.hpp"
#include "core/euler.hpp"

namespace so3rep {

namespace {

using Cplx = std::complex<double>;

// Unitary DFT of a real grid signal; bin k of n.
Eigen::VectorXcd unitary_dft(const Eigen::VectorXd& tau) {
  const int n = static_cast<int>(tau.size());
  Eigen::VectorXcd out(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    Cplx acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * j * k / n;
      acc += tau[j] * Cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = scale * acc;
  }
  return out;
}

// Signed frequency representative of DFT bin k (k <= n/2 maps to k,
// otherwise k - n); this is the frequency with which the bin moves under a
// rotation of the underlying bandlimited circle signal.
inline int signed_frequency(int k, int n) { return 2 * k <= n ? k : k - n; }

}  // namespace

CovarianceReport circle_covariance(const Eigen::VectorXd& tau, int n_theta) {
  const int n = static_cast<int>(tau.size());
  if (n < 1) throw std::invalid_argument("circle_covariance: empty signal");
  if (n_theta < n) {
    throw std::invalid_argument(
        "circle_covariance: n_theta must be >= n for exact grid integration");
  }

  const Eigen::VectorXcd tau_hat = unitary_dft(tau);
  Eigen::MatrixXcd moment = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd x(n);
  for (int t = 0; t < n_theta; ++t) {
    const double theta = 2.0 * M_PI * t / n_theta;
    for (int k = 0; k < n; ++k) {
      const double ang = -signed_frequency(k, n) * theta;
      x[k] = Cplx(std::cos(ang), std::sin(ang)) * tau_hat[k];
    }
    moment.noalias() += x * x.adjoint();
  }
  moment /= static_cast<double>(n_theta);

  CovarianceReport report;
  report.matrix = moment.real();
  report.predicted_diag = tau_hat.cwiseAbs2();
  report.n_samples = n_theta;
  report.max_offdiag = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (r != c) {
        report.max_offdiag = std::max(report.max_offdiag, std::abs(moment(r, c)));
      }
    }
  }
  return report;
}

CovarianceReport orbit_covariance_mc(const JTable& jt, const RepSpec& spec,
                                     const Eigen::VectorXd& tau, long long N,
                                     RngStream& rng) {
  if (N < 1) throw std::invalid_argument("orbit_covariance_mc: N must be >= 1");
  if (tau.size() != spec.dim()) {
    throw std::invalid_argument(
        "orbit_covariance_mc: template length does not match the "
        "representation dimension");
  }
  const int d = spec.dim();
  const int n_batches = static_cast<int>(std::min<long long>(20, N));
  std::vector<Eigen::MatrixXd> acc(
      n_batches, Eigen::MatrixXd::Zero(d, d));
  std::vector<long long> count(n_batches, 0);

  for (long long i = 0; i < N; ++i) {
    const EulerZYZ g = haar_sample(rng);
    const Eigen::VectorXd x = block_apply(jt, spec, g, tau);
    const int b = static_cast<int>(i % n_batches);
    acc[b].noalias() += x * x.transpose();
    ++count[b];
  }

  CovarianceReport report;
  report.n_samples = N;
  report.matrix = Eigen::MatrixXd::Zero(d, d);
  for (const Eigen::MatrixXd& a : acc) report.matrix += a;
  report.matrix /= static_cast<double>(N);

  report.predicted_diag.resize(d);
  for (int b = 0; b < spec.block_count(); ++b) {
    const int off = spec.block_offset(b);
    const int bd = spec.block_dim(b);
    const double value = tau.segment(off, bd).squaredNorm() / bd;
    report.predicted_diag.segment(off, bd).setConstant(value);
  }

  report.max_offdiag = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      if (r != c) {
        report.max_offdiag =
            std::max(report.max_offdiag, std::abs(report.matrix(r, c)));
      }
    }
  }

  if (n_batches >= 2) {
    // Round-robin batch assignment keeps batch sizes within one of each
    // other; treating them as equal in the variance estimate is a negligible
    // approximation at the sample counts used here.
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXd> means;
    means.reserve(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      means.push_back(acc[b] / static_cast<double>(count[b]));
      mean += means.back();
    }
    mean /= static_cast<double>(n_batches);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
    for (const Eigen::MatrixXd& m : means) {
      var += (m - mean).cwiseAbs2();
    }
    var /= static_cast<double>(n_batches - 1);
    report.stderr_matrix =
        (var / static_cast<double>(n_batches)).cwiseSqrt();
  }
  return report;
}

double schur_orthogonality_check(const JTable& jt, int l, int l_prime,
                                 long long N, RngStream& rng) {
  if (N < 1) {
    throw std::invalid_argument("schur_orthogonality_check: N must be >= 1");
  }
  const int d1 = 2 * l + 1;
  const int d2 = 2 * l_prime + 1;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d1 * d1, d2 * d2);
  for (long long i = 0; i < N; ++i) {
    const EulerZYZ g = haar_sample(rng);
    const Eigen::MatrixXd t1 = wigner_matrix(jt, l, g);
    const Eigen::Map<const Eigen::VectorXd> v1(t1.data(), d1 * d1);
    if (l_prime == l) {
      acc.noalias() += v1 * v1.transpose();
    } else {
      const Eigen::MatrixXd t2 = wigner_matrix(jt, l_prime, g);
      const Eigen::Map<const Eigen::VectorXd> v2(t2.data(), d2 * d2);
      acc.noalias() += v1 * v2.transpose();
    }
  }
  acc /= static_cast<double>(N);
  if (l_prime == l) {
    // Same weight: <T_mn, T_m'n'> = delta_mm' delta_nn' / (2l+1), which in
    // the vectorized index pair is the scaled identity.
    acc.diagonal().array() -= 1.0 / d1;
  }
  return acc.cwiseAbs().maxCoeff();
}

namespace {

// One irreducible component of a real circle signal: the constant (f = 0,
// one coordinate) or a cos/sin pair (0 < f < n/2, two coordinates) expressed
// in an orthonormal grid basis, so isotropic spatial noise stays isotropic.
struct CircleBlock {
  int frequency = 0;
  Eigen::VectorXd u_tau;  // template coordinates (size 1 or 2)
};

Eigen::VectorXd rotate_block(const CircleBlock& blk, double theta) {
  if (blk.frequency == 0) return blk.u_tau;
  const double c = std::cos(blk.frequency * theta);
  const double s = std::sin(blk.frequency * theta);
  Eigen::VectorXd out(2);
  out[0] = c * blk.u_tau[0] - s * blk.u_tau[1];
  out[1] = s * blk.u_tau[0] + c * blk.u_tau[1];
  return out;
}

double gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        double sigma) {
  const double d2 = (x - mean).squaredNorm();
  const double norm =
      std::pow(2.0 * M_PI * sigma * sigma, -0.5 * x.size());
  return norm * std::exp(-d2 / (2.0 * sigma * sigma));
}

struct FactorizationGrid {
  Eigen::VectorXd joint;
  Eigen::VectorXd product;
  Eigen::MatrixXd block_marginals;
};

FactorizationGrid evaluate_factorization(
    const std::vector<CircleBlock>& blocks,
    const std::vector<Eigen::VectorXd>& probes, double sigma, int n_quad) {
  const int n_probes = static_cast<int>(probes.size());
  const int n_blocks = static_cast<int>(blocks.size());
  FactorizationGrid out;
  out.joint.resize(n_probes);
  out.product.resize(n_probes);
  out.block_marginals.resize(n_probes, n_blocks);

  for (int p = 0; p < n_probes; ++p) {
    // Per-block density tables over the angle grid for this probe.
    std::vector<Eigen::VectorXd> table(n_blocks);
    int coord = 0;
    for (int b = 0; b < n_blocks; ++b) {
      const int dim = static_cast<int>(blocks[b].u_tau.size());
      const Eigen::VectorXd u = probes[p].segment(coord, dim);
      coord += dim;
      table[b].resize(n_quad);
      for (int i = 0; i < n_quad; ++i) {
        const double theta = 2.0 * M_PI * i / n_quad;
        table[b][i] = gaussian_density(u, rotate_block(blocks[b], theta), sigma);
      }
      out.block_marginals(p, b) = table[b].mean();
    }

    double product = 1.0;
    for (int b = 0; b < n_blocks; ++b) product *= out.block_marginals(p, b);
    out.product[p] = product;

    if (n_blocks == 1) {
      out.joint[p] = out.block_marginals(p, 0);
    } else {
      // Literal accumulation over the full product grid of per-block angles.
      double joint = 0.0;
      for (int i = 0; i < n_quad; ++i) {
        for (int j = 0; j < n_quad; ++j) {
          joint += table[0][i] * table[1][j];
        }
      }
      out.joint[p] = joint / (static_cast<double>(n_quad) * n_quad);
    }
  }
  return out;
}

}  // namespace

FactorizationReport conditional_factorization_check(
    const Eigen::VectorXd& tau_prev, double sigma, int n_quad, int n_probes,
    RngStream& rng) {
  const int n = static_cast<int>(tau_prev.size());
  if (n < 2) {
    throw std::invalid_argument(
        "conditional_factorization_check: signal too short");
  }
  if (sigma <= 0.0) {
    throw std::invalid_argument(
        "conditional_factorization_check: sigma must be positive");
  }
  if (n_quad < 4 || n_probes < 1) {
    throw std::invalid_argument(
        "conditional_factorization_check: bad grid or probe count");
  }

  // Decompose the template into orthonormal frequency blocks and keep the
  // ones that actually carry energy.
  const double amp_threshold = 1e-9 * std::max(1.0, tau_prev.norm());
  std::vector<CircleBlock> blocks;
  for (int f = 0; 2 * f <= n; ++f) {
    if (f == 0) {
      const double u = tau_prev.sum() / std::sqrt(static_cast<double>(n));
      if (std::abs(u) > amp_threshold) {
        blocks.push_back({0, Eigen::VectorXd::Constant(1, u)});
      }
      continue;
    }
    if (2 * f == n) {
      // Nyquist pair member is missing: this component cannot be rotated
      // within the sampled space, so signals carrying it are rejected.
      double u = 0.0;
      for (int j = 0; j < n; ++j) {
        u += tau_prev[j] * (j % 2 == 0 ? 1.0 : -1.0);
      }
      u /= std::sqrt(static_cast<double>(n));
      if (std::abs(u) > amp_threshold) {
        throw std::invalid_argument(
            "conditional_factorization_check: signal has energy at the "
            "Nyquist frequency, which has no rotation within the grid space");
      }
      continue;
    }
    const double scale = std::sqrt(2.0 / n);
    Eigen::VectorXd u(2);
    u.setZero();
    for (int j = 0; j < n; ++j) {
      const double ang = 2.0 * M_PI * f * j / n;
      u[0] += tau_prev[j] * scale * std::cos(ang);
      u[1] += tau_prev[j] * scale * std::sin(ang);
    }
    if (u.norm() > amp_threshold) {
      blocks.push_back({f, u});
    }
  }
  if (blocks.empty()) {
    throw std::invalid_argument(
        "conditional_factorization_check: signal has no active blocks");
  }
  if (blocks.size() > 2) {
    throw std::invalid_argument(
        "conditional_factorization_check: more than two active blocks; the "
        "joint product grid would be exponential in the block count");
  }

  // Draw probes from the generative model itself so densities are evaluated
  // where they are well scaled: independent angle per block, then noise.
  int total_dim = 0;
  for (const CircleBlock& b : blocks) {
    total_dim += static_cast<int>(b.u_tau.size());
  }
  std::vector<Eigen::VectorXd> probes;
  probes.reserve(n_probes);
  for (int p = 0; p < n_probes; ++p) {
    Eigen::VectorXd x(total_dim);
    int coord = 0;
    for (const CircleBlock& b : blocks) {
      const double theta = 2.0 * M_PI * rng.uniform();
      const Eigen::VectorXd mean = rotate_block(b, theta);
      for (int k = 0; k < mean.size(); ++k) {
        x[coord + k] = mean[k] + sigma * rng.normal();
      }
      coord += static_cast<int>(mean.size());
    }
    probes.push_back(std::move(x));
  }

  const FactorizationGrid base =
      evaluate_factorization(blocks, probes, sigma, n_quad);
  const FactorizationGrid fine =
      evaluate_factorization(blocks, probes, sigma, 2 * n_quad);

  double refinement_gap = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    refinement_gap = std::max(
        refinement_gap, std::abs(fine.joint[p] - base.joint[p]) /
                            std::max(std::abs(fine.joint[p]), 1e-300));
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
      refinement_gap =
          std::max(refinement_gap,
                   std::abs(fine.block_marginals(p, b) -
                            base.block_marginals(p, b)) /
                       std::max(std::abs(fine.block_marginals(p, b)), 1e-300));
    }
  }
  if (refinement_gap > 1e-8) {
    std::ostringstream msg;
    msg << "conditional_factorization_check: quadrature not converged "
        << "(relative refinement gap " << refinement_gap << " at n_quad "
        << n_quad << "; increase the grid)";
    throw NotConverged(msg.str());
  }

  FactorizationReport report;
  report.joint = base.joint;
  report.product = base.product;
  report.block_marginals = base.block_marginals;
  report.refinement_gap = refinement_gap;
  report.max_rel_gap = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    report.max_rel_gap =
        std::max(report.max_rel_gap,
                 std::abs(report.joint[p] - report.product[p]) /
                     std::max(report.joint[p], 1e-300));
  }
  return report;
}

}  // namespace so3rep
