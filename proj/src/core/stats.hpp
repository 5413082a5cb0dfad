#pragma once

#include <Eigen/Dense>

#include "core/representation.hpp"
#include "core/rng.hpp"

namespace so3rep {

// Empirical verification of the decorrelation/orthogonality theory: when a
// fixed template is pushed around its orbit by uniformly distributed group
// elements, the second moment of the transformed coordinates is diagonal,
// with each irreducible block contributing an equal diagonal value
// ||tau_block||^2 / block_dim.

struct CovarianceReport {
  // Raw (not mean-centered) second-moment estimate E[x x^T]; symmetric.
  Eigen::MatrixXd matrix;
  // Theory prediction for the diagonal.
  Eigen::VectorXd predicted_diag;
  // Largest off-diagonal magnitude of the estimate.
  double max_offdiag = 0.0;
  long long n_samples = 0;
  // Batch-means standard error of each matrix entry (20 batches); empty when
  // there are fewer than 2 batches.  Gives distribution-free 3-sigma bands
  // for Monte-Carlo acceptance tests.
  Eigen::MatrixXd stderr_matrix;
};

// Circle-group analogue on a deterministic rotation grid.
//
// tau is a real signal on n equispaced circle points.  Its unitary DFT
// tau_hat is rotated through n_theta uniformly spaced angles (rotation
// multiplies bin k by exp(-i * f_k * theta) with f_k the signed frequency
// representative), and the Hermitian second moment (1/n_theta) sum x x^H is
// accumulated.  Because the grid integrates trigonometric polynomials of
// these degrees exactly, the off-diagonals vanish to round-off and the
// diagonal equals |tau_hat_k|^2 exactly.  The report stores the real part of
// the moment; max_offdiag is the largest complex modulus off the diagonal.
// Requires n_theta >= n.
CovarianceReport circle_covariance(const Eigen::VectorXd& tau, int n_theta);

// Monte-Carlo second moment of block_apply(spec, g, tau) over N uniformly
// random rotations.  predicted_diag holds ||tau_block||^2 / (2l+1) replicated
// across each block.
CovarianceReport orbit_covariance_mc(const JTable& jt, const RepSpec& spec,
                                     const Eigen::VectorXd& tau, long long N,
                                     RngStream& rng);

// Monte-Carlo estimate of the inner products <T^l_mn, T^l'_m'n'> over the
// uniform measure, for all index tuples, returning the worst absolute
// deviation from delta_ll' delta_mm' delta_nn' / (2l+1).
double schur_orthogonality_check(const JTable& jt, int l, int l_prime,
                                 long long N, RngStream& rng);

// Conditional-independence factorization check for commutative groups.
//
// tau_prev is a real circle signal on n grid points.  Its nonzero-frequency
// content is grouped into irreducible blocks (frequency f: the 2-dimensional
// cos/sin pair for 0 < f < n/2; f = 0 is the 1-dimensional constant).  Each
// block is rotated by its own independent uniform angle -- the torus action
// under which the marginalized conditional provably factorizes -- and
// corrupted with isotropic Gaussian noise of scale sigma:
//
//   p(x | tau) = integral over the angle torus of
//                prod_b Normal(x_b | Rot_b(theta_b) tau_b, sigma^2 I).
//
// The joint density is evaluated by literal accumulation over the full
// product angle grid (n_quad per axis) and compared with the product of the
// one-dimensional per-block marginals at probe points drawn from the model.
// Restricted to at most two active blocks (the product grid grows
// exponentially); signals with energy at the Nyquist frequency n/2 are
// rejected because that component cannot be rotated inside the grid space.
//
// The quadrature is re-run at 2*n_quad; if any reported density moves by a
// relative 1e-8 the check throws NotConverged instead of returning
// unconverged numbers.
struct FactorizationReport {
  Eigen::VectorXd joint;             // per probe
  Eigen::VectorXd product;           // per probe, prod of block marginals
  Eigen::MatrixXd block_marginals;   // n_probes x n_blocks
  double max_rel_gap = 0.0;          // max |joint - product| / joint
  double refinement_gap = 0.0;       // worst relative move under refinement
};

FactorizationReport conditional_factorization_check(
    const Eigen::VectorXd& tau_prev, double sigma, int n_quad, int n_probes,
    RngStream& rng);

}  // namespace so3rep
