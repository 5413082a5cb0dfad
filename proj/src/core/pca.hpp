#pragma once

#include <Eigen/Dense>

namespace so3rep {

// Principal-component whitening for observation matrices (one row per
// observation).  Components are ordered by decreasing eigenvalue of the
// sample covariance (1/(n-1) normalization); directions whose eigenvalue is
// numerically zero are never retained.
struct PcaModel {
  Eigen::VectorXd mean;         // input dimension
  Eigen::MatrixXd components;   // input_dim x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // k, strictly positive, descending

  int input_dim() const { return static_cast<int>(mean.size()); }
  int retained() const { return static_cast<int>(eigenvalues.size()); }

  // Projects rows onto the retained components and scales each coordinate
  // to unit variance: y = diag(1/sqrt(lambda)) V^T (x - mean).
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& rows) const;

  // Inverse map back to the input space (lossy if k < input_dim).
  Eigen::MatrixXd unwhiten(const Eigen::MatrixXd& rows) const;
};

// Fits the model retaining the smallest number of components whose
// cumulative eigenvalue share reaches variance_fraction (in (0, 1]).
// Requires at least two observations.
PcaModel pca_fit(const Eigen::MatrixXd& data, double variance_fraction);

}  // namespace so3rep
