#include "core/pca.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace so3rep {

Eigen::MatrixXd PcaModel::whiten(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) {
    throw std::invalid_argument("whiten: input dimension mismatch");
  }
  Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  Eigen::MatrixXd projected = centered * components;
  for (Eigen::Index j = 0; j < projected.cols(); ++j) {
    projected.col(j) /= std::sqrt(eigenvalues(j));
  }
  return projected;
}

Eigen::MatrixXd PcaModel::unwhiten(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != eigenvalues.size()) {
    throw std::invalid_argument("unwhiten: component count mismatch");
  }
  Eigen::MatrixXd scaled = rows;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    scaled.col(j) *= std::sqrt(eigenvalues(j));
  }
  return (scaled * components.transpose()).rowwise() + mean.transpose();
}

PcaModel pca_fit(const Eigen::MatrixXd& data, double variance_fraction) {
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw std::invalid_argument("variance fraction must lie in (0, 1]");
  }
  if (data.rows() < 2) {
    throw std::invalid_argument("PCA needs at least two observations");
  }

  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(data.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("covariance eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  const double max_value = values.size() > 0 ? values(values.size() - 1) : 0.0;
  const double null_threshold = std::max(0.0, max_value) * 1e-12;

  double total = 0.0;
  std::vector<Eigen::Index> keepable;  // descending eigenvalue order
  for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
    if (values(i) > null_threshold && values(i) > 0.0) {
      keepable.push_back(i);
      total += values(i);
    }
  }
  if (keepable.empty()) {
    throw std::runtime_error("data has no variance to whiten");
  }

  std::size_t k = keepable.size();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < keepable.size(); ++i) {
    cumulative += values(keepable[i]);
    if (cumulative >= variance_fraction * total) {
      k = i + 1;
      break;
    }
  }

  model.components.resize(data.cols(), static_cast<Eigen::Index>(k));
  model.eigenvalues.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    model.components.col(static_cast<Eigen::Index>(i)) =
        vectors.col(keepable[i]);
    model.eigenvalues(static_cast<Eigen::Index>(i)) = values(keepable[i]);
  }
  return model;
}

}  // namespace so3rep
