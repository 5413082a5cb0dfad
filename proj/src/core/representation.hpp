#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/wigner.hpp"

namespace so3rep {

// Ordered list of irreducible weights, with repetition encoding multiplicity.
// Defines the block-diagonal rotation operator on latent vectors: slice i of
// length 2*l_i+1 transforms by the weight-l_i rotation matrix, independently
// of every other slice.
class RepSpec {
 public:
  RepSpec() = default;
  explicit RepSpec(std::vector<int> weights);

  // Parses the run-length syntax "l:mult,l:mult,...", e.g. "0:2,1:2,2:1".
  // Strict: every token must be two non-negative integers with mult >= 1;
  // anything else throws std::invalid_argument with a diagnostic.
  static RepSpec parse(const std::string& text);

  // Run-length re-encoding of the block list (inverse of parse up to
  // adjacent-duplicate grouping).
  std::string to_string() const;

  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(weights_.size()); }
  int block_weight(int i) const { return weights_.at(i); }
  int block_offset(int i) const { return offsets_.at(i); }
  int block_dim(int i) const { return 2 * weights_.at(i) + 1; }
  int max_weight() const;
  const std::vector<int>& weights() const { return weights_; }

 private:
  std::vector<int> weights_;
  std::vector<int> offsets_;
  int dim_ = 0;
};

// Applies the block-diagonal rotation to a full latent vector.  Norm
// preserving per block; O(sum l_i^2).
Eigen::VectorXd block_apply(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g, const Eigen::VectorXd& z);

// Partial derivatives of block_apply with respect to the three Euler angles
// (per-block Jacobian-vector products, concatenated).
EulerJacobian block_apply_jacobian(const JTable& jt, const RepSpec& spec,
                                   const EulerZYZ& g,
                                   const Eigen::VectorXd& z);

// Dense assembly of the block-diagonal operator; test/oracle path only.
Eigen::MatrixXd block_dense(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g);

}  // namespace so3rep
