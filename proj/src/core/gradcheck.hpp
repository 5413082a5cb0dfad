#pragma once

#include <vector>

#include <Eigen/Dense>

#include "core/model.hpp"
#include "core/representation.hpp"

namespace so3rep {

// Central-difference validation of every analytic derivative in the library.
// Each check returns the worst relative discrepancy between the analytic
// derivative and a second-order finite difference with step h; discrepancies
// are measured against max(|analytic|, |numeric|, small floor) so that
// near-zero coordinates do not dominate.

// d/dg of the single-weight rotation applied to x (three Euler angles).
double check_rotation_jacobian(const JTable& jt, int l, const EulerZYZ& g,
                               const Eigen::VectorXd& x, double h);

// d/dg of the block-diagonal rotation applied to z.
double check_block_jacobian(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g, const Eigen::VectorXd& z,
                            double h);

// Directional derivative of the decoder along dir.
double check_decoder_jvp(const DecoderParams& params, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& dir, double h);

// Full gradient of the per-instance log joint: every coordinate of z, every
// Euler angle of every view, every decoder parameter, and ln sigma_x.
double check_log_joint_gradients(const JTable& jt, const RepSpec& spec,
                                 const ViewSet& X,
                                 const std::vector<EulerZYZ>& G,
                                 const Eigen::VectorXd& z,
                                 const DecoderParams& params,
                                 const HyperParams& hp, double h);

}  // namespace so3rep
