#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace so3rep {

namespace {

double rel_discrepancy(double analytic, double numeric, double magnitude) {
  const double denom = std::max(
      {std::abs(analytic), std::abs(numeric), 1e-2 * magnitude, 1e-12});
  return std::abs(analytic - numeric) / denom;
}

// Worst relative discrepancy between an analytic vector and its
// finite-difference counterpart.
double compare_vectors(const Eigen::VectorXd& analytic,
                       const Eigen::VectorXd& numeric) {
  const double magnitude = analytic.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, rel_discrepancy(analytic(i), numeric(i),
                                            magnitude));
  }
  return worst;
}

}  // namespace

double check_rotation_jacobian(const JTable& jt, int l, const EulerZYZ& g,
                               const Eigen::VectorXd& x, double h) {
  const EulerJacobian jac = wigner_apply_jacobian(jt, l, g, x);
  const Eigen::VectorXd* analytic[3] = {&jac.d_g1, &jac.d_g2, &jac.d_g3};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    EulerZYZ plus = g, minus = g;
    double* pa[3] = {&plus.g1, &plus.g2, &plus.g3};
    double* ma[3] = {&minus.g1, &minus.g2, &minus.g3};
    *pa[k] += h;
    *ma[k] -= h;
    const Eigen::VectorXd numeric =
        (wigner_apply(jt, l, plus, x) - wigner_apply(jt, l, minus, x)) /
        (2.0 * h);
    worst = std::max(worst, compare_vectors(*analytic[k], numeric));
  }
  return worst;
}

double check_block_jacobian(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g, const Eigen::VectorXd& z,
                            double h) {
  const EulerJacobian jac = block_apply_jacobian(jt, spec, g, z);
  const Eigen::VectorXd* analytic[3] = {&jac.d_g1, &jac.d_g2, &jac.d_g3};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    EulerZYZ plus = g, minus = g;
    double* pa[3] = {&plus.g1, &plus.g2, &plus.g3};
    double* ma[3] = {&minus.g1, &minus.g2, &minus.g3};
    *pa[k] += h;
    *ma[k] -= h;
    const Eigen::VectorXd numeric =
        (block_apply(jt, spec, plus, z) - block_apply(jt, spec, minus, z)) /
        (2.0 * h);
    worst = std::max(worst, compare_vectors(*analytic[k], numeric));
  }
  return worst;
}

double check_decoder_jvp(const DecoderParams& params, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& dir, double h) {
  const Eigen::VectorXd analytic = decode_jvp(params, z, dir);
  const Eigen::VectorXd numeric =
      (decode(params, z + h * dir) - decode(params, z - h * dir)) / (2.0 * h);
  return compare_vectors(analytic, numeric);
}

double check_log_joint_gradients(const JTable& jt, const RepSpec& spec,
                                 const ViewSet& X,
                                 const std::vector<EulerZYZ>& G,
                                 const Eigen::VectorXd& z,
                                 const DecoderParams& params,
                                 const HyperParams& hp, double h) {
  const ModelGrads grads = grad_log_joint(jt, spec, X, G, z, params, hp);
  double worst = 0.0;

  // Collect every analytic coordinate to scale the discrepancy floor.
  double magnitude = grads.d_z.cwiseAbs().maxCoeff();
  magnitude = std::max(magnitude, grads.d_W1.cwiseAbs().maxCoeff());
  magnitude = std::max(magnitude, grads.d_b1.cwiseAbs().maxCoeff());
  magnitude = std::max(magnitude, grads.d_W2.cwiseAbs().maxCoeff());
  magnitude = std::max(magnitude, grads.d_b2.cwiseAbs().maxCoeff());
  magnitude = std::max(magnitude, std::abs(grads.d_ln_sigma));
  for (const auto& dg : grads.d_g) {
    for (double v : dg) {
      magnitude = std::max(magnitude, std::abs(v));
    }
  }

  auto check_scalar = [&](double analytic, double plus_value,
                          double minus_value) {
    const double numeric = (plus_value - minus_value) / (2.0 * h);
    worst = std::max(worst, rel_discrepancy(analytic, numeric, magnitude));
  };

  // z coordinates.
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    check_scalar(grads.d_z(i), log_joint(jt, spec, X, G, zp, params, hp),
                 log_joint(jt, spec, X, G, zm, params, hp));
  }

  // Euler angles of every view.
  for (std::size_t v = 0; v < G.size(); ++v) {
    for (int k = 0; k < 3; ++k) {
      std::vector<EulerZYZ> Gp = G, Gm = G;
      double* pa[3] = {&Gp[v].g1, &Gp[v].g2, &Gp[v].g3};
      double* ma[3] = {&Gm[v].g1, &Gm[v].g2, &Gm[v].g3};
      *pa[k] += h;
      *ma[k] -= h;
      check_scalar(grads.d_g[v][static_cast<std::size_t>(k)],
                   log_joint(jt, spec, X, Gp, z, params, hp),
                   log_joint(jt, spec, X, Gm, z, params, hp));
    }
  }

  // Decoder tensors, perturbed in a mutable copy.
  DecoderParams p = params;
  auto check_params_matrix = [&](const Eigen::MatrixXd& analytic,
                                 Eigen::MatrixXd& target) {
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      for (Eigen::Index r = 0; r < target.rows(); ++r) {
        const double saved = target(r, c);
        target(r, c) = saved + h;
        const double plus = log_joint(jt, spec, X, G, z, p, hp);
        target(r, c) = saved - h;
        const double minus = log_joint(jt, spec, X, G, z, p, hp);
        target(r, c) = saved;
        check_scalar(analytic(r, c), plus, minus);
      }
    }
  };
  auto check_params_vector = [&](const Eigen::VectorXd& analytic,
                                 Eigen::VectorXd& target) {
    for (Eigen::Index r = 0; r < target.size(); ++r) {
      const double saved = target(r);
      target(r) = saved + h;
      const double plus = log_joint(jt, spec, X, G, z, p, hp);
      target(r) = saved - h;
      const double minus = log_joint(jt, spec, X, G, z, p, hp);
      target(r) = saved;
      check_scalar(analytic(r), plus, minus);
    }
  };
  check_params_matrix(grads.d_W1, p.W1);
  check_params_vector(grads.d_b1, p.b1);
  check_params_matrix(grads.d_W2, p.W2);
  check_params_vector(grads.d_b2, p.b2);

  {
    const double saved = p.ln_sigma_x;
    p.ln_sigma_x = saved + h;
    const double plus = log_joint(jt, spec, X, G, z, p, hp);
    p.ln_sigma_x = saved - h;
    const double minus = log_joint(jt, spec, X, G, z, p, hp);
    p.ln_sigma_x = saved;
    check_scalar(grads.d_ln_sigma, plus, minus);
  }

  return worst;
}

}  // namespace so3rep
