// C binding for the so3rep core library.  Every entry point validates its
// pointers, translates C++ exceptions into status codes, and records a
// thread-local error message retrievable via so3rep_last_error().

#include "so3rep/so3rep.h"

#include <cstring>
#include <exception>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/euler.hpp"
#include "core/gradcheck.hpp"
#include "core/harmonics.hpp"
#include "core/model.hpp"
#include "core/pca.hpp"
#include "core/quadrature.hpp"
#include "core/representation.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/wigner.hpp"

struct so3rep_rng {
  so3rep::RngStream stream;
};
struct so3rep_jtable {
  so3rep::JTable table;
};
struct so3rep_repspec {
  so3rep::RepSpec spec;
};
struct so3rep_covreport {
  so3rep::CovarianceReport report;
};
struct so3rep_pca {
  so3rep::PcaModel model;
};
struct so3rep_trainer {
  so3rep::Trainer trainer;
};

namespace {

thread_local std::string t_last_error;

int fail(int code, const std::string& message) {
  t_last_error = message;
  return code;
}

// Translates the in-flight exception to a status code.
int caught() {
  try {
    throw;
  } catch (const so3rep::Divergence& e) {
    return fail(SO3REP_EDIVERGED, e.what());
  } catch (const so3rep::NotConverged& e) {
    return fail(SO3REP_ENOCONV, e.what());
  } catch (const so3rep::IoError& e) {
    return fail(SO3REP_EIO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SO3REP_EFAIL, "out of memory");
  } catch (const std::logic_error& e) {  // invalid_argument, out_of_range...
    return fail(SO3REP_EINVAL, e.what());
  } catch (const std::exception& e) {
    return fail(SO3REP_EFAIL, e.what());
  } catch (...) {
    return fail(SO3REP_EFAIL, "unknown error");
  }
}

so3rep::EulerZYZ to_euler(const double g[3]) { return {g[0], g[1], g[2]}; }

void from_euler(const so3rep::EulerZYZ& g, double out[3]) {
  out[0] = g.g1;
  out[1] = g.g2;
  out[2] = g.g3;
}

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

void copy_matrix(const Eigen::MatrixXd& m, double* out) {
  RowMajorMap(out, m.rows(), m.cols()) = m;
}

bool null_arg(const void* p) { return p == nullptr; }

int einval_null() { return fail(SO3REP_EINVAL, "null argument"); }

so3rep::HyperParams to_hyper(const double hyper[5]) {
  so3rep::HyperParams hp;
  if (hyper != nullptr) {
    hp.beta = hyper[0];
    hp.alpha = hyper[1];
    hp.lr_e = hyper[2];
    hp.lr_m = hyper[3];
    hp.adagrad_eps = hyper[4];
  }
  return hp;
}

}  // namespace

extern "C" {

const char* so3rep_last_error(void) { return t_last_error.c_str(); }

/* ------------------------------------------------------------------- rng */

so3rep_rng* so3rep_rng_create(uint64_t seed) {
  try {
    return new so3rep_rng{so3rep::RngStream(seed)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

so3rep_rng* so3rep_rng_create_named(uint64_t master_seed, const char* name) {
  try {
    if (name == nullptr) {
      einval_null();
      return nullptr;
    }
    return new so3rep_rng{so3rep::RngStream(master_seed, name)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

void so3rep_rng_destroy(so3rep_rng* rng) { delete rng; }

int so3rep_rng_next_u64(so3rep_rng* rng, uint64_t* out) {
  if (null_arg(rng) || null_arg(out)) return einval_null();
  try {
    *out = rng->stream.next_u64();
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_rng_uniform(so3rep_rng* rng, double* out) {
  if (null_arg(rng) || null_arg(out)) return einval_null();
  try {
    *out = rng->stream.uniform();
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_rng_normal(so3rep_rng* rng, double* out) {
  if (null_arg(rng) || null_arg(out)) return einval_null();
  try {
    *out = rng->stream.normal();
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ---------------------------------------------------------- Euler angles */

int so3rep_euler_normalize(const double g[3], double out[3]) {
  if (null_arg(g) || null_arg(out)) return einval_null();
  try {
    from_euler(so3rep::normalize_angles(to_euler(g)), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_euler_compose(const double a[3], const double b[3], double out[3]) {
  if (null_arg(a) || null_arg(b) || null_arg(out)) return einval_null();
  try {
    from_euler(so3rep::compose(to_euler(a), to_euler(b)), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_euler_inverse(const double g[3], double out[3]) {
  if (null_arg(g) || null_arg(out)) return einval_null();
  try {
    from_euler(so3rep::inverse(to_euler(g)), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_euler_to_matrix(const double g[3], double out[9]) {
  if (null_arg(g) || null_arg(out)) return einval_null();
  try {
    copy_matrix(so3rep::to_rotation_matrix(to_euler(g)), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_euler_from_matrix(const double m[9], double out[3]) {
  if (null_arg(m) || null_arg(out)) return einval_null();
  try {
    so3rep::Mat3 r = ConstRowMajorMap(m, 3, 3);
    from_euler(so3rep::from_rotation_matrix(r), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_euler_haar(so3rep_rng* rng, double out[3]) {
  if (null_arg(rng) || null_arg(out)) return einval_null();
  try {
    from_euler(so3rep::haar_sample(rng->stream), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_rotation_distance(const double a[3], const double b[3],
                             double* out) {
  if (null_arg(a) || null_arg(b) || null_arg(out)) return einval_null();
  try {
    *out = so3rep::rotation_distance(to_euler(a), to_euler(b));
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* -------------------------------------------- spherical harmonics & quad */

int so3rep_sh_count(int lmax) {
  if (lmax < 0) {
    fail(SO3REP_EINVAL, "band limit must be non-negative");
    return -1;
  }
  return so3rep::sh_count(lmax);
}

int so3rep_real_sh(int l, int m, double theta, double phi, double* out) {
  if (null_arg(out)) return einval_null();
  try {
    *out = so3rep::real_sh(l, m, theta, phi);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_quadrature_size(int lmax, int* n_nodes) {
  if (null_arg(n_nodes)) return einval_null();
  if (lmax < 0) return fail(SO3REP_EINVAL, "band limit must be non-negative");
  *n_nodes = (lmax + 1) * (2 * lmax + 1);
  return SO3REP_OK;
}

int so3rep_quadrature_build(int lmax, double* theta, double* phi,
                            double* weight) {
  if (null_arg(theta) || null_arg(phi) || null_arg(weight)) {
    return einval_null();
  }
  try {
    const so3rep::SphereQuadrature q = so3rep::build_quadrature(lmax);
    for (int i = 0; i < q.size(); ++i) {
      theta[i] = q.theta(i);
      phi[i] = q.phi(i);
      weight[i] = q.weight(i);
    }
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_sh_analyze(int lmax, int n_nodes, const double* samples,
                      double* coeffs) {
  if (null_arg(samples) || null_arg(coeffs)) return einval_null();
  try {
    const so3rep::SphereQuadrature q = so3rep::build_quadrature(lmax);
    if (n_nodes != q.size()) {
      return fail(SO3REP_EINVAL, "sample count does not match the quadrature");
    }
    Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(samples, n_nodes);
    const so3rep::SphericalSignal sig = so3rep::analyze(s, q, lmax);
    Eigen::Map<Eigen::VectorXd>(coeffs, sig.coeffs.size()) = sig.coeffs;
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_sh_synthesize(int lmax, const double* coeffs, double theta,
                         double phi, double* out) {
  if (null_arg(coeffs) || null_arg(out)) return einval_null();
  try {
    if (lmax < 0) {
      return fail(SO3REP_EINVAL, "band limit must be non-negative");
    }
    const Eigen::Map<const Eigen::VectorXd> c(coeffs,
                                              so3rep::sh_count(lmax));
    *out = so3rep::real_sh_point(lmax, theta, phi).dot(c);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_matrix_elements_oracle(int l, const double g[3], int quad_lmax,
                                  double* out) {
  if (null_arg(g) || null_arg(out)) return einval_null();
  try {
    const so3rep::SphereQuadrature q = so3rep::build_quadrature(quad_lmax);
    copy_matrix(so3rep::matrix_elements_oracle(l, to_euler(g), q), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_axis_exchange_oracle(int l, int quad_lmax, double* out) {
  if (null_arg(out)) return einval_null();
  try {
    const so3rep::SphereQuadrature q = so3rep::build_quadrature(quad_lmax);
    copy_matrix(so3rep::axis_exchange_oracle(l, q), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* -------------------------------------------------- axis-exchange tables */

so3rep_jtable* so3rep_jtable_build(int lmax) {
  try {
    return new so3rep_jtable{so3rep::JTable(lmax)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

so3rep_jtable* so3rep_jtable_load(const char* path) {
  try {
    if (path == nullptr) {
      einval_null();
      return nullptr;
    }
    return new so3rep_jtable{so3rep::JTable::load(path)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

int so3rep_jtable_save(const so3rep_jtable* jt, const char* path) {
  if (null_arg(jt) || null_arg(path)) return einval_null();
  try {
    jt->table.save(path);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

void so3rep_jtable_destroy(so3rep_jtable* jt) { delete jt; }

int so3rep_jtable_lmax(const so3rep_jtable* jt) {
  if (null_arg(jt)) {
    einval_null();
    return -1;
  }
  return jt->table.l_max();
}

int so3rep_jtable_get(const so3rep_jtable* jt, int l, double* out) {
  if (null_arg(jt) || null_arg(out)) return einval_null();
  try {
    copy_matrix(jt->table.j(l), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ---------------------------------------------------- weight-l rotations */

int so3rep_tz_apply(int l, double angle, const double* x, double* out) {
  if (null_arg(x) || null_arg(out)) return einval_null();
  try {
    so3rep::tz_apply(l, angle, x, out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_wigner_matrix(const so3rep_jtable* jt, int l, const double g[3],
                         double* out) {
  if (null_arg(jt) || null_arg(g) || null_arg(out)) return einval_null();
  try {
    copy_matrix(so3rep::wigner_matrix(jt->table, l, to_euler(g)), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_wigner_apply(const so3rep_jtable* jt, int l, const double g[3],
                        const double* x, double* out) {
  if (null_arg(jt) || null_arg(g) || null_arg(x) || null_arg(out)) {
    return einval_null();
  }
  try {
    const int dim = 2 * l + 1;
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x, dim);
    Eigen::Map<Eigen::VectorXd>(out, dim) =
        so3rep::wigner_apply(jt->table, l, to_euler(g), v);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_wigner_jacobian(const so3rep_jtable* jt, int l, const double g[3],
                           const double* x, double* d_g1, double* d_g2,
                           double* d_g3) {
  if (null_arg(jt) || null_arg(g) || null_arg(x) || null_arg(d_g1) ||
      null_arg(d_g2) || null_arg(d_g3)) {
    return einval_null();
  }
  try {
    const int dim = 2 * l + 1;
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x, dim);
    const so3rep::EulerJacobian jac =
        so3rep::wigner_apply_jacobian(jt->table, l, to_euler(g), v);
    Eigen::Map<Eigen::VectorXd>(d_g1, dim) = jac.d_g1;
    Eigen::Map<Eigen::VectorXd>(d_g2, dim) = jac.d_g2;
    Eigen::Map<Eigen::VectorXd>(d_g3, dim) = jac.d_g3;
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* --------------------------------------------------- representation spec */

so3rep_repspec* so3rep_repspec_parse(const char* text) {
  try {
    if (text == nullptr) {
      einval_null();
      return nullptr;
    }
    return new so3rep_repspec{so3rep::RepSpec::parse(text)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

void so3rep_repspec_destroy(so3rep_repspec* spec) { delete spec; }

int so3rep_repspec_dim(const so3rep_repspec* spec) {
  if (null_arg(spec)) {
    einval_null();
    return -1;
  }
  return spec->spec.dim();
}

int so3rep_repspec_block_count(const so3rep_repspec* spec) {
  if (null_arg(spec)) {
    einval_null();
    return -1;
  }
  return spec->spec.block_count();
}

int so3rep_repspec_block_weight(const so3rep_repspec* spec, int i) {
  if (null_arg(spec)) {
    einval_null();
    return -1;
  }
  try {
    return spec->spec.block_weight(i);
  } catch (...) {
    caught();
    return -1;
  }
}

int so3rep_repspec_max_weight(const so3rep_repspec* spec) {
  if (null_arg(spec)) {
    einval_null();
    return -1;
  }
  return spec->spec.max_weight();
}

int so3rep_repspec_to_string(const so3rep_repspec* spec, char* buf,
                             size_t buf_len) {
  if (null_arg(spec) || null_arg(buf)) return einval_null();
  try {
    const std::string text = spec->spec.to_string();
    if (text.size() + 1 > buf_len) {
      return fail(SO3REP_EINVAL, "buffer too small");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_block_apply(const so3rep_jtable* jt, const so3rep_repspec* spec,
                       const double g[3], const double* z, double* out) {
  if (null_arg(jt) || null_arg(spec) || null_arg(g) || null_arg(z) ||
      null_arg(out)) {
    return einval_null();
  }
  try {
    const int dim = spec->spec.dim();
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(z, dim);
    Eigen::Map<Eigen::VectorXd>(out, dim) =
        so3rep::block_apply(jt->table, spec->spec, to_euler(g), v);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ---------------------------------------------- decorrelation statistics */

void so3rep_covreport_destroy(so3rep_covreport* report) { delete report; }

int so3rep_covreport_dim(const so3rep_covreport* report) {
  if (null_arg(report)) {
    einval_null();
    return -1;
  }
  return static_cast<int>(report->report.matrix.rows());
}

int64_t so3rep_covreport_samples(const so3rep_covreport* report) {
  if (null_arg(report)) {
    einval_null();
    return -1;
  }
  return report->report.n_samples;
}

int so3rep_covreport_matrix(const so3rep_covreport* report, double* out) {
  if (null_arg(report) || null_arg(out)) return einval_null();
  copy_matrix(report->report.matrix, out);
  return SO3REP_OK;
}

int so3rep_covreport_predicted_diag(const so3rep_covreport* report,
                                    double* out) {
  if (null_arg(report) || null_arg(out)) return einval_null();
  const Eigen::VectorXd& d = report->report.predicted_diag;
  Eigen::Map<Eigen::VectorXd>(out, d.size()) = d;
  return SO3REP_OK;
}

int so3rep_covreport_max_offdiag(const so3rep_covreport* report,
                                 double* out) {
  if (null_arg(report) || null_arg(out)) return einval_null();
  *out = report->report.max_offdiag;
  return SO3REP_OK;
}

int so3rep_covreport_stderr(const so3rep_covreport* report, double* out) {
  if (null_arg(report) || null_arg(out)) return einval_null();
  if (report->report.stderr_matrix.size() == 0) {
    return fail(SO3REP_EINVAL,
                "standard errors need at least two sample batches");
  }
  copy_matrix(report->report.stderr_matrix, out);
  return SO3REP_OK;
}

so3rep_covreport* so3rep_circle_covariance(const double* tau, int n,
                                           int n_theta) {
  try {
    if (tau == nullptr) {
      einval_null();
      return nullptr;
    }
    if (n < 1) {
      fail(SO3REP_EINVAL, "template length must be positive");
      return nullptr;
    }
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(tau, n);
    return new so3rep_covreport{so3rep::circle_covariance(t, n_theta)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

so3rep_covreport* so3rep_orbit_covariance_mc(const so3rep_jtable* jt,
                                             const so3rep_repspec* spec,
                                             const double* tau,
                                             int64_t n_samples,
                                             so3rep_rng* rng) {
  try {
    if (jt == nullptr || spec == nullptr || tau == nullptr || rng == nullptr) {
      einval_null();
      return nullptr;
    }
    Eigen::VectorXd t =
        Eigen::Map<const Eigen::VectorXd>(tau, spec->spec.dim());
    return new so3rep_covreport{so3rep::orbit_covariance_mc(
        jt->table, spec->spec, t, n_samples, rng->stream)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

int so3rep_schur_check(const so3rep_jtable* jt, int l, int l_prime,
                       int64_t n_samples, so3rep_rng* rng,
                       double* max_deviation) {
  if (null_arg(jt) || null_arg(rng) || null_arg(max_deviation)) {
    return einval_null();
  }
  try {
    *max_deviation = so3rep::schur_orthogonality_check(jt->table, l, l_prime,
                                                       n_samples, rng->stream);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_factorization_check(const double* tau, int n, double sigma,
                               int n_quad, int n_probes, so3rep_rng* rng,
                               double* max_rel_gap, double* refinement_gap) {
  if (null_arg(tau) || null_arg(rng) || null_arg(max_rel_gap) ||
      null_arg(refinement_gap)) {
    return einval_null();
  }
  try {
    if (n < 1) {
      return fail(SO3REP_EINVAL, "template length must be positive");
    }
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(tau, n);
    const so3rep::FactorizationReport report =
        so3rep::conditional_factorization_check(t, sigma, n_quad, n_probes,
                                                rng->stream);
    *max_rel_gap = report.max_rel_gap;
    *refinement_gap = report.refinement_gap;
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* --------------------------------------------------- derivative checking */

int so3rep_gradient_suite(const so3rep_jtable* jt, uint64_t seed,
                          double* rotation_err, double* block_err,
                          double* decoder_err, double* log_joint_err) {
  if (null_arg(jt) || null_arg(rotation_err) || null_arg(block_err) ||
      null_arg(decoder_err) || null_arg(log_joint_err)) {
    return einval_null();
  }
  try {
    const so3rep::JTable& table = jt->table;
    if (table.l_max() < 3) {
      return fail(SO3REP_EINVAL,
                  "gradient suite needs a table through weight 3");
    }
    const double h = 1e-6;

    so3rep::RngStream pose_rng(seed, "gc_pose");
    so3rep::RngStream vec_rng(seed, "gc_vec");

    {  // single-weight rotation Jacobian at l = 3
      const so3rep::EulerZYZ g = so3rep::haar_sample(pose_rng);
      Eigen::VectorXd x(7);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = vec_rng.normal();
      *rotation_err = so3rep::check_rotation_jacobian(table, 3, g, x, h);
    }

    const so3rep::RepSpec spec = so3rep::RepSpec::parse("0:1,1:2,2:1");
    {  // block-diagonal Jacobian
      const so3rep::EulerZYZ g = so3rep::haar_sample(pose_rng);
      Eigen::VectorXd z(spec.dim());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = vec_rng.normal();
      *block_err = so3rep::check_block_jacobian(table, spec, g, z, h);
    }

    so3rep::RngStream theta_rng(seed, "gc_theta");
    const so3rep::DecoderParams params =
        so3rep::DecoderParams::init(spec.dim(), 16, 9, theta_rng);
    {  // decoder directional derivative
      Eigen::VectorXd z(spec.dim()), dir(spec.dim());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = vec_rng.normal();
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = vec_rng.normal();
      *decoder_err = so3rep::check_decoder_jvp(params, z, dir, h);
    }

    {  // full log-joint gradient on 3 views
      const int views = 3;
      so3rep::ViewSet X(params.dx(), views);
      std::vector<so3rep::EulerZYZ> G;
      for (int v = 0; v < views; ++v) {
        G.push_back(so3rep::haar_sample(pose_rng));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
          X(i, v) = vec_rng.normal();
        }
      }
      Eigen::VectorXd z(spec.dim());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = vec_rng.normal();
      so3rep::HyperParams hp;
      *log_joint_err = so3rep::check_log_joint_gradients(table, spec, X, G, z,
                                                         params, hp, h);
    }
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ------------------------------------------------------------ dataset io */

int so3rep_dataset_header(const char* path, int* n, int* v, int* d) {
  if (null_arg(path) || null_arg(n) || null_arg(v) || null_arg(d)) {
    return einval_null();
  }
  try {
    so3rep::read_dataset_header(path, *n, *v, *d);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_dataset_read(const char* path, double* out) {
  if (null_arg(path) || null_arg(out)) return einval_null();
  try {
    const so3rep::Dataset data = so3rep::load_dataset(path);
    copy_matrix(data.X, out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_dataset_write(const char* path, int n, int v, int d,
                         const double* rows) {
  if (null_arg(path) || null_arg(rows)) return einval_null();
  try {
    if (n < 0 || v < 0 || d < 0) {
      return fail(SO3REP_EINVAL, "dataset dimensions must be non-negative");
    }
    so3rep::Dataset data;
    data.n_instances = n;
    data.views = v;
    data.dx = d;
    data.X = ConstRowMajorMap(rows, static_cast<Eigen::Index>(n) * v, d);
    so3rep::save_dataset(path, data);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_dataset_split_views(const char* path, int keep_views,
                               const char* train_path,
                               const char* rest_path) {
  if (null_arg(path)) return einval_null();
  try {
    const so3rep::Dataset data = so3rep::load_dataset(path);
    if (keep_views < 1 || keep_views > data.views) {
      return fail(SO3REP_EINVAL, "keep_views out of range");
    }
    if (rest_path != nullptr && keep_views == data.views) {
      return fail(SO3REP_EINVAL, "no views left for the rest split");
    }
    if (train_path != nullptr) {
      so3rep::Dataset train;
      train.n_instances = data.n_instances;
      train.views = keep_views;
      train.dx = data.dx;
      train.X.resize(
          static_cast<Eigen::Index>(data.n_instances) * keep_views, data.dx);
      for (int i = 0; i < data.n_instances; ++i) {
        for (int w = 0; w < keep_views; ++w) {
          train.X.row(static_cast<Eigen::Index>(i) * keep_views + w) =
              data.X.row(static_cast<Eigen::Index>(i) * data.views + w);
        }
      }
      so3rep::save_dataset(train_path, train);
    }
    if (rest_path != nullptr) {
      const int rest_views = data.views - keep_views;
      so3rep::Dataset rest;
      rest.n_instances = data.n_instances;
      rest.views = rest_views;
      rest.dx = data.dx;
      rest.X.resize(
          static_cast<Eigen::Index>(data.n_instances) * rest_views, data.dx);
      for (int i = 0; i < data.n_instances; ++i) {
        for (int w = 0; w < rest_views; ++w) {
          rest.X.row(static_cast<Eigen::Index>(i) * rest_views + w) =
              data.X.row(static_cast<Eigen::Index>(i) * data.views +
                         keep_views + w);
        }
      }
      so3rep::save_dataset(rest_path, rest);
    }
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_synthesize_dataset(const so3rep_jtable* jt, const char* spec_text,
                              int n, int v, int dx, int hidden,
                              double sigma_true, uint64_t seed,
                              const char* dataset_path,
                              const char* truth_path) {
  if (null_arg(jt) || null_arg(spec_text) || null_arg(dataset_path)) {
    return einval_null();
  }
  try {
    const so3rep::RepSpec spec = so3rep::RepSpec::parse(spec_text);
    const so3rep::SynthResult result = so3rep::synthesize_dataset(
        jt->table, spec, n, v, dx, hidden, sigma_true, seed);
    so3rep::save_dataset(dataset_path, result.data);
    if (truth_path != nullptr) {
      so3rep::save_ground_truth(truth_path, result.truth);
    }
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ---------------------------------------------------------- pca whitener */

so3rep_pca* so3rep_pca_fit(const char* dataset_path,
                           double variance_fraction) {
  try {
    if (dataset_path == nullptr) {
      einval_null();
      return nullptr;
    }
    const so3rep::Dataset data = so3rep::load_dataset(dataset_path);
    return new so3rep_pca{so3rep::pca_fit(data.X, variance_fraction)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

void so3rep_pca_destroy(so3rep_pca* pca) { delete pca; }

int so3rep_pca_input_dim(const so3rep_pca* pca) {
  if (null_arg(pca)) {
    einval_null();
    return -1;
  }
  return pca->model.input_dim();
}

int so3rep_pca_retained(const so3rep_pca* pca) {
  if (null_arg(pca)) {
    einval_null();
    return -1;
  }
  return pca->model.retained();
}

int so3rep_pca_whiten(const so3rep_pca* pca, int n_rows, const double* in,
                      double* out) {
  if (null_arg(pca) || null_arg(in) || null_arg(out)) return einval_null();
  try {
    if (n_rows < 0) return fail(SO3REP_EINVAL, "row count must be >= 0");
    Eigen::MatrixXd rows =
        ConstRowMajorMap(in, n_rows, pca->model.input_dim());
    copy_matrix(pca->model.whiten(rows), out);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_pca_whiten_file(const so3rep_pca* pca, const char* in_path,
                           const char* out_path) {
  if (null_arg(pca) || null_arg(in_path) || null_arg(out_path)) {
    return einval_null();
  }
  try {
    so3rep::Dataset data = so3rep::load_dataset(in_path);
    data.X = pca->model.whiten(data.X);
    data.dx = static_cast<int>(data.X.cols());
    so3rep::save_dataset(out_path, data);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

/* ------------------------------------------------------- hard-EM trainer */

so3rep_trainer* so3rep_trainer_create(const so3rep_jtable* jt,
                                      const char* spec_text,
                                      const char* dataset_path, int hidden,
                                      const double hyper[5], uint64_t seed) {
  try {
    if (jt == nullptr || spec_text == nullptr || dataset_path == nullptr) {
      einval_null();
      return nullptr;
    }
    so3rep::RepSpec spec = so3rep::RepSpec::parse(spec_text);
    so3rep::Dataset data = so3rep::load_dataset(dataset_path);
    return new so3rep_trainer{so3rep::Trainer(jt->table, std::move(spec),
                                              std::move(data), hidden,
                                              to_hyper(hyper), seed)};
  } catch (...) {
    caught();
    return nullptr;
  }
}

void so3rep_trainer_destroy(so3rep_trainer* trainer) { delete trainer; }

int so3rep_trainer_train(so3rep_trainer* trainer, int epochs, double* trace) {
  if (null_arg(trainer)) return einval_null();
  try {
    const std::vector<double> values = trainer->trainer.train(epochs);
    if (trace != nullptr) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        trace[i] = values[i];
      }
    }
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_objective(const so3rep_trainer* trainer, double* out) {
  if (null_arg(trainer) || null_arg(out)) return einval_null();
  try {
    *out = trainer->trainer.dataset_objective();
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_recon_rmse(const so3rep_trainer* trainer, double* out) {
  if (null_arg(trainer) || null_arg(out)) return einval_null();
  try {
    *out = trainer->trainer.recon_rmse();
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_dims(const so3rep_trainer* trainer, int* n, int* v,
                        int* dx, int* dz, int* hidden, int* epochs_done) {
  if (null_arg(trainer)) return einval_null();
  const so3rep::Trainer& tr = trainer->trainer;
  if (n != nullptr) *n = tr.instances();
  if (v != nullptr) *v = tr.views();
  if (dx != nullptr) *dx = tr.data().dx;
  if (dz != nullptr) *dz = tr.spec().dim();
  if (hidden != nullptr) *hidden = tr.params().hidden();
  if (epochs_done != nullptr) *epochs_done = tr.epochs_done();
  return SO3REP_OK;
}

int so3rep_trainer_latent_pose(const so3rep_trainer* trainer, int n, int v,
                               double g[3]) {
  if (null_arg(trainer) || null_arg(g)) return einval_null();
  try {
    const so3rep::Trainer& tr = trainer->trainer;
    if (n < 0 || n >= tr.instances() || v < 0 || v >= tr.views()) {
      return fail(SO3REP_EINVAL, "instance or view index out of range");
    }
    from_euler(tr.latent(n).G[static_cast<std::size_t>(v)], g);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_decode(const so3rep_trainer* trainer, int n,
                          const double g[3], double* out) {
  if (null_arg(trainer) || null_arg(g) || null_arg(out)) return einval_null();
  try {
    const so3rep::Trainer& tr = trainer->trainer;
    if (n < 0 || n >= tr.instances()) {
      return fail(SO3REP_EINVAL, "instance index out of range");
    }
    const Eigen::VectorXd decoded = tr.decode_pose(n, to_euler(g));
    Eigen::Map<Eigen::VectorXd>(out, decoded.size()) = decoded;
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_heldout_eval(const so3rep_trainer* trainer,
                                const double* held, uint64_t seed,
                                int restarts, int steps, double lr,
                                int* successes, int* trials) {
  if (null_arg(trainer) || null_arg(held) || null_arg(successes) ||
      null_arg(trials)) {
    return einval_null();
  }
  try {
    const so3rep::Trainer& tr = trainer->trainer;
    Eigen::MatrixXd views =
        ConstRowMajorMap(held, tr.instances(), tr.data().dx);
    so3rep::HeldOutOptions options;
    options.random_restarts = restarts;
    options.steps = steps;
    options.lr = lr;
    const so3rep::HeldOutResult result =
        so3rep::evaluate_held_out(tr, views, seed, options);
    *successes = result.successes;
    *trials = result.trials;
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_trainer_save(const so3rep_trainer* trainer, const char* path) {
  if (null_arg(trainer) || null_arg(path)) return einval_null();
  try {
    trainer->trainer.save_checkpoint(path);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

int so3rep_checkpoint_spec(const char* path, char* buf, size_t buf_len) {
  if (null_arg(path) || null_arg(buf)) return einval_null();
  try {
    const std::string spec = so3rep::Trainer::checkpoint_spec(path);
    if (spec.size() + 1 > buf_len) {
      return fail(SO3REP_EINVAL, "buffer too small");
    }
    std::memcpy(buf, spec.c_str(), spec.size() + 1);
    return SO3REP_OK;
  } catch (...) {
    return caught();
  }
}

so3rep_trainer* so3rep_trainer_load(const so3rep_jtable* jt, const char* path,
                                    const char* dataset_path) {
  try {
    if (jt == nullptr || path == nullptr) {
      einval_null();
      return nullptr;
    }
    so3rep::Dataset data;
    if (dataset_path != nullptr) {
      data = so3rep::load_dataset(dataset_path);
    }
    return new so3rep_trainer{so3rep::Trainer::load_checkpoint(
        jt->table, path, std::move(data))};
  } catch (...) {
    caught();
    return nullptr;
  }
}

}  // extern "C"
