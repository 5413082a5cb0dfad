/* so3rep — irreducible rotation representations over real spherical
 * harmonics, orbit decorrelation statistics, and a pose-factored latent
 * generative model trained by stochastic hard EM.
 *
 * C API conventions
 * -----------------
 *   - Every fallible function returns a status code (SO3REP_OK == 0) or, for
 *     constructors, NULL on failure.  so3rep_last_error() returns a
 *     thread-local message describing the most recent failure on the calling
 *     thread.
 *   - Rotations are Euler angles (g1, g2, g3) in Z-Y-Z convention: the
 *     rotation matrix is R = Rz(g3) Ry(g2) Rz(g1), acting on column vectors.
 *     Angle triples are passed as double[3] in the order g1, g2, g3.
 *   - Matrices cross the API as dense row-major double arrays.
 *   - All randomness flows through so3rep_rng streams so that identical
 *     seeds reproduce results bit-for-bit.
 */

#ifndef SO3REP_H
#define SO3REP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SO3REP_API __declspec(dllexport)
#else
#define SO3REP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* ---------------------------------------------------------------- status */

enum {
  SO3REP_OK = 0,
  SO3REP_EINVAL = 1,    /* invalid argument or precondition violation */
  SO3REP_EFAIL = 2,     /* internal numerical failure */
  SO3REP_EIO = 3,       /* file could not be read or written */
  SO3REP_ENOCONV = 4,   /* iterative computation failed to converge */
  SO3REP_EDIVERGED = 5  /* training objective became non-finite */
};

/* Thread-local description of the last error on this thread ("" if none). */
SO3REP_API const char* so3rep_last_error(void);

/* ------------------------------------------------------------------- rng */

typedef struct so3rep_rng so3rep_rng;

SO3REP_API so3rep_rng* so3rep_rng_create(uint64_t seed);
/* Independent substream derived from (master_seed, name). */
SO3REP_API so3rep_rng* so3rep_rng_create_named(uint64_t master_seed,
                                               const char* name);
SO3REP_API void so3rep_rng_destroy(so3rep_rng* rng);
SO3REP_API int so3rep_rng_next_u64(so3rep_rng* rng, uint64_t* out);
SO3REP_API int so3rep_rng_uniform(so3rep_rng* rng, double* out);  /* [0,1) */
SO3REP_API int so3rep_rng_normal(so3rep_rng* rng, double* out);

/* ---------------------------------------------------------- Euler angles */

/* Canonicalizes to g1, g3 in [0, 2pi) and g2 in [0, pi] (same rotation). */
SO3REP_API int so3rep_euler_normalize(const double g[3], double out[3]);
/* Angles of the product R(a) R(b): apply b first, then a. */
SO3REP_API int so3rep_euler_compose(const double a[3], const double b[3],
                                    double out[3]);
SO3REP_API int so3rep_euler_inverse(const double g[3], double out[3]);
SO3REP_API int so3rep_euler_to_matrix(const double g[3], double out[9]);
/* Requires an orthogonal matrix with determinant +1 (tolerance 1e-9). */
SO3REP_API int so3rep_euler_from_matrix(const double m[9], double out[3]);
/* Uniform (Haar) random rotation. */
SO3REP_API int so3rep_euler_haar(so3rep_rng* rng, double out[3]);
/* Frobenius distance between the two rotation matrices. */
SO3REP_API int so3rep_rotation_distance(const double a[3], const double b[3],
                                        double* out);

/* -------------------------------------------- spherical harmonics & quad */

/* Number of real spherical harmonics through band lmax: (lmax+1)^2. */
SO3REP_API int so3rep_sh_count(int lmax);

/* Real orthonormal spherical harmonic Y_lm at colatitude theta in [0,pi],
 * azimuth phi. */
SO3REP_API int so3rep_real_sh(int l, int m, double theta, double phi,
                              double* out);

/* Gauss-Legendre x uniform-azimuth product rule, exact through degree
 * 2*lmax.  Query the node count, then fill three arrays of that length. */
SO3REP_API int so3rep_quadrature_size(int lmax, int* n_nodes);
SO3REP_API int so3rep_quadrature_build(int lmax, double* theta, double* phi,
                                       double* weight);

/* Forward transform: samples at the quadrature nodes of band `lmax` ->
 * (lmax+1)^2 coefficients.  Inverse evaluation at one point. */
SO3REP_API int so3rep_sh_analyze(int lmax, int n_nodes, const double* samples,
                                 double* coeffs);
SO3REP_API int so3rep_sh_synthesize(int lmax, const double* coeffs,
                                    double theta, double phi, double* out);

/* Quadrature oracle for the weight-l rotation matrix: entry (m,n) is the
 * integral of Y_lm(p) Y_ln(R^{-1} p); out is (2l+1)^2 row-major.  quad_lmax
 * must be at least l.  The axis-exchange oracle is the same construction for
 * the (x,y,z) -> (x,z,y) map. */
SO3REP_API int so3rep_matrix_elements_oracle(int l, const double g[3],
                                             int quad_lmax, double* out);
SO3REP_API int so3rep_axis_exchange_oracle(int l, int quad_lmax, double* out);

/* ------------------------------------------------- axis-exchange tables */

typedef struct so3rep_jtable so3rep_jtable;

/* Symmetric involutive axis-exchange blocks J^l for l = 0..lmax, built by
 * eigendecomposition of the quarter-turn generator (machine precision). */
SO3REP_API so3rep_jtable* so3rep_jtable_build(int lmax);
SO3REP_API so3rep_jtable* so3rep_jtable_load(const char* path);
SO3REP_API int so3rep_jtable_save(const so3rep_jtable* jt, const char* path);
SO3REP_API void so3rep_jtable_destroy(so3rep_jtable* jt);
SO3REP_API int so3rep_jtable_lmax(const so3rep_jtable* jt);
/* Copies J^l into out, (2l+1)^2 row-major. */
SO3REP_API int so3rep_jtable_get(const so3rep_jtable* jt, int l, double* out);

/* --------------------------------------------------- weight-l rotations */

/* In-plane rotation about z on the 2l+1 real harmonic coefficients (the
 * block-diagonal cos/sin mixing of the +/-m pair).  x and out have length
 * 2l+1 and may alias. */
SO3REP_API int so3rep_tz_apply(int l, double angle, const double* x,
                               double* out);

/* Dense weight-l rotation matrix, (2l+1)^2 row-major. */
SO3REP_API int so3rep_wigner_matrix(const so3rep_jtable* jt, int l,
                                    const double g[3], double* out);
/* Matrix-free application to a coefficient vector of length 2l+1. */
SO3REP_API int so3rep_wigner_apply(const so3rep_jtable* jt, int l,
                                   const double g[3], const double* x,
                                   double* out);
/* Partial derivatives of wigner_apply with respect to g1, g2, g3. */
SO3REP_API int so3rep_wigner_jacobian(const so3rep_jtable* jt, int l,
                                      const double g[3], const double* x,
                                      double* d_g1, double* d_g2,
                                      double* d_g3);

/* --------------------------------------------------- representation spec */

typedef struct so3rep_repspec so3rep_repspec;

/* Parses the run-length syntax "l:mult,l:mult,...", e.g. "0:2,1:2,2:1". */
SO3REP_API so3rep_repspec* so3rep_repspec_parse(const char* text);
SO3REP_API void so3rep_repspec_destroy(so3rep_repspec* spec);
SO3REP_API int so3rep_repspec_dim(const so3rep_repspec* spec);
SO3REP_API int so3rep_repspec_block_count(const so3rep_repspec* spec);
SO3REP_API int so3rep_repspec_block_weight(const so3rep_repspec* spec, int i);
SO3REP_API int so3rep_repspec_max_weight(const so3rep_repspec* spec);
/* Writes the canonical run-length string; fails if buf_len is too small. */
SO3REP_API int so3rep_repspec_to_string(const so3rep_repspec* spec, char* buf,
                                        size_t buf_len);

/* Block-diagonal rotation of a latent vector of length spec->dim. */
SO3REP_API int so3rep_block_apply(const so3rep_jtable* jt,
                                  const so3rep_repspec* spec,
                                  const double g[3], const double* z,
                                  double* out);

/* --------------------------------------------- decorrelation statistics */

typedef struct so3rep_covreport so3rep_covreport;

SO3REP_API void so3rep_covreport_destroy(so3rep_covreport* report);
SO3REP_API int so3rep_covreport_dim(const so3rep_covreport* report);
SO3REP_API int64_t so3rep_covreport_samples(const so3rep_covreport* report);
/* Estimated second-moment matrix, dim^2 row-major. */
SO3REP_API int so3rep_covreport_matrix(const so3rep_covreport* report,
                                       double* out);
/* Diagonal predicted by the orthogonality theorem, length dim. */
SO3REP_API int so3rep_covreport_predicted_diag(const so3rep_covreport* report,
                                               double* out);
SO3REP_API int so3rep_covreport_max_offdiag(const so3rep_covreport* report,
                                            double* out);
/* Batch-means standard error per entry (dim^2 row-major); fails with
 * SO3REP_EINVAL if the estimate used fewer than two batches. */
SO3REP_API int so3rep_covreport_stderr(const so3rep_covreport* report,
                                       double* out);

/* Deterministic circle analogue: template signal tau of length n on the
 * cyclic group, second moment over n_theta uniform rotations, reported in
 * the unitary DFT basis where it is diagonal with entries |tau_hat_k|^2.
 * Requires n_theta >= n. */
SO3REP_API so3rep_covreport* so3rep_circle_covariance(const double* tau,
                                                      int n, int n_theta);

/* Monte-Carlo second moment of {T(g) tau : g Haar} for a block-diagonal
 * representation; predicted diagonal is ||tau_block||^2 / (2l+1) per block. */
SO3REP_API so3rep_covreport* so3rep_orbit_covariance_mc(
    const so3rep_jtable* jt, const so3rep_repspec* spec, const double* tau,
    int64_t n_samples, so3rep_rng* rng);

/* Monte-Carlo Schur orthogonality: largest deviation of the cross-moments
 * of matrix elements of weights l and l_prime from their exact values
 * (delta_{ll'} delta_{mm'} delta_{nn'} / (2l+1)). */
SO3REP_API int so3rep_schur_check(const so3rep_jtable* jt, int l, int l_prime,
                                  int64_t n_samples, so3rep_rng* rng,
                                  double* max_deviation);

/* Conditional factorization check for a circle template with at most two
 * active frequency blocks: compares the joint posterior density of the
 * per-block rotation angles against the product of its marginals on a
 * quadrature grid, at a noise level sigma, over n_probes model-drawn
 * observations.  Reports the worst relative gap and the change when the
 * grid is doubled (must stay within 1e-8, else SO3REP_ENOCONV). */
SO3REP_API int so3rep_factorization_check(const double* tau, int n,
                                          double sigma, int n_quad,
                                          int n_probes, so3rep_rng* rng,
                                          double* max_rel_gap,
                                          double* refinement_gap);

/* --------------------------------------------------- derivative checking */

/* Runs every finite-difference derivative check on small randomized shapes
 * derived from `seed`: the weight-l rotation Jacobian, the block-diagonal
 * Jacobian, the decoder directional derivative, and the full log-joint
 * gradient.  Outputs are worst relative errors. */
SO3REP_API int so3rep_gradient_suite(const so3rep_jtable* jt, uint64_t seed,
                                     double* rotation_err, double* block_err,
                                     double* decoder_err,
                                     double* log_joint_err);

/* ----------------------------------------------------------- dataset io */

/* Multi-view datasets live in DSET v1 files: an ASCII header line
 * "DSET v1 N=<instances> V=<views> D=<coords>" followed by row-major
 * little-endian doubles, one row per (instance, view) pair. */
SO3REP_API int so3rep_dataset_header(const char* path, int* n, int* v,
                                     int* d);
/* Reads the full payload into out (n*v*d doubles, row-major). */
SO3REP_API int so3rep_dataset_read(const char* path, double* out);
SO3REP_API int so3rep_dataset_write(const char* path, int n, int v, int d,
                                    const double* rows);
/* Splits the views of each instance: the first keep_views go to train_path,
 * the rest to rest_path (either path may be NULL to skip that output). */
SO3REP_API int so3rep_dataset_split_views(const char* path, int keep_views,
                                          const char* train_path,
                                          const char* rest_path);

/* Synthesizes a dataset from a randomly initialized generator network:
 * codes ~ N(0, I), poses ~ Haar, observation noise sigma_true.  Writes the
 * dataset and, if truth_path is non-NULL, the generator's parameters,
 * codes, and poses for later evaluation. */
SO3REP_API int so3rep_synthesize_dataset(const so3rep_jtable* jt,
                                         const char* spec_text, int n, int v,
                                         int dx, int hidden,
                                         double sigma_true, uint64_t seed,
                                         const char* dataset_path,
                                         const char* truth_path);

/* ----------------------------------------------------------- pca whitener */

typedef struct so3rep_pca so3rep_pca;

/* Fits PCA on the rows of a DSET file, retaining the smallest number of
 * components reaching variance_fraction of the total variance. */
SO3REP_API so3rep_pca* so3rep_pca_fit(const char* dataset_path,
                                      double variance_fraction);
SO3REP_API void so3rep_pca_destroy(so3rep_pca* pca);
SO3REP_API int so3rep_pca_input_dim(const so3rep_pca* pca);
SO3REP_API int so3rep_pca_retained(const so3rep_pca* pca);
/* Whitens n_rows row-major observations of the fitted input dimension. */
SO3REP_API int so3rep_pca_whiten(const so3rep_pca* pca, int n_rows,
                                 const double* in, double* out);
/* Whitens a whole DSET file into a new DSET file (D becomes `retained`). */
SO3REP_API int so3rep_pca_whiten_file(const so3rep_pca* pca,
                                      const char* in_path,
                                      const char* out_path);

/* ------------------------------------------------------ hard-EM trainer */

typedef struct so3rep_trainer so3rep_trainer;

/* hyper = {beta, alpha, lr_e, lr_m, adagrad_eps}; pass NULL for defaults
 * (0.1, 0.1, 0.18, 0.04, 1e-8). */
SO3REP_API so3rep_trainer* so3rep_trainer_create(const so3rep_jtable* jt,
                                                 const char* spec_text,
                                                 const char* dataset_path,
                                                 int hidden,
                                                 const double hyper[5],
                                                 uint64_t seed);
SO3REP_API void so3rep_trainer_destroy(so3rep_trainer* trainer);

/* Runs `epochs` epochs of stochastic hard EM; if trace is non-NULL it
 * receives the full-dataset objective after each epoch (length `epochs`).
 * Returns SO3REP_EDIVERGED if the objective becomes non-finite. */
SO3REP_API int so3rep_trainer_train(so3rep_trainer* trainer, int epochs,
                                    double* trace);

SO3REP_API int so3rep_trainer_objective(const so3rep_trainer* trainer,
                                        double* out);
/* Root-mean-square reconstruction residual per coordinate. */
SO3REP_API int so3rep_trainer_recon_rmse(const so3rep_trainer* trainer,
                                         double* out);
SO3REP_API int so3rep_trainer_dims(const so3rep_trainer* trainer, int* n,
                                   int* v, int* dx, int* dz, int* hidden,
                                   int* epochs_done);
/* Trained pose of view v of instance n. */
SO3REP_API int so3rep_trainer_latent_pose(const so3rep_trainer* trainer,
                                          int n, int v, double g[3]);
/* Decodes instance n's code at an arbitrary pose; out has length dx. */
SO3REP_API int so3rep_trainer_decode(const so3rep_trainer* trainer, int n,
                                     const double g[3], double* out);

/* Held-out-pose evaluation: held has one row per instance (n x dx,
 * row-major).  Each held-out pose is inferred by gradient ascent on the
 * rotation alone (decoder and code frozen), restarted from every trained
 * pose plus `restarts` uniform draws of `steps` iterations at rate lr.
 * A trial succeeds when the decoded view is closer to the held-out view
 * than to a random seen view. */
SO3REP_API int so3rep_trainer_heldout_eval(const so3rep_trainer* trainer,
                                           const double* held, uint64_t seed,
                                           int restarts, int steps, double lr,
                                           int* successes, int* trials);

/* Checkpointing.  Loading without a dataset (dataset_path NULL) yields a
 * decode-only trainer: train/objective/rmse then fail with SO3REP_EINVAL. */
SO3REP_API int so3rep_trainer_save(const so3rep_trainer* trainer,
                                   const char* path);
SO3REP_API so3rep_trainer* so3rep_trainer_load(const so3rep_jtable* jt,
                                               const char* path,
                                               const char* dataset_path);
/* Reads only the representation-layout string from a checkpoint manifest
 * (use it to size the axis-exchange table before loading). */
SO3REP_API int so3rep_checkpoint_spec(const char* path, char* buf,
                                      size_t buf_len);

#ifdef __cplusplus
}
#endif

#endif /* SO3REP_H */
