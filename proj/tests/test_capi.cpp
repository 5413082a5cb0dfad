// Exercises the shared-library C API end to end: handle lifecycles, error
// reporting, and numerical round trips, using only the public header.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "so3rep/so3rep.h"

namespace {

std::string temp_path(const char* name) {
  return std::string("capi_test_") + name + ".bin";
}

struct Rng {
  so3rep_rng* p;
  explicit Rng(uint64_t seed) : p(so3rep_rng_create(seed)) {}
  Rng(uint64_t seed, const char* name)
      : p(so3rep_rng_create_named(seed, name)) {}
  ~Rng() { so3rep_rng_destroy(p); }
};

struct Table {
  so3rep_jtable* p;
  explicit Table(int lmax) : p(so3rep_jtable_build(lmax)) {}
  ~Table() { so3rep_jtable_destroy(p); }
};

}  // namespace

TEST_CASE("status constants and the error string") {
  CHECK(SO3REP_OK == 0);
  // A deliberate misuse sets a readable thread-local message.
  CHECK(so3rep_rng_next_u64(nullptr, nullptr) == SO3REP_EINVAL);
  CHECK(std::strlen(so3rep_last_error()) > 0);
}

TEST_CASE("rng streams behave like the core library") {
  Rng a(1), b(1), c(2);
  REQUIRE(a.p != nullptr);
  uint64_t ua = 0, ub = 0, uc = 0;
  CHECK(so3rep_rng_next_u64(a.p, &ua) == SO3REP_OK);
  CHECK(so3rep_rng_next_u64(b.p, &ub) == SO3REP_OK);
  CHECK(so3rep_rng_next_u64(c.p, &uc) == SO3REP_OK);
  CHECK(ua == ub);
  CHECK(ua != uc);

  Rng named(1, "stream"), named2(1, "stream");
  uint64_t n1 = 0, n2 = 0;
  so3rep_rng_next_u64(named.p, &n1);
  so3rep_rng_next_u64(named2.p, &n2);
  CHECK(n1 == n2);
  CHECK(n1 != ua);

  double u = -1.0;
  CHECK(so3rep_rng_uniform(a.p, &u) == SO3REP_OK);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("euler helpers compose, invert, and sample") {
  Rng rng(3, "poses");
  double a[3], b[3], ab[3], back[3], m[9];
  CHECK(so3rep_euler_haar(rng.p, a) == SO3REP_OK);
  CHECK(so3rep_euler_haar(rng.p, b) == SO3REP_OK);
  CHECK(so3rep_euler_compose(a, b, ab) == SO3REP_OK);
  CHECK(so3rep_euler_to_matrix(ab, m) == SO3REP_OK);
  CHECK(so3rep_euler_from_matrix(m, back) == SO3REP_OK);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i] == doctest::Approx(ab[i]).epsilon(1e-9));
  }
  double inv[3], should_be_id[3];
  CHECK(so3rep_euler_inverse(a, inv) == SO3REP_OK);
  CHECK(so3rep_euler_compose(a, inv, should_be_id) == SO3REP_OK);
  double dist = -1.0;
  const double id[3] = {0.0, 0.0, 0.0};
  CHECK(so3rep_rotation_distance(should_be_id, id, &dist) == SO3REP_OK);
  CHECK(dist < 1e-9);

  // A non-rotation matrix is rejected with EINVAL.
  double junk[9] = {2, 0, 0, 0, 2, 0, 0, 0, 2};
  CHECK(so3rep_euler_from_matrix(junk, back) == SO3REP_EINVAL);
}

TEST_CASE("harmonics, quadrature, and analysis round trip") {
  CHECK(so3rep_sh_count(3) == 16);
  double y = 0.0;
  CHECK(so3rep_real_sh(0, 0, 1.0, 2.0, &y) == SO3REP_OK);
  CHECK(y == doctest::Approx(0.28209479177387814).epsilon(1e-12));
  CHECK(so3rep_real_sh(1, 2, 1.0, 2.0, &y) == SO3REP_EINVAL);

  const int L = 4;
  int nodes = 0;
  CHECK(so3rep_quadrature_size(L, &nodes) == SO3REP_OK);
  CHECK(nodes == (L + 1) * (2 * L + 1));
  std::vector<double> theta(nodes), phi(nodes), w(nodes);
  CHECK(so3rep_quadrature_build(L, theta.data(), phi.data(), w.data()) ==
        SO3REP_OK);
  double wsum = 0.0;
  for (double x : w) wsum += x;
  CHECK(wsum == doctest::Approx(4.0 * 3.14159265358979323846).epsilon(1e-12));

  // Synthesize a bandlimited signal and recover its coefficients.
  std::vector<double> coeffs(so3rep_sh_count(L), 0.0);
  coeffs[2] = 1.0;   // (l=1, m=0)
  coeffs[10] = 0.5;  // (l=3, m=-2)
  std::vector<double> samples(nodes);
  for (int k = 0; k < nodes; ++k) {
    CHECK(so3rep_sh_synthesize(L, coeffs.data(), theta[k], phi[k],
                               &samples[k]) == SO3REP_OK);
  }
  std::vector<double> recovered(so3rep_sh_count(L));
  CHECK(so3rep_sh_analyze(L, nodes, samples.data(), recovered.data()) ==
        SO3REP_OK);
  for (int i = 0; i < so3rep_sh_count(L); ++i) {
    CHECK(recovered[i] == doctest::Approx(coeffs[i]).epsilon(1e-10));
  }
}

TEST_CASE("rotation tables build, save, load, and rotate") {
  Table jt(4);
  REQUIRE(jt.p != nullptr);
  CHECK(so3rep_jtable_lmax(jt.p) == 4);

  const std::string path = temp_path("jtable");
  CHECK(so3rep_jtable_save(jt.p, path.c_str()) == SO3REP_OK);
  so3rep_jtable* loaded = so3rep_jtable_load(path.c_str());
  REQUIRE(loaded != nullptr);
  CHECK(so3rep_jtable_lmax(loaded) == 4);

  double j_a[25], j_b[25];
  CHECK(so3rep_jtable_get(jt.p, 2, j_a) == SO3REP_OK);
  CHECK(so3rep_jtable_get(loaded, 2, j_b) == SO3REP_OK);
  CHECK(std::memcmp(j_a, j_b, sizeof(j_a)) == 0);
  so3rep_jtable_destroy(loaded);
  std::remove(path.c_str());
  CHECK(so3rep_jtable_load(path.c_str()) == nullptr);
  CHECK(so3rep_jtable_get(jt.p, 9, j_a) == SO3REP_EINVAL);

  // Rotation consistency: matrix vs apply vs the quadrature oracle.
  Rng rng(4, "rot");
  double g[3];
  so3rep_euler_haar(rng.p, g);
  const int l = 3, dim = 7;
  double mat[49], oracle[49];
  CHECK(so3rep_wigner_matrix(jt.p, l, g, mat) == SO3REP_OK);
  CHECK(so3rep_matrix_elements_oracle(l, g, 4, oracle) == SO3REP_OK);
  for (int i = 0; i < dim * dim; ++i) {
    CHECK(mat[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
  }
  double x[7], rotated[7];
  for (int i = 0; i < 7; ++i) x[i] = 0.1 * (i + 1);
  CHECK(so3rep_wigner_apply(jt.p, l, g, x, rotated) == SO3REP_OK);
  for (int r = 0; r < dim; ++r) {
    double expect = 0.0;
    for (int c = 0; c < dim; ++c) expect += mat[r * dim + c] * x[c];
    CHECK(rotated[r] == doctest::Approx(expect).epsilon(1e-11));
  }
  double d1[7], d2[7], d3[7];
  CHECK(so3rep_wigner_jacobian(jt.p, l, g, x, d1, d2, d3) == SO3REP_OK);
}

TEST_CASE("representation layouts act block by block") {
  so3rep_repspec* spec = so3rep_repspec_parse("0:2,1:2,2:1");
  REQUIRE(spec != nullptr);
  CHECK(so3rep_repspec_dim(spec) == 13);
  CHECK(so3rep_repspec_block_count(spec) == 5);
  CHECK(so3rep_repspec_block_weight(spec, 4) == 2);
  CHECK(so3rep_repspec_max_weight(spec) == 2);
  char buf[64];
  CHECK(so3rep_repspec_to_string(spec, buf, sizeof(buf)) == SO3REP_OK);
  CHECK(std::string(buf) == "0:2,1:2,2:1");

  Table jt(2);
  Rng rng(5, "block");
  double g[3];
  so3rep_euler_haar(rng.p, g);
  double z[13], out[13];
  for (int i = 0; i < 13; ++i) z[i] = 0.3 * (i - 6);
  CHECK(so3rep_block_apply(jt.p, spec, g, z, out) == SO3REP_OK);
  CHECK(out[0] == z[0]);  // weight-0 slices are untouched
  CHECK(out[1] == z[1]);
  double nz = 0.0, nout = 0.0;
  for (int i = 0; i < 13; ++i) {
    nz += z[i] * z[i];
    nout += out[i] * out[i];
  }
  CHECK(nout == doctest::Approx(nz).epsilon(1e-12));
  so3rep_repspec_destroy(spec);

  CHECK(so3rep_repspec_parse("1:x") == nullptr);
  CHECK(std::strlen(so3rep_last_error()) > 0);
}

TEST_CASE("covariance reports flow through the C interface") {
  double tau[8] = {1, 0, 0, 0, 0, 0, 0, 0};
  so3rep_covreport* r = so3rep_circle_covariance(tau, 8, 16);
  REQUIRE(r != nullptr);
  CHECK(so3rep_covreport_dim(r) == 8);
  CHECK(so3rep_covreport_samples(r) == 16);
  double m[64], pred[8], off = -1.0;
  CHECK(so3rep_covreport_matrix(r, m) == SO3REP_OK);
  CHECK(so3rep_covreport_predicted_diag(r, pred) == SO3REP_OK);
  CHECK(so3rep_covreport_max_offdiag(r, &off) == SO3REP_OK);
  CHECK(off < 1e-12);
  for (int k = 0; k < 8; ++k) {
    CHECK(pred[k] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(m[k * 8 + k] == doctest::Approx(0.125).epsilon(1e-12));
  }
  so3rep_covreport_destroy(r);
  CHECK(so3rep_circle_covariance(tau, 8, 4) == nullptr);  // grid too coarse

  // Orbit moment through the API, small sample smoke run.
  Table jt(1);
  so3rep_repspec* spec = so3rep_repspec_parse("1:1");
  Rng rng(6, "orbit");
  double tau3[3] = {1.0, 2.0, 3.0};
  so3rep_covreport* orb =
      so3rep_orbit_covariance_mc(jt.p, spec, tau3, 2000, rng.p);
  REQUIRE(orb != nullptr);
  double pred3[3];
  CHECK(so3rep_covreport_predicted_diag(orb, pred3) == SO3REP_OK);
  CHECK(pred3[0] == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
  so3rep_covreport_destroy(orb);
  so3rep_repspec_destroy(spec);

  double dev = -1.0;
  Rng srng(7, "schur");
  CHECK(so3rep_schur_check(jt.p, 0, 0, 500, srng.p, &dev) == SO3REP_OK);
  CHECK(dev < 1e-12);

  // Factorization: two active frequencies pass, three are rejected.
  double two[8], three[12];
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * 3.14159265358979323846 * i / 8;
    two[i] = std::cos(t) + 0.5 * std::sin(2 * t);
  }
  for (int i = 0; i < 12; ++i) {
    const double t = 2.0 * 3.14159265358979323846 * i / 12;
    three[i] = std::cos(t) + std::cos(2 * t) + std::cos(3 * t);
  }
  Rng frng(8, "factor");
  double gap = -1.0, refine = -1.0;
  CHECK(so3rep_factorization_check(two, 8, 0.2, 128, 2, frng.p, &gap,
                                   &refine) == SO3REP_OK);
  CHECK(gap < 1e-6);
  CHECK(so3rep_factorization_check(three, 12, 0.2, 16, 1, frng.p, &gap,
                                   &refine) == SO3REP_EINVAL);
}

TEST_CASE("the gradient suite reports small discrepancies") {
  Table jt(3);
  double r1 = 1.0, r2 = 1.0, r3 = 1.0, r4 = 1.0;
  CHECK(so3rep_gradient_suite(jt.p, 11, &r1, &r2, &r3, &r4) == SO3REP_OK);
  CHECK(r1 < 1e-5);
  CHECK(r2 < 1e-5);
  CHECK(r3 < 1e-5);
  CHECK(r4 < 1e-5);
}

TEST_CASE("dataset synthesis, io, and the training loop") {
  Table jt(1);
  const std::string data_path = temp_path("dset");
  const std::string truth_path = temp_path("gt");
  CHECK(so3rep_synthesize_dataset(jt.p, "0:1,1:1", 3, 4, 6, 8, 0.05, 21,
                                  data_path.c_str(),
                                  truth_path.c_str()) == SO3REP_OK);
  int n = 0, v = 0, d = 0;
  CHECK(so3rep_dataset_header(data_path.c_str(), &n, &v, &d) == SO3REP_OK);
  CHECK(n == 3);
  CHECK(v == 4);
  CHECK(d == 6);
  std::vector<double> rows(static_cast<std::size_t>(n) * v * d);
  CHECK(so3rep_dataset_read(data_path.c_str(), rows.data()) == SO3REP_OK);

  const std::string tr_path = temp_path("train");
  const std::string held_path = temp_path("held");
  CHECK(so3rep_dataset_split_views(data_path.c_str(), 3, tr_path.c_str(),
                                   held_path.c_str()) == SO3REP_OK);
  int hn = 0, hv = 0, hd = 0;
  CHECK(so3rep_dataset_header(held_path.c_str(), &hn, &hv, &hd) == SO3REP_OK);
  CHECK(hn == 3);
  CHECK(hv == 1);
  CHECK(so3rep_dataset_header("missing_file.bin", &hn, &hv, &hd) ==
        SO3REP_EIO);

  so3rep_trainer* tr = so3rep_trainer_create(jt.p, "0:1,1:1",
                                             tr_path.c_str(), 8, nullptr, 9);
  REQUIRE(tr != nullptr);
  double before = 0.0, after = 0.0;
  CHECK(so3rep_trainer_objective(tr, &before) == SO3REP_OK);
  std::vector<double> trace(20);
  CHECK(so3rep_trainer_train(tr, 20, trace.data()) == SO3REP_OK);
  CHECK(so3rep_trainer_objective(tr, &after) == SO3REP_OK);
  CHECK(after == trace.back());
  CHECK(after > before);

  int tn = 0, tv = 0, tdx = 0, tdz = 0, th = 0, te = 0;
  CHECK(so3rep_trainer_dims(tr, &tn, &tv, &tdx, &tdz, &th, &te) == SO3REP_OK);
  CHECK(tn == 3);
  CHECK(tv == 3);
  CHECK(tdx == 6);
  CHECK(tdz == 4);
  CHECK(th == 8);
  CHECK(te == 20);

  double rmse = -1.0;
  CHECK(so3rep_trainer_recon_rmse(tr, &rmse) == SO3REP_OK);
  CHECK(rmse > 0.0);
  CHECK(rmse < 1.0);

  double pose[3];
  CHECK(so3rep_trainer_latent_pose(tr, 1, 2, pose) == SO3REP_OK);
  std::vector<double> decoded(6);
  CHECK(so3rep_trainer_decode(tr, 1, pose, decoded.data()) == SO3REP_OK);
  CHECK(so3rep_trainer_latent_pose(tr, 5, 0, pose) == SO3REP_EINVAL);

  std::vector<double> held(static_cast<std::size_t>(hn) * hd);
  CHECK(so3rep_dataset_read(held_path.c_str(), held.data()) == SO3REP_OK);
  int succ = -1, trials = -1;
  CHECK(so3rep_trainer_heldout_eval(tr, held.data(), 13, 2, 15, 0.2, &succ,
                                    &trials) == SO3REP_OK);
  CHECK(trials == 3);
  CHECK(succ >= 0);
  CHECK(succ <= 3);

  // Save, reload without data (decode-only), reload with data (resume).
  const std::string ckpt = temp_path("ckpt");
  CHECK(so3rep_trainer_save(tr, ckpt.c_str()) == SO3REP_OK);
  char spec_buf[64];
  CHECK(so3rep_checkpoint_spec(ckpt.c_str(), spec_buf, sizeof(spec_buf)) ==
        SO3REP_OK);
  CHECK(std::string(spec_buf) == "0:1,1:1");

  so3rep_trainer* lite = so3rep_trainer_load(jt.p, ckpt.c_str(), nullptr);
  REQUIRE(lite != nullptr);
  std::vector<double> decoded2(6);
  CHECK(so3rep_trainer_decode(lite, 1, pose, decoded2.data()) == SO3REP_OK);
  CHECK(so3rep_trainer_train(lite, 1, nullptr) == SO3REP_EINVAL);
  double dummy = 0.0;
  CHECK(so3rep_trainer_objective(lite, &dummy) == SO3REP_EINVAL);
  so3rep_trainer_destroy(lite);

  so3rep_trainer* resumed =
      so3rep_trainer_load(jt.p, ckpt.c_str(), tr_path.c_str());
  REQUIRE(resumed != nullptr);
  CHECK(so3rep_trainer_train(resumed, 1, nullptr) == SO3REP_OK);
  so3rep_trainer_destroy(resumed);
  so3rep_trainer_destroy(tr);

  std::remove(data_path.c_str());
  std::remove(truth_path.c_str());
  std::remove(tr_path.c_str());
  std::remove(held_path.c_str());
  std::remove(ckpt.c_str());
}

TEST_CASE("pca fits, whitens, and survives file round trips") {
  // A small anisotropic dataset written through the API.
  const int n = 40, d = 5;
  Rng rng(31, "pca");
  std::vector<double> rows(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      double x = 0.0;
      so3rep_rng_normal(rng.p, &x);
      rows[static_cast<std::size_t>(i) * d + j] = (j + 1) * x;
    }
  }
  const std::string path = temp_path("pca_data");
  CHECK(so3rep_dataset_write(path.c_str(), n, 1, d, rows.data()) ==
        SO3REP_OK);

  so3rep_pca* pca = so3rep_pca_fit(path.c_str(), 1.0);
  REQUIRE(pca != nullptr);
  CHECK(so3rep_pca_input_dim(pca) == d);
  CHECK(so3rep_pca_retained(pca) == d);
  std::vector<double> white(static_cast<std::size_t>(n) * d);
  CHECK(so3rep_pca_whiten(pca, n, rows.data(), white.data()) == SO3REP_OK);

  const std::string wpath = temp_path("pca_white");
  CHECK(so3rep_pca_whiten_file(pca, path.c_str(), wpath.c_str()) ==
        SO3REP_OK);
  int wn = 0, wv = 0, wd = 0;
  CHECK(so3rep_dataset_header(wpath.c_str(), &wn, &wv, &wd) == SO3REP_OK);
  CHECK(wn == n);
  CHECK(wd == d);
  std::vector<double> white2(white.size());
  CHECK(so3rep_dataset_read(wpath.c_str(), white2.data()) == SO3REP_OK);
  for (std::size_t i = 0; i < white.size(); ++i) {
    CHECK(white[i] == white2[i]);
  }
  so3rep_pca_destroy(pca);
  std::remove(path.c_str());
  std::remove(wpath.c_str());
}

TEST_CASE("null handles and bad shapes return EINVAL, not crashes") {
  CHECK(so3rep_jtable_lmax(nullptr) == -1);
  double out[9];
  CHECK(so3rep_wigner_matrix(nullptr, 1, nullptr, out) == SO3REP_EINVAL);
  CHECK(so3rep_block_apply(nullptr, nullptr, nullptr, nullptr, nullptr) ==
        SO3REP_EINVAL);
  CHECK(so3rep_trainer_train(nullptr, 1, nullptr) == SO3REP_EINVAL);
  CHECK(so3rep_jtable_build(-1) == nullptr);
  CHECK(so3rep_trainer_create(nullptr, "1:1", "nope.bin", 4, nullptr, 1) ==
        nullptr);
  Table jt(1);
  CHECK(so3rep_trainer_create(jt.p, "1:1", "definitely_missing.bin", 4,
                              nullptr, 1) == nullptr);
}

