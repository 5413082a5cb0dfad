// so3rep command-line driver.
//
// Subcommands:
//   verify       numerical verification suite -> verify_report.csv
//   decorrelate  orbit / circle second-moment experiments -> CSV reports
//   train        stochastic hard-EM training -> checkpoint, trace, summary
//   sweep        decode a trained instance along a pose path -> DSET tensor
//
// Exit codes: 0 success, 1 numerical check failure or divergence,
// 2 usage/config/I-O error.  Every command is deterministic given
// (config, seed): repeated runs produce byte-identical output files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "so3rep/so3rep.h"

#include "config.hpp"
#include "csv.hpp"

namespace fs = std::filesystem;
using so3cli::CsvWriter;
using so3cli::fmt;
using so3cli::RunConfig;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ExitError {
  int code;
  std::string message;
};

[[noreturn]] void bail(int code, std::string message) {
  throw ExitError{code, std::move(message)};
}

int exit_code_for(int status) {
  switch (status) {
    case SO3REP_EINVAL:
    case SO3REP_EIO:
      return 2;
    default:
      return 1;
  }
}

void require_ok(int status, const std::string& what) {
  if (status != SO3REP_OK) {
    bail(exit_code_for(status), what + ": " + so3rep_last_error());
  }
}

template <typename T>
T* require_handle(T* handle, const std::string& what) {
  if (handle == nullptr) {
    bail(2, what + ": " + so3rep_last_error());
  }
  return handle;
}

struct RngDeleter {
  void operator()(so3rep_rng* p) const { so3rep_rng_destroy(p); }
};
struct JtDeleter {
  void operator()(so3rep_jtable* p) const { so3rep_jtable_destroy(p); }
};
struct SpecDeleter {
  void operator()(so3rep_repspec* p) const { so3rep_repspec_destroy(p); }
};
struct ReportDeleter {
  void operator()(so3rep_covreport* p) const { so3rep_covreport_destroy(p); }
};
struct PcaDeleter {
  void operator()(so3rep_pca* p) const { so3rep_pca_destroy(p); }
};
struct TrainerDeleter {
  void operator()(so3rep_trainer* p) const { so3rep_trainer_destroy(p); }
};

using RngPtr = std::unique_ptr<so3rep_rng, RngDeleter>;
using JtPtr = std::unique_ptr<so3rep_jtable, JtDeleter>;
using SpecPtr = std::unique_ptr<so3rep_repspec, SpecDeleter>;
using ReportPtr = std::unique_ptr<so3rep_covreport, ReportDeleter>;
using PcaPtr = std::unique_ptr<so3rep_pca, PcaDeleter>;
using TrainerPtr = std::unique_ptr<so3rep_trainer, TrainerDeleter>;

RngPtr named_rng(std::uint64_t seed, const char* name) {
  return RngPtr(require_handle(so3rep_rng_create_named(seed, name),
                               "random stream"));
}

// Dense row-major square-matrix helpers for the verification checks.
std::vector<double> mat_mul(const std::vector<double>& a,
                            const std::vector<double>& b, int n) {
  std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double aik = a[static_cast<std::size_t>(i) * n + k];
      for (int j = 0; j < n; ++j) {
        c[static_cast<std::size_t>(i) * n + j] +=
            aik * b[static_cast<std::size_t>(k) * n + j];
      }
    }
  }
  return c;
}

std::vector<double> mat_transpose(const std::vector<double>& a, int n) {
  std::vector<double> t(a.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      t[static_cast<std::size_t>(j) * n + i] =
          a[static_cast<std::size_t>(i) * n + j];
    }
  }
  return t;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

std::vector<double> identity_matrix(int n) {
  std::vector<double> id(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    id[static_cast<std::size_t>(i) * n + i] = 1.0;
  }
  return id;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    bail(2, "cannot create output directory '" + out + "': " + ec.message());
  }
}

// Loads the axis-exchange table from the optional cache path, rebuilding
// (and refreshing the cache) when it is missing or too small.
JtPtr acquire_jtable(const RunConfig& cfg, int lmax) {
  const std::string cache = cfg.get_string("jtable_cache", "");
  if (!cache.empty() && fs::exists(cache)) {
    JtPtr jt(so3rep_jtable_load(cache.c_str()));
    if (jt != nullptr && so3rep_jtable_lmax(jt.get()) >= lmax) {
      return jt;
    }
  }
  JtPtr jt(require_handle(so3rep_jtable_build(lmax), "axis-exchange table"));
  if (!cache.empty()) {
    require_ok(so3rep_jtable_save(jt.get(), cache.c_str()),
               "saving axis-exchange table");
  }
  return jt;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token = text.substr(pos, comma - pos);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (errno != 0 || end == token.c_str() || *end != '\0') {
      bail(2, what + ": expected a comma-separated number list, got '" +
                  text + "'");
    }
    values.push_back(v);
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return values;
}

/* ------------------------------------------------------------- verify -- */

struct CheckRow {
  std::string name;
  double observed;
  double tolerance;
};

int cmd_verify(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::string out = cfg.get_string("out", ".");
  ensure_out_dir(out);

  // A spec key is not used by the checks, but a malformed value is still a
  // configuration error.
  if (cfg.has("spec")) {
    SpecPtr probe(require_handle(
        so3rep_repspec_parse(cfg.get_string("spec", "").c_str()),
        "representation layout"));
  }

  const int homo_lmax = static_cast<int>(cfg.get_int("homo_lmax", 10));
  const int homo_pairs = static_cast<int>(cfg.get_int("homo_pairs", 25));
  const int oracle_lmax = static_cast<int>(cfg.get_int("oracle_lmax", 5));
  const int oracle_samples =
      static_cast<int>(cfg.get_int("oracle_samples", 5));
  const int schur_lmax = static_cast<int>(cfg.get_int("schur_lmax", 2));
  long long schur_samples = cfg.get_int("schur_samples", 200000);
  const long long samples = cfg.get_int("samples", 0);
  if (samples > 0) schur_samples = samples;
  const int zred_l = static_cast<int>(cfg.get_int("zred_l", 35));
  const int circle_n = static_cast<int>(cfg.get_int("circle_n", 16));
  const int circle_ntheta = static_cast<int>(cfg.get_int("circle_ntheta", 64));
  const double factor_sigma = cfg.get_double("factor_sigma", 0.1);
  const int factor_quad = static_cast<int>(cfg.get_int("factor_quad", 256));
  const int factor_probes = static_cast<int>(cfg.get_int("factor_probes", 3));

  if (homo_lmax < 0 || homo_pairs < 1 || oracle_lmax < 0 ||
      oracle_samples < 1 || schur_lmax < 0 || schur_samples < 1 ||
      zred_l < 0 || circle_n < 1 || circle_ntheta < circle_n ||
      factor_quad < 4 || factor_probes < 1) {
    bail(2, "verify: a sample count, band limit, or grid size is out of range");
  }

  const int jt_lmax =
      std::max({homo_lmax, oracle_lmax, schur_lmax, zred_l, 3});
  JtPtr jt = acquire_jtable(cfg, jt_lmax);

  std::vector<CheckRow> rows;

  {  // Homomorphism, unitarity, and inverse over shared Haar pairs.
    RngPtr rng = named_rng(seed, "verify_homo");
    double worst_homo = 0.0, worst_unitary = 0.0, worst_inverse = 0.0;
    for (int pair = 0; pair < homo_pairs; ++pair) {
      double a[3], b[3], ab[3], a_inv[3];
      require_ok(so3rep_euler_haar(rng.get(), a), "Haar sample");
      require_ok(so3rep_euler_haar(rng.get(), b), "Haar sample");
      require_ok(so3rep_euler_compose(a, b, ab), "composition");
      require_ok(so3rep_euler_inverse(a, a_inv), "inversion");
      for (int l = 0; l <= homo_lmax; ++l) {
        const int dim = 2 * l + 1;
        const std::size_t sz = static_cast<std::size_t>(dim) * dim;
        std::vector<double> da(sz), db(sz), dab(sz), dinv(sz);
        require_ok(so3rep_wigner_matrix(jt.get(), l, a, da.data()),
                   "rotation matrix");
        require_ok(so3rep_wigner_matrix(jt.get(), l, b, db.data()),
                   "rotation matrix");
        require_ok(so3rep_wigner_matrix(jt.get(), l, ab, dab.data()),
                   "rotation matrix");
        require_ok(so3rep_wigner_matrix(jt.get(), l, a_inv, dinv.data()),
                   "rotation matrix");
        worst_homo =
            std::max(worst_homo, max_abs_diff(dab, mat_mul(da, db, dim)));
        worst_unitary = std::max(
            worst_unitary,
            max_abs_diff(mat_mul(mat_transpose(da, dim), da, dim),
                         identity_matrix(dim)));
        worst_inverse =
            std::max(worst_inverse, max_abs_diff(dinv, mat_transpose(da, dim)));
      }
    }
    rows.push_back({"homomorphism", worst_homo, 1e-9});
    rows.push_back({"unitarity", worst_unitary, 1e-9});
    rows.push_back({"inverse", worst_inverse, 1e-9});
  }

  {  // A rotation about z must reduce to the in-plane block rotation.
    const int dim = 2 * zred_l + 1;
    const double g[3] = {kPi / 8.0, 0.0, 0.0};
    std::vector<double> dense(static_cast<std::size_t>(dim) * dim);
    require_ok(so3rep_wigner_matrix(jt.get(), zred_l, g, dense.data()),
               "rotation matrix");
    std::vector<double> expected(dense.size(), 0.0);
    std::vector<double> basis(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> column(static_cast<std::size_t>(dim), 0.0);
    for (int j = 0; j < dim; ++j) {
      std::fill(basis.begin(), basis.end(), 0.0);
      basis[static_cast<std::size_t>(j)] = 1.0;
      require_ok(
          so3rep_tz_apply(zred_l, kPi / 8.0, basis.data(), column.data()),
          "in-plane rotation");
      for (int i = 0; i < dim; ++i) {
        expected[static_cast<std::size_t>(i) * dim + j] =
            column[static_cast<std::size_t>(i)];
      }
    }
    rows.push_back({"z_rotation_reduction", max_abs_diff(dense, expected),
                    1e-12});
  }

  {  // Axis-exchange blocks against the quadrature oracle.
    double worst = 0.0;
    for (int l = 0; l <= oracle_lmax; ++l) {
      const int dim = 2 * l + 1;
      const std::size_t sz = static_cast<std::size_t>(dim) * dim;
      std::vector<double> table(sz), oracle(sz);
      require_ok(so3rep_jtable_get(jt.get(), l, table.data()),
                 "axis-exchange block");
      require_ok(so3rep_axis_exchange_oracle(l, oracle_lmax, oracle.data()),
                 "axis-exchange oracle");
      worst = std::max(worst, max_abs_diff(table, oracle));
    }
    rows.push_back({"j_oracle", worst, 1e-8});
  }

  {  // Full rotation matrices against the quadrature oracle.
    RngPtr rng = named_rng(seed, "verify_oracle");
    double worst = 0.0;
    for (int s = 0; s < oracle_samples; ++s) {
      double g[3];
      require_ok(so3rep_euler_haar(rng.get(), g), "Haar sample");
      for (int l = 0; l <= oracle_lmax; ++l) {
        const int dim = 2 * l + 1;
        const std::size_t sz = static_cast<std::size_t>(dim) * dim;
        std::vector<double> dense(sz), oracle(sz);
        require_ok(so3rep_wigner_matrix(jt.get(), l, g, dense.data()),
                   "rotation matrix");
        require_ok(
            so3rep_matrix_elements_oracle(l, g, oracle_lmax, oracle.data()),
            "matrix-element oracle");
        worst = std::max(worst, max_abs_diff(dense, oracle));
      }
    }
    rows.push_back({"wigner_oracle", worst, 1e-8});
  }

  {  // Monte-Carlo orthogonality of matrix elements.
    RngPtr rng = named_rng(seed, "verify_schur");
    double worst = 0.0;
    for (int l = 0; l <= schur_lmax; ++l) {
      for (int lp = l; lp <= schur_lmax; ++lp) {
        double deviation = 0.0;
        require_ok(so3rep_schur_check(jt.get(), l, lp, schur_samples,
                                      rng.get(), &deviation),
                   "orthogonality check");
        worst = std::max(worst, deviation);
      }
    }
    rows.push_back({"schur", worst, 1.5e-2});
  }

  {  // Circle model: impulse template has an exactly flat diagonal.
    std::vector<double> tau(static_cast<std::size_t>(circle_n), 0.0);
    tau[0] = 1.0;
    ReportPtr report(require_handle(
        so3rep_circle_covariance(tau.data(), circle_n, circle_ntheta),
        "circle covariance"));
    const int dim = so3rep_covreport_dim(report.get());
    std::vector<double> matrix(static_cast<std::size_t>(dim) * dim);
    std::vector<double> predicted(static_cast<std::size_t>(dim));
    require_ok(so3rep_covreport_matrix(report.get(), matrix.data()),
               "covariance matrix");
    require_ok(so3rep_covreport_predicted_diag(report.get(), predicted.data()),
               "predicted diagonal");
    double offdiag = 0.0;
    require_ok(so3rep_covreport_max_offdiag(report.get(), &offdiag),
               "off-diagonal maximum");
    double observed = offdiag;
    for (int k = 0; k < dim; ++k) {
      observed = std::max(
          observed, std::abs(matrix[static_cast<std::size_t>(k) * dim + k] -
                             predicted[static_cast<std::size_t>(k)]));
    }
    rows.push_back({"circle", observed, 1e-10});
  }

  {  // Conditional factorization across two frequency blocks.
    std::vector<double> tau(static_cast<std::size_t>(circle_n));
    for (int i = 0; i < circle_n; ++i) {
      const double t = 2.0 * kPi * i / circle_n;
      tau[static_cast<std::size_t>(i)] =
          std::cos(t) + 0.5 * std::sin(2.0 * t);
    }
    RngPtr rng = named_rng(seed, "verify_factor");
    double max_rel_gap = 0.0, refinement_gap = 0.0;
    require_ok(
        so3rep_factorization_check(tau.data(), circle_n, factor_sigma,
                                   factor_quad, factor_probes, rng.get(),
                                   &max_rel_gap, &refinement_gap),
        "factorization check");
    rows.push_back({"factorization", max_rel_gap, 1e-6});
  }

  {  // Finite-difference agreement of every analytic derivative.
    double rotation_err = 0.0, block_err = 0.0, decoder_err = 0.0,
           log_joint_err = 0.0;
    require_ok(so3rep_gradient_suite(jt.get(), seed, &rotation_err,
                                     &block_err, &decoder_err,
                                     &log_joint_err),
               "gradient suite");
    rows.push_back({"grad_rotation", rotation_err, 1e-5});
    rows.push_back({"grad_block", block_err, 1e-5});
    rows.push_back({"grad_decoder", decoder_err, 1e-5});
    rows.push_back({"grad_log_joint", log_joint_err, 1e-5});
  }

  if (cfg.has("tolerance")) {
    const double tol = cfg.get_double("tolerance", 0.0);
    for (CheckRow& row : rows) {
      row.tolerance = tol;
    }
  }

  CsvWriter csv(join_path(out, "verify_report.csv"));
  csv.row({"check", "observed", "tolerance", "status"});
  int failures = 0;
  for (const CheckRow& row : rows) {
    const bool pass = row.observed <= row.tolerance;
    if (!pass) ++failures;
    csv.row({row.name, fmt(row.observed), fmt(row.tolerance),
             pass ? "pass" : "fail"});
    std::cout << (pass ? "[pass] " : "[FAIL] ") << row.name
              << " observed=" << fmt(row.observed)
              << " tolerance=" << fmt(row.tolerance) << "\n";
  }
  std::cout << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: " + std::to_string(failures) +
                                    " check(s) failed\n");
  return failures == 0 ? 0 : 1;
}

/* -------------------------------------------------------- decorrelate -- */

void write_covariance_reports(const so3rep_covreport* report,
                              const std::string& mode,
                              const std::string& matrix_path,
                              const std::string& summary_path) {
  const int dim = so3rep_covreport_dim(report);
  std::vector<double> matrix(static_cast<std::size_t>(dim) * dim);
  std::vector<double> predicted(static_cast<std::size_t>(dim));
  double offdiag = 0.0;
  require_ok(so3rep_covreport_matrix(report, matrix.data()),
             "covariance matrix");
  require_ok(so3rep_covreport_predicted_diag(report, predicted.data()),
             "predicted diagonal");
  require_ok(so3rep_covreport_max_offdiag(report, &offdiag),
             "off-diagonal maximum");

  CsvWriter matrix_csv(matrix_path);
  std::vector<std::string> header;
  header.reserve(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    header.push_back("c" + std::to_string(j));
  }
  matrix_csv.row(header);
  for (int i = 0; i < dim; ++i) {
    std::vector<std::string> cells;
    cells.reserve(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      cells.push_back(fmt(matrix[static_cast<std::size_t>(i) * dim + j]));
    }
    matrix_csv.row(cells);
  }

  // Diagonal error relative to the largest predicted entry, so that zero
  // predictions (inactive coordinates) do not blow up the ratio.
  double max_pred = 0.0;
  for (int k = 0; k < dim; ++k) {
    max_pred = std::max(max_pred, std::abs(predicted[static_cast<std::size_t>(k)]));
  }
  double diag_err = 0.0;
  for (int k = 0; k < dim; ++k) {
    diag_err = std::max(
        diag_err, std::abs(matrix[static_cast<std::size_t>(k) * dim + k] -
                           predicted[static_cast<std::size_t>(k)]));
  }
  const double rel = max_pred > 0.0 ? diag_err / max_pred : diag_err;

  CsvWriter summary_csv(summary_path);
  summary_csv.row({"mode", "dim", "samples", "max_offdiag",
                   "max_diag_err_rel"});
  summary_csv.row({mode, std::to_string(dim),
                   std::to_string(so3rep_covreport_samples(report)),
                   fmt(offdiag), fmt(rel)});
  std::cout << mode << ": dim=" << dim << " max_offdiag=" << fmt(offdiag)
            << " max_diag_err_rel=" << fmt(rel) << "\n";
}

int cmd_decorrelate(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::string out = cfg.get_string("out", ".");
  const std::string mode = cfg.get_string("mode", "both");
  if (mode != "circle" && mode != "orbit" && mode != "both") {
    bail(2, "decorrelate: mode must be circle, orbit, or both");
  }
  ensure_out_dir(out);

  if (mode == "circle" || mode == "both") {
    const int n = static_cast<int>(cfg.get_int("circle_n", 16));
    const int n_theta = static_cast<int>(cfg.get_int("circle_ntheta", 64));
    if (n < 1) bail(2, "decorrelate: circle_n must be positive");
    std::vector<double> tau;
    const std::string tau_text = cfg.get_string("circle_tau", "impulse");
    if (tau_text == "impulse") {
      tau.assign(static_cast<std::size_t>(n), 0.0);
      tau[0] = 1.0;
    } else {
      tau = parse_double_list(tau_text, "circle_tau");
      if (static_cast<int>(tau.size()) != n) {
        bail(2, "decorrelate: circle_tau needs exactly " + std::to_string(n) +
                    " entries");
      }
    }
    ReportPtr report(require_handle(
        so3rep_circle_covariance(tau.data(), n, n_theta),
        "circle covariance"));
    write_covariance_reports(report.get(), "circle",
                             join_path(out, "circle_matrix.csv"),
                             join_path(out, "circle_summary.csv"));
  }

  if (mode == "orbit" || mode == "both") {
    const std::string spec_text = cfg.get_string("spec", "1:2,2:1");
    SpecPtr spec(require_handle(so3rep_repspec_parse(spec_text.c_str()),
                                "representation layout"));
    const int dim = so3rep_repspec_dim(spec.get());
    std::vector<double> tau;
    const std::string tau_text = cfg.get_string("orbit_tau", "random");
    if (tau_text == "random") {
      RngPtr rng = named_rng(seed, "orbit_tau");
      tau.resize(static_cast<std::size_t>(dim));
      for (double& v : tau) {
        require_ok(so3rep_rng_normal(rng.get(), &v), "template draw");
      }
      // Copies of the same weight share identical matrix elements, so
      // their cross moments survive Haar averaging unless the copy
      // templates are orthogonal.  Orthogonalize same-weight copies so
      // the demonstrated second moment is exactly diagonal; pass an
      // explicit orbit_tau list to study a generic template instead.
      const int blocks = so3rep_repspec_block_count(spec.get());
      int offset_i = 0;
      for (int i = 0; i < blocks; ++i) {
        const int wi = so3rep_repspec_block_weight(spec.get(), i);
        const int di = 2 * wi + 1;
        int offset_j = 0;
        for (int j = 0; j < i; ++j) {
          const int wj = so3rep_repspec_block_weight(spec.get(), j);
          if (wj == wi) {
            double dot = 0.0, nrm = 0.0;
            for (int k = 0; k < di; ++k) {
              dot += tau[static_cast<std::size_t>(offset_i + k)] *
                     tau[static_cast<std::size_t>(offset_j + k)];
              nrm += tau[static_cast<std::size_t>(offset_j + k)] *
                     tau[static_cast<std::size_t>(offset_j + k)];
            }
            if (nrm > 0.0) {
              for (int k = 0; k < di; ++k) {
                tau[static_cast<std::size_t>(offset_i + k)] -=
                    (dot / nrm) * tau[static_cast<std::size_t>(offset_j + k)];
              }
            }
          }
          offset_j += 2 * wj + 1;
        }
        offset_i += di;
      }
    } else {
      tau = parse_double_list(tau_text, "orbit_tau");
      if (static_cast<int>(tau.size()) != dim) {
        bail(2, "decorrelate: orbit_tau needs exactly " +
                    std::to_string(dim) + " entries");
      }
    }
    const long long n_samples = cfg.get_int("samples", 100000);
    if (n_samples < 1) bail(2, "decorrelate: samples must be positive");
    JtPtr jt = acquire_jtable(cfg, so3rep_repspec_max_weight(spec.get()));
    RngPtr rng = named_rng(seed, "orbit_mc");
    ReportPtr report(require_handle(
        so3rep_orbit_covariance_mc(jt.get(), spec.get(), tau.data(),
                                   n_samples, rng.get()),
        "orbit covariance"));
    write_covariance_reports(report.get(), "orbit",
                             join_path(out, "orbit_matrix.csv"),
                             join_path(out, "orbit_summary.csv"));
  }
  return 0;
}

/* -------------------------------------------------------------- train -- */

int cmd_train(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::string out = cfg.get_string("out", ".");
  ensure_out_dir(out);

  const std::string spec_text = cfg.get_string("spec", "0:2,1:2,2:1");
  SpecPtr spec(require_handle(so3rep_repspec_parse(spec_text.c_str()),
                              "representation layout"));

  const int epochs = static_cast<int>(cfg.get_int("epochs", 200));
  const int instances = static_cast<int>(cfg.get_int("instances", 20));
  const int views = static_cast<int>(cfg.get_int("views", 8));
  const int dx = static_cast<int>(cfg.get_int("dx", 30));
  const int hidden = static_cast<int>(cfg.get_int("hidden", 128));
  const double sigma_true = cfg.get_double("sigma_true", 0.05);
  const double pca_fraction = cfg.get_double("pca_fraction", 1.0);
  const bool holdout = cfg.get_int("holdout", 1) != 0;
  const double hyper[5] = {
      cfg.get_double("beta", 0.1), cfg.get_double("alpha", 0.1),
      cfg.get_double("lr_e", 0.18), cfg.get_double("lr_m", 0.04),
      cfg.get_double("adagrad_eps", 1e-8)};

  if (epochs < 0 || instances < 1 || views < 1 || dx < 1 || hidden < 1 ||
      sigma_true < 0.0) {
    bail(2, "train: a dimension, count, or scale is out of range");
  }
  if (!(pca_fraction > 0.0 && pca_fraction <= 1.0)) {
    bail(2, "train: pca_fraction must lie in (0, 1]");
  }

  JtPtr jt = acquire_jtable(cfg, so3rep_repspec_max_weight(spec.get()));

  std::string train_path;
  std::vector<double> held_rows;  // one held-out view per instance
  int trained_instances = instances;

  if (cfg.has("dataset")) {
    train_path = cfg.get_string("dataset", "");
    if (!fs::exists(train_path)) {
      bail(2, "train: dataset file does not exist: " + train_path);
    }
    int file_n = 0, file_v = 0, file_d = 0;
    require_ok(so3rep_dataset_header(train_path.c_str(), &file_n, &file_v,
                                     &file_d),
               "reading dataset");
    trained_instances = file_n;
    // A user-provided dataset carries no held-out views; the held-out-pose
    // protocol only runs on synthesized data.
  } else {
    const std::string full_path = join_path(out, "dataset.bin");
    const std::string truth_path = join_path(out, "ground_truth.bin");
    const int total_views = views + (holdout ? 1 : 0);
    require_ok(so3rep_synthesize_dataset(jt.get(), spec_text.c_str(),
                                         instances, total_views, dx, hidden,
                                         sigma_true, seed, full_path.c_str(),
                                         truth_path.c_str()),
               "synthesizing dataset");
    if (holdout) {
      train_path = join_path(out, "train_views.bin");
      const std::string held_path = join_path(out, "held_views.bin");
      require_ok(so3rep_dataset_split_views(full_path.c_str(), views,
                                            train_path.c_str(),
                                            held_path.c_str()),
                 "splitting held-out views");
      held_rows.resize(static_cast<std::size_t>(instances) * dx);
      require_ok(so3rep_dataset_read(held_path.c_str(), held_rows.data()),
                 "reading held-out views");
    } else {
      train_path = full_path;
    }
  }

  if (pca_fraction < 1.0) {
    PcaPtr pca(require_handle(
        so3rep_pca_fit(train_path.c_str(), pca_fraction), "PCA fit"));
    const int retained = so3rep_pca_retained(pca.get());
    const std::string white_path = join_path(out, "train_whitened.bin");
    require_ok(so3rep_pca_whiten_file(pca.get(), train_path.c_str(),
                                      white_path.c_str()),
               "whitening dataset");
    train_path = white_path;
    if (!held_rows.empty()) {
      std::vector<double> whitened(
          static_cast<std::size_t>(trained_instances) * retained);
      require_ok(so3rep_pca_whiten(pca.get(), trained_instances,
                                   held_rows.data(), whitened.data()),
                 "whitening held-out views");
      held_rows = std::move(whitened);
    }
    std::cout << "pca: retained " << retained << " components\n";
  }

  TrainerPtr trainer(require_handle(
      so3rep_trainer_create(jt.get(), spec_text.c_str(), train_path.c_str(),
                            hidden, hyper, seed),
      "trainer"));

  double initial_objective = 0.0;
  require_ok(so3rep_trainer_objective(trainer.get(), &initial_objective),
             "objective");

  std::vector<double> trace(static_cast<std::size_t>(std::max(epochs, 1)),
                            0.0);
  const int train_status =
      so3rep_trainer_train(trainer.get(), epochs, trace.data());
  if (train_status == SO3REP_EDIVERGED) {
    std::cerr << "train: " << so3rep_last_error() << "\n";
    return 1;
  }
  require_ok(train_status, "training");

  {
    CsvWriter trace_csv(join_path(out, "train_trace.csv"));
    trace_csv.row({"epoch", "objective"});
    trace_csv.row({"0", fmt(initial_objective)});
    for (int e = 0; e < epochs; ++e) {
      trace_csv.row({std::to_string(e + 1),
                     fmt(trace[static_cast<std::size_t>(e)])});
    }
  }

  const std::string ckpt_path =
      cfg.get_string("checkpoint", join_path(out, "checkpoint.bin"));
  require_ok(so3rep_trainer_save(trainer.get(), ckpt_path.c_str()),
             "saving checkpoint");

  const double final_objective =
      epochs > 0 ? trace[static_cast<std::size_t>(epochs - 1)]
                 : initial_objective;
  double rmse = 0.0;
  require_ok(so3rep_trainer_recon_rmse(trainer.get(), &rmse),
             "reconstruction error");

  int held_successes = -1, held_trials = -1;
  if (!held_rows.empty()) {
    const int restarts =
        static_cast<int>(cfg.get_int("heldout_restarts", 16));
    const int steps = static_cast<int>(cfg.get_int("heldout_steps", 60));
    const double lr = cfg.get_double("heldout_lr", 0.2);
    require_ok(so3rep_trainer_heldout_eval(trainer.get(), held_rows.data(),
                                           seed, restarts, steps, lr,
                                           &held_successes, &held_trials),
               "held-out evaluation");
  }

  {
    CsvWriter summary(join_path(out, "train_summary.csv"));
    summary.row({"key", "value"});
    summary.row({"spec", spec_text});
    summary.row({"instances", std::to_string(trained_instances)});
    summary.row({"views", std::to_string(views)});
    summary.row({"hidden", std::to_string(hidden)});
    summary.row({"epochs", std::to_string(epochs)});
    summary.row({"initial_objective", fmt(initial_objective)});
    summary.row({"final_objective", fmt(final_objective)});
    summary.row({"recon_rmse", fmt(rmse)});
    if (held_trials >= 0) {
      summary.row({"heldout_successes", std::to_string(held_successes)});
      summary.row({"heldout_trials", std::to_string(held_trials)});
      summary.row(
          {"heldout_rate",
           fmt(held_trials > 0
                   ? static_cast<double>(held_successes) / held_trials
                   : 0.0)});
    }
  }

  std::cout << "train: objective " << fmt(initial_objective) << " -> "
            << fmt(final_objective) << ", recon_rmse " << fmt(rmse);
  if (held_trials >= 0) {
    std::cout << ", held-out " << held_successes << "/" << held_trials;
  }
  std::cout << "\n";
  return 0;
}

/* -------------------------------------------------------------- sweep -- */

struct PoseRef {
  bool is_view = false;
  int view = 0;
  double angles[3] = {0.0, 0.0, 0.0};
};

PoseRef parse_pose_ref(const std::string& text) {
  PoseRef ref;
  if (text.rfind("view:", 0) == 0) {
    ref.is_view = true;
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(text.c_str() + 5, &end, 10);
    if (errno != 0 || end == text.c_str() + 5 || *end != '\0' || v < 0) {
      bail(2, "sweep: expected view:<index>, got '" + text + "'");
    }
    ref.view = static_cast<int>(v);
    return ref;
  }
  const std::vector<double> angles = parse_double_list(text, "sweep pose");
  if (angles.size() != 3) {
    bail(2, "sweep: a pose needs three angles, got '" + text + "'");
  }
  ref.angles[0] = angles[0];
  ref.angles[1] = angles[1];
  ref.angles[2] = angles[2];
  return ref;
}

int cmd_sweep(const RunConfig& cfg) {
  const std::string out = cfg.get_string("out", ".");
  ensure_out_dir(out);
  const std::string ckpt_path =
      cfg.get_string("checkpoint", join_path(out, "checkpoint.bin"));

  char spec_buf[256];
  require_ok(so3rep_checkpoint_spec(ckpt_path.c_str(), spec_buf,
                                    sizeof(spec_buf)),
             "reading checkpoint");
  SpecPtr spec(require_handle(so3rep_repspec_parse(spec_buf),
                              "checkpoint layout"));
  JtPtr jt = acquire_jtable(cfg, so3rep_repspec_max_weight(spec.get()));

  TrainerPtr trainer(require_handle(
      so3rep_trainer_load(jt.get(), ckpt_path.c_str(), nullptr),
      "loading checkpoint"));

  int n = 0, v = 0, dx = 0;
  require_ok(so3rep_trainer_dims(trainer.get(), &n, &v, &dx, nullptr,
                                 nullptr, nullptr),
             "checkpoint dimensions");

  const int instance = static_cast<int>(cfg.get_int("instance", 0));
  if (instance < 0 || instance >= n) {
    bail(2, "sweep: unknown instance " + std::to_string(instance) +
                " (checkpoint has " + std::to_string(n) + ")");
  }
  const int steps = static_cast<int>(cfg.get_int("sweep_steps", 40));
  if (steps < 1) {
    bail(2, "sweep: sweep_steps must be positive");
  }

  auto resolve = [&](const PoseRef& ref, double g[3]) {
    if (ref.is_view) {
      if (ref.view >= v) {
        bail(2, "sweep: view " + std::to_string(ref.view) +
                    " out of range (checkpoint has " + std::to_string(v) +
                    ")");
      }
      require_ok(so3rep_trainer_latent_pose(trainer.get(), instance, ref.view,
                                            g),
                 "trained pose");
    } else {
      g[0] = ref.angles[0];
      g[1] = ref.angles[1];
      g[2] = ref.angles[2];
    }
  };

  double from[3], to[3];
  resolve(parse_pose_ref(cfg.get_string("sweep_from", "view:0")), from);
  if (!cfg.has("sweep_to") && v < 2) {
    // Single-view checkpoints default to a constant path.
    to[0] = from[0];
    to[1] = from[1];
    to[2] = from[2];
  } else {
    resolve(parse_pose_ref(cfg.get_string("sweep_to", "view:1")), to);
  }

  std::vector<double> rows(static_cast<std::size_t>(steps) * dx);
  CsvWriter grid_csv(join_path(out, "sweep_grid.csv"));
  grid_csv.row({"step", "g1", "g2", "g3"});
  for (int s = 0; s < steps; ++s) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(s) / (steps - 1);
    double g[3];
    for (int k = 0; k < 3; ++k) {
      // Shortest-arc interpolation per angle.
      const double delta = std::remainder(to[k] - from[k], 2.0 * kPi);
      g[k] = from[k] + t * delta;
    }
    grid_csv.row({std::to_string(s), fmt(g[0]), fmt(g[1]), fmt(g[2])});
    require_ok(so3rep_trainer_decode(trainer.get(), instance, g,
                                     rows.data() +
                                         static_cast<std::size_t>(s) * dx),
               "decoding pose");
  }
  const std::string sweep_path = join_path(out, "sweep.bin");
  require_ok(so3rep_dataset_write(sweep_path.c_str(), steps, 1, dx,
                                  rows.data()),
             "writing sweep tensor");
  std::cout << "sweep: wrote " << steps << " poses of instance " << instance
            << " to " << sweep_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotation-representation verification, decorrelation "
               "experiments, and hard-EM training"};
  app.require_subcommand(1);

  struct Flags {
    std::optional<std::string> config, out, spec;
    std::optional<std::uint64_t> seed;
    std::optional<long long> samples;
    std::optional<double> tolerance;
    std::vector<std::string> sets;
  } flags;

  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option_function<std::string>(
        "--config",
        [&flags](const std::string& v) { flags.config = v; },
        "Flat key=value configuration file");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&flags](std::uint64_t v) { flags.seed = v; },
        "Master random seed");
    sub->add_option_function<std::string>(
        "--out", [&flags](const std::string& v) { flags.out = v; },
        "Output directory");
    sub->add_option_function<std::string>(
        "--spec", [&flags](const std::string& v) { flags.spec = v; },
        "Representation layout, e.g. 0:2,1:2,2:1");
    sub->add_option_function<long long>(
        "--samples", [&flags](long long v) { flags.samples = v; },
        "Monte-Carlo sample count");
    sub->add_option_function<double>(
        "--tolerance", [&flags](double v) { flags.tolerance = v; },
        "Override every per-check tolerance");
    sub->add_option("--set", flags.sets, "Override a config key=value")
        ->allow_extra_args(false);
  };

  CLI::App* verify =
      app.add_subcommand("verify", "Run the numerical verification suite");
  CLI::App* decorrelate = app.add_subcommand(
      "decorrelate", "Estimate orbit/circle second moments");
  CLI::App* train =
      app.add_subcommand("train", "Train the latent model by hard EM");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Decode a trained instance along a pose path");
  for (CLI::App* sub : {verify, decorrelate, train, sweep}) {
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (flags.config) {
      cfg.load_file(*flags.config);
    }
    for (const std::string& pair : flags.sets) {
      cfg.set_pair(pair);
    }
    if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
    if (flags.out) cfg.set("out", *flags.out);
    if (flags.spec) cfg.set("spec", *flags.spec);
    if (flags.samples) cfg.set("samples", std::to_string(*flags.samples));
    if (flags.tolerance) cfg.set("tolerance", fmt(*flags.tolerance));

    if (app.got_subcommand(verify)) return cmd_verify(cfg);
    if (app.got_subcommand(decorrelate)) return cmd_decorrelate(cfg);
    if (app.got_subcommand(train)) return cmd_train(cfg);
    if (app.got_subcommand(sweep)) return cmd_sweep(cfg);
    return 2;
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
