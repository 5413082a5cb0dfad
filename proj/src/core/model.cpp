#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "core/errors.hpp"

namespace so3rep {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_tensor(std::ofstream& out, const Eigen::MatrixXd& m) {
  RowMajorMatrix tmp = m;
  out.write(reinterpret_cast<const char*>(tmp.data()),
            static_cast<std::streamsize>(sizeof(double) * tmp.size()));
}

Eigen::MatrixXd read_tensor(std::ifstream& in, Eigen::Index rows,
                            Eigen::Index cols, const std::string& path) {
  RowMajorMatrix tmp(rows, cols);
  in.read(reinterpret_cast<char*>(tmp.data()),
          static_cast<std::streamsize>(sizeof(double) * tmp.size()));
  if (!in) {
    throw IoError("file truncated: " + path);
  }
  return tmp;
}

// Forward pass with the intermediates needed for backprop.
struct DecoderForward {
  Eigen::VectorXd h;  // tanh activations
  Eigen::VectorXd y;  // output
};

DecoderForward decode_forward(const DecoderParams& p,
                              const Eigen::VectorXd& z) {
  DecoderForward f;
  f.h = (p.W1 * z + p.b1).array().tanh();
  f.y = p.W2 * f.h + p.b2;
  return f;
}

void check_model_shapes(const RepSpec& spec, const ViewSet& X,
                        const std::vector<EulerZYZ>& G,
                        const Eigen::VectorXd& z, const DecoderParams& p) {
  if (p.W1.rows() != p.b1.size() || p.W2.cols() != p.W1.rows() ||
      p.W2.rows() != p.b2.size()) {
    throw std::invalid_argument("decoder parameter shapes are inconsistent");
  }
  if (z.size() != spec.dim() || p.dz() != spec.dim()) {
    throw std::invalid_argument(
        "latent dimension does not match the representation layout");
  }
  if (X.rows() != p.dx()) {
    throw std::invalid_argument("view dimension does not match the decoder");
  }
  if (static_cast<std::size_t>(X.cols()) != G.size()) {
    throw std::invalid_argument("one pose per view is required");
  }
}

}  // namespace

double DecoderParams::squared_norm() const {
  return W1.squaredNorm() + b1.squaredNorm() + W2.squaredNorm() +
         b2.squaredNorm();
}

DecoderParams DecoderParams::init(int dz, int hidden, int dx, RngStream& rng) {
  if (dz < 1 || hidden < 1 || dx < 1) {
    throw std::invalid_argument("decoder dimensions must be positive");
  }
  DecoderParams p;
  p.W1.resize(hidden, dz);
  p.b1.resize(hidden);
  p.W2.resize(dx, hidden);
  p.b2.resize(dx);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dz));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index c = 0; c < p.W1.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.W1.rows(); ++r) {
      p.W1(r, c) = s1 * rng.normal();
    }
  }
  for (Eigen::Index r = 0; r < p.b1.size(); ++r) {
    p.b1(r) = s1 * rng.normal();
  }
  for (Eigen::Index c = 0; c < p.W2.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.W2.rows(); ++r) {
      p.W2(r, c) = s2 * rng.normal();
    }
  }
  for (Eigen::Index r = 0; r < p.b2.size(); ++r) {
    p.b2(r) = s2 * rng.normal();
  }
  p.ln_sigma_x = 0.0;
  return p;
}

Eigen::VectorXd decode(const DecoderParams& params, const Eigen::VectorXd& z) {
  if (z.size() != params.dz()) {
    throw std::invalid_argument("decode: latent dimension mismatch");
  }
  return decode_forward(params, z).y;
}

Eigen::VectorXd decode_jvp(const DecoderParams& params,
                           const Eigen::VectorXd& z,
                           const Eigen::VectorXd& v) {
  if (z.size() != params.dz() || v.size() != params.dz()) {
    throw std::invalid_argument("decode_jvp: latent dimension mismatch");
  }
  const Eigen::VectorXd h = (params.W1 * z + params.b1).array().tanh();
  const Eigen::VectorXd gate = (1.0 - h.array().square()).matrix();
  return params.W2 * (gate.cwiseProduct(params.W1 * v));
}

double log_joint(const JTable& jt, const RepSpec& spec, const ViewSet& X,
                 const std::vector<EulerZYZ>& G, const Eigen::VectorXd& z,
                 const DecoderParams& params, const HyperParams& hp) {
  check_model_shapes(spec, X, G, z, params);
  const double sigma = std::exp(params.ln_sigma_x);
  double residual_sq = 0.0;
  for (Eigen::Index v = 0; v < X.cols(); ++v) {
    const Eigen::VectorXd zr = block_apply(jt, spec, G[v], z);
    residual_sq += (X.col(v) - decode_forward(params, zr).y).squaredNorm();
  }
  const double views_dx =
      static_cast<double>(X.cols()) * static_cast<double>(X.rows());
  return -residual_sq / (2.0 * sigma * sigma) -
         0.5 * views_dx * params.ln_sigma_x - 0.5 * z.squaredNorm() -
         0.5 * hp.beta * params.squared_norm() -
         0.5 * hp.alpha * params.ln_sigma_x * params.ln_sigma_x;
}

ModelGrads grad_log_joint(const JTable& jt, const RepSpec& spec,
                          const ViewSet& X, const std::vector<EulerZYZ>& G,
                          const Eigen::VectorXd& z, const DecoderParams& params,
                          const HyperParams& hp) {
  check_model_shapes(spec, X, G, z, params);
  const double sigma = std::exp(params.ln_sigma_x);
  const double inv_var = 1.0 / (sigma * sigma);

  ModelGrads grads;
  grads.d_z = Eigen::VectorXd::Zero(z.size());
  grads.d_g.assign(G.size(), {0.0, 0.0, 0.0});
  grads.d_W1 = Eigen::MatrixXd::Zero(params.W1.rows(), params.W1.cols());
  grads.d_b1 = Eigen::VectorXd::Zero(params.b1.size());
  grads.d_W2 = Eigen::MatrixXd::Zero(params.W2.rows(), params.W2.cols());
  grads.d_b2 = Eigen::VectorXd::Zero(params.b2.size());

  double residual_sq = 0.0;
  for (Eigen::Index v = 0; v < X.cols(); ++v) {
    const Eigen::VectorXd zr = block_apply(jt, spec, G[v], z);
    const DecoderForward f = decode_forward(params, zr);
    const Eigen::VectorXd r = X.col(v) - f.y;
    residual_sq += r.squaredNorm();

    // d(log joint)/dy = r / sigma^2, then standard backprop through the
    // one-hidden-layer network.
    const Eigen::VectorXd dy = inv_var * r;
    const Eigen::VectorXd dh =
        (params.W2.transpose() * dy).cwiseProduct(
            (1.0 - f.h.array().square()).matrix());
    const Eigen::VectorXd dzr = params.W1.transpose() * dh;

    grads.d_W2.noalias() += dy * f.h.transpose();
    grads.d_b2 += dy;
    grads.d_W1.noalias() += dh * zr.transpose();
    grads.d_b1 += dh;

    // The rotation operator is orthogonal, so its transpose is the rotation
    // by the inverse element.
    grads.d_z += block_apply(jt, spec, inverse(G[v]), dzr);

    const EulerJacobian jac = block_apply_jacobian(jt, spec, G[v], z);
    grads.d_g[static_cast<std::size_t>(v)] = {dzr.dot(jac.d_g1),
                                              dzr.dot(jac.d_g2),
                                              dzr.dot(jac.d_g3)};
  }

  grads.d_z -= z;
  grads.d_W1 -= hp.beta * params.W1;
  grads.d_b1 -= hp.beta * params.b1;
  grads.d_W2 -= hp.beta * params.W2;
  grads.d_b2 -= hp.beta * params.b2;

  const double views_dx =
      static_cast<double>(X.cols()) * static_cast<double>(X.rows());
  grads.d_ln_sigma = residual_sq * inv_var - 0.5 * views_dx -
                     hp.alpha * params.ln_sigma_x;
  return grads;
}

void adagrad_update(Eigen::Ref<Eigen::MatrixXd> param,
                    const Eigen::MatrixXd& grad,
                    Eigen::Ref<Eigen::MatrixXd> acc, double lr, double eps) {
  acc.array() += grad.array().square();
  param.array() += lr * grad.array() / (acc.array() + eps).sqrt();
}

void adagrad_update(Eigen::Ref<Eigen::VectorXd> param,
                    const Eigen::VectorXd& grad,
                    Eigen::Ref<Eigen::VectorXd> acc, double lr, double eps) {
  acc.array() += grad.array().square();
  param.array() += lr * grad.array() / (acc.array() + eps).sqrt();
}

void adagrad_update(double& param, double grad, double& acc, double lr,
                    double eps) {
  acc += grad * grad;
  param += lr * grad / std::sqrt(acc + eps);
}

Trainer::Trainer(const JTable& jt, RepSpec spec, Dataset data, int hidden,
                 HyperParams hp, std::uint64_t seed)
    : jt_(&jt), spec_(std::move(spec)), data_(std::move(data)), hp_(hp),
      seed_(seed) {
  if (data_.n_instances < 1 || data_.views < 1 || data_.dx < 1) {
    throw std::invalid_argument("trainer requires a non-empty dataset");
  }
  if (data_.X.rows() !=
          static_cast<Eigen::Index>(data_.n_instances) * data_.views ||
      data_.X.cols() != data_.dx) {
    throw std::invalid_argument("dataset shape does not match its header");
  }
  if (hidden < 1) {
    throw std::invalid_argument("hidden width must be positive");
  }
  if (spec_.dim() < 1) {
    throw std::invalid_argument("representation layout is empty");
  }
  if (spec_.max_weight() > jt_->l_max()) {
    throw std::invalid_argument(
        "axis-exchange table does not cover the representation layout");
  }

  RngStream theta_rng(seed_, "init_theta");
  params_ = DecoderParams::init(spec_.dim(), hidden, data_.dx, theta_rng);

  RngStream z_rng(seed_, "init_z");
  latents_.resize(static_cast<std::size_t>(data_.n_instances));
  for (auto& lat : latents_) {
    lat.z.resize(spec_.dim());
    for (Eigen::Index i = 0; i < lat.z.size(); ++i) {
      lat.z(i) = z_rng.normal();
    }
    lat.G.assign(static_cast<std::size_t>(data_.views), euler_identity());
  }

  acc_theta_.W1 = Eigen::MatrixXd::Zero(params_.W1.rows(), params_.W1.cols());
  acc_theta_.b1 = Eigen::VectorXd::Zero(params_.b1.size());
  acc_theta_.W2 = Eigen::MatrixXd::Zero(params_.W2.rows(), params_.W2.cols());
  acc_theta_.b2 = Eigen::VectorXd::Zero(params_.b2.size());
  acc_theta_.ln_sigma_x = 0.0;
  acc_z_.assign(latents_.size(), Eigen::VectorXd::Zero(spec_.dim()));
  acc_g_.assign(latents_.size(),
                Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(data_.views)));
}

namespace {

ViewSet instance_views(const Dataset& data, int n) {
  ViewSet X(data.dx, data.views);
  for (int v = 0; v < data.views; ++v) {
    X.col(v) = data.view(n, v);
  }
  return X;
}

}  // namespace

void Trainer::e_step(int n) {
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  if (n < 0 || n >= data_.n_instances) {
    throw std::out_of_range("instance index out of range");
  }
  LatentState& lat = latents_[static_cast<std::size_t>(n)];
  const ViewSet X = instance_views(data_, n);
  const ModelGrads grads =
      grad_log_joint(*jt_, spec_, X, lat.G, lat.z, params_, hp_);

  adagrad_update(lat.z, grads.d_z, acc_z_[static_cast<std::size_t>(n)],
                 hp_.lr_e, hp_.adagrad_eps);

  Eigen::VectorXd angles(3 * static_cast<Eigen::Index>(data_.views));
  Eigen::VectorXd dg(angles.size());
  for (int v = 0; v < data_.views; ++v) {
    const EulerZYZ& g = lat.G[static_cast<std::size_t>(v)];
    angles(3 * v + 0) = g.g1;
    angles(3 * v + 1) = g.g2;
    angles(3 * v + 2) = g.g3;
    const auto& dgv = grads.d_g[static_cast<std::size_t>(v)];
    dg(3 * v + 0) = dgv[0];
    dg(3 * v + 1) = dgv[1];
    dg(3 * v + 2) = dgv[2];
  }
  adagrad_update(angles, dg, acc_g_[static_cast<std::size_t>(n)], hp_.lr_e,
                 hp_.adagrad_eps);
  for (int v = 0; v < data_.views; ++v) {
    lat.G[static_cast<std::size_t>(v)] = normalize_angles(
        {angles(3 * v + 0), angles(3 * v + 1), angles(3 * v + 2)});
  }
}

void Trainer::m_step(int n) {
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  if (n < 0 || n >= data_.n_instances) {
    throw std::out_of_range("instance index out of range");
  }
  const LatentState& lat = latents_[static_cast<std::size_t>(n)];
  const ViewSet X = instance_views(data_, n);
  const ModelGrads grads =
      grad_log_joint(*jt_, spec_, X, lat.G, lat.z, params_, hp_);

  adagrad_update(params_.W1, grads.d_W1, acc_theta_.W1, hp_.lr_m,
                 hp_.adagrad_eps);
  adagrad_update(params_.b1, grads.d_b1, acc_theta_.b1, hp_.lr_m,
                 hp_.adagrad_eps);
  adagrad_update(params_.W2, grads.d_W2, acc_theta_.W2, hp_.lr_m,
                 hp_.adagrad_eps);
  adagrad_update(params_.b2, grads.d_b2, acc_theta_.b2, hp_.lr_m,
                 hp_.adagrad_eps);
  adagrad_update(params_.ln_sigma_x, grads.d_ln_sigma, acc_theta_.ln_sigma_x,
                 hp_.lr_m, hp_.adagrad_eps);
}

double Trainer::instance_log_joint(int n) const {
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  const LatentState& lat = latents_.at(static_cast<std::size_t>(n));
  return log_joint(*jt_, spec_, instance_views(data_, n), lat.G, lat.z,
                   params_, hp_);
}

double Trainer::dataset_objective() const {
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  const double sigma = std::exp(params_.ln_sigma_x);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (int n = 0; n < data_.n_instances; ++n) {
    const LatentState& lat = latents_[static_cast<std::size_t>(n)];
    double residual_sq = 0.0;
    for (int v = 0; v < data_.views; ++v) {
      const Eigen::VectorXd zr =
          block_apply(*jt_, spec_, lat.G[static_cast<std::size_t>(v)], lat.z);
      residual_sq += (data_.view(n, v) - decode_forward(params_, zr).y)
                         .squaredNorm();
    }
    total -= residual_sq * inv_two_var;
    total -= 0.5 * static_cast<double>(data_.views) * data_.dx *
             params_.ln_sigma_x;
    total -= 0.5 * lat.z.squaredNorm();
  }
  total -= 0.5 * hp_.beta * params_.squared_norm();
  total -= 0.5 * hp_.alpha * params_.ln_sigma_x * params_.ln_sigma_x;
  return total;
}

std::vector<double> Trainer::train(int epochs) {
  if (epochs < 0) {
    throw std::invalid_argument("epoch count must be non-negative");
  }
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(epochs));
  std::vector<int> order(static_cast<std::size_t>(data_.n_instances));
  for (int e = 0; e < epochs; ++e) {
    for (int n = 0; n < data_.n_instances; ++n) {
      order[static_cast<std::size_t>(n)] = n;
    }
    // Keyed on the global epoch index so a resumed run continues the exact
    // shuffle sequence of an uninterrupted one.
    RngStream shuffle(seed_, "shuffle_epoch_" + std::to_string(epochs_done_));
    for (int i = data_.n_instances - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }
    for (int n : order) {
      e_step(n);
      m_step(n);
    }
    ++epochs_done_;
    const double objective = dataset_objective();
    if (!std::isfinite(objective)) {
      throw Divergence("training objective became non-finite at epoch " +
                       std::to_string(epochs_done_));
    }
    trace.push_back(objective);
  }
  return trace;
}

Eigen::VectorXd Trainer::decode_pose(int n, const EulerZYZ& g) const {
  const LatentState& lat = latents_.at(static_cast<std::size_t>(n));
  return decode(params_, block_apply(*jt_, spec_, g, lat.z));
}

double Trainer::recon_rmse() const {
  if (!has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  double total = 0.0;
  for (int n = 0; n < data_.n_instances; ++n) {
    const LatentState& lat = latents_[static_cast<std::size_t>(n)];
    for (int v = 0; v < data_.views; ++v) {
      total += (data_.view(n, v) -
                decode_pose(n, lat.G[static_cast<std::size_t>(v)]))
                   .squaredNorm();
    }
  }
  const double count = static_cast<double>(data_.n_instances) * data_.views *
                       data_.dx;
  return std::sqrt(total / count);
}

namespace {

struct TensorSpec {
  const char* name;
  Eigen::Index rows;
  Eigen::Index cols;
};

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  const Eigen::Index n = data_.n_instances;
  const Eigen::Index dz = spec_.dim();
  const Eigen::Index g_cols = 3 * static_cast<Eigen::Index>(data_.views);

  Eigen::MatrixXd Z(n, dz), accZ(n, dz), Gm(n, g_cols), accG(n, g_cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LatentState& lat = latents_[static_cast<std::size_t>(i)];
    Z.row(i) = lat.z.transpose();
    accZ.row(i) = acc_z_[static_cast<std::size_t>(i)].transpose();
    accG.row(i) = acc_g_[static_cast<std::size_t>(i)].transpose();
    for (int v = 0; v < data_.views; ++v) {
      const EulerZYZ& g = lat.G[static_cast<std::size_t>(v)];
      Gm(i, 3 * v + 0) = g.g1;
      Gm(i, 3 * v + 1) = g.g2;
      Gm(i, 3 * v + 2) = g.g3;
    }
  }

  char buf[128];
  out << "CKPT v1\n";
  out << "spec " << spec_.to_string() << "\n";
  out << "instances " << data_.n_instances << "\n";
  out << "views " << data_.views << "\n";
  out << "dx " << data_.dx << "\n";
  out << "hidden " << params_.hidden() << "\n";
  out << "epochs " << epochs_done_ << "\n";
  std::snprintf(buf, sizeof(buf), "seed %llu\n",
                static_cast<unsigned long long>(seed_));
  out << buf;
  const std::pair<const char*, double> hps[] = {
      {"hp_beta", hp_.beta},
      {"hp_alpha", hp_.alpha},
      {"hp_lr_e", hp_.lr_e},
      {"hp_lr_m", hp_.lr_m},
      {"hp_adagrad_eps", hp_.adagrad_eps},
  };
  for (const auto& [name, value] : hps) {
    std::snprintf(buf, sizeof(buf), "%s %.17g\n", name, value);
    out << buf;
  }

  const Eigen::MatrixXd ln_sigma =
      Eigen::MatrixXd::Constant(1, 1, params_.ln_sigma_x);
  const Eigen::MatrixXd acc_ln_sigma =
      Eigen::MatrixXd::Constant(1, 1, acc_theta_.ln_sigma_x);
  const Eigen::MatrixXd b1 = params_.b1, b2 = params_.b2;
  const Eigen::MatrixXd acc_b1 = acc_theta_.b1, acc_b2 = acc_theta_.b2;
  const std::pair<const char*, const Eigen::MatrixXd*> all[] = {
      {"W1", &params_.W1},       {"b1", &b1},
      {"W2", &params_.W2},       {"b2", &b2},
      {"ln_sigma", &ln_sigma},   {"acc_W1", &acc_theta_.W1},
      {"acc_b1", &acc_b1},       {"acc_W2", &acc_theta_.W2},
      {"acc_b2", &acc_b2},       {"acc_ln_sigma", &acc_ln_sigma},
      {"Z", &Z},                 {"acc_Z", &accZ},
      {"G", &Gm},                {"acc_G", &accG},
  };
  for (const auto& [name, m] : all) {
    out << "tensor " << name << " " << m->rows() << " " << m->cols() << "\n";
  }
  out << "data\n";
  for (const auto& [name, m] : all) {
    (void)name;
    write_tensor(out, *m);
  }
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

Trainer Trainer::load_checkpoint(const JTable& jt, const std::string& path,
                                 Dataset data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != "CKPT v1") {
    throw IoError("not a CKPT v1 file: " + path);
  }

  std::string spec_text;
  int instances = -1, views = -1, dx = -1, hidden = -1, epochs = -1;
  unsigned long long seed = 0;
  HyperParams hp;
  std::vector<TensorSpec> tensor_specs;
  static const char* const expected_names[] = {
      "W1", "b1", "W2", "b2", "ln_sigma", "acc_W1", "acc_b1", "acc_W2",
      "acc_b2", "acc_ln_sigma", "Z", "acc_Z", "G", "acc_G"};

  while (std::getline(in, line) && line != "data") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "spec") {
      ls >> spec_text;
    } else if (key == "instances") {
      ls >> instances;
    } else if (key == "views") {
      ls >> views;
    } else if (key == "dx") {
      ls >> dx;
    } else if (key == "hidden") {
      ls >> hidden;
    } else if (key == "epochs") {
      ls >> epochs;
    } else if (key == "seed") {
      ls >> seed;
    } else if (key == "hp_beta") {
      ls >> hp.beta;
    } else if (key == "hp_alpha") {
      ls >> hp.alpha;
    } else if (key == "hp_lr_e") {
      ls >> hp.lr_e;
    } else if (key == "hp_lr_m") {
      ls >> hp.lr_m;
    } else if (key == "hp_adagrad_eps") {
      ls >> hp.adagrad_eps;
    } else if (key == "tensor") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      const std::size_t i = tensor_specs.size();
      if (i >= std::size(expected_names) || name != expected_names[i]) {
        throw IoError("unexpected tensor '" + name +
                                 "' in checkpoint: " + path);
      }
      tensor_specs.push_back({expected_names[i], rows, cols});
    } else {
      throw IoError("unknown checkpoint field '" + key +
                               "': " + path);
    }
    if (ls.fail()) {
      throw IoError("malformed checkpoint line '" + line +
                               "': " + path);
    }
  }
  if (line != "data") {
    throw IoError("checkpoint manifest has no data section: " +
                             path);
  }
  if (spec_text.empty() || instances < 1 || views < 1 || dx < 1 ||
      hidden < 1 || epochs < 0 ||
      tensor_specs.size() != std::size(expected_names)) {
    throw IoError("incomplete checkpoint manifest: " + path);
  }

  Trainer tr(jt);
  tr.spec_ = RepSpec::parse(spec_text);
  if (tr.spec_.max_weight() > jt.l_max()) {
    throw std::invalid_argument(
        "axis-exchange table does not cover the checkpoint layout");
  }
  tr.hp_ = hp;
  tr.seed_ = seed;
  tr.epochs_done_ = epochs;

  if (data.X.size() > 0) {
    if (data.n_instances != instances || data.views != views ||
        data.dx != dx) {
      throw std::invalid_argument(
          "dataset shape does not match the checkpoint");
    }
    tr.data_ = std::move(data);
  } else {
    tr.data_.n_instances = instances;
    tr.data_.views = views;
    tr.data_.dx = dx;
  }

  std::vector<Eigen::MatrixXd> tensors;
  tensors.reserve(tensor_specs.size());
  for (const TensorSpec& ts : tensor_specs) {
    tensors.push_back(read_tensor(in, ts.rows, ts.cols, path));
  }

  const Eigen::Index dz = tr.spec_.dim();
  auto expect_shape = [&](int i, Eigen::Index r, Eigen::Index c) {
    if (tensors[static_cast<std::size_t>(i)].rows() != r ||
        tensors[static_cast<std::size_t>(i)].cols() != c) {
      throw IoError(std::string("tensor '") + expected_names[i] +
                               "' has the wrong shape: " + path);
    }
  };
  expect_shape(0, hidden, dz);
  expect_shape(1, hidden, 1);
  expect_shape(2, dx, hidden);
  expect_shape(3, dx, 1);
  expect_shape(4, 1, 1);
  expect_shape(5, hidden, dz);
  expect_shape(6, hidden, 1);
  expect_shape(7, dx, hidden);
  expect_shape(8, dx, 1);
  expect_shape(9, 1, 1);
  expect_shape(10, instances, dz);
  expect_shape(11, instances, dz);
  expect_shape(12, instances, 3 * static_cast<Eigen::Index>(views));
  expect_shape(13, instances, 3 * static_cast<Eigen::Index>(views));

  tr.params_.W1 = tensors[0];
  tr.params_.b1 = tensors[1].col(0);
  tr.params_.W2 = tensors[2];
  tr.params_.b2 = tensors[3].col(0);
  tr.params_.ln_sigma_x = tensors[4](0, 0);
  tr.acc_theta_.W1 = tensors[5];
  tr.acc_theta_.b1 = tensors[6].col(0);
  tr.acc_theta_.W2 = tensors[7];
  tr.acc_theta_.b2 = tensors[8].col(0);
  tr.acc_theta_.ln_sigma_x = tensors[9](0, 0);

  tr.latents_.resize(static_cast<std::size_t>(instances));
  tr.acc_z_.resize(static_cast<std::size_t>(instances));
  tr.acc_g_.resize(static_cast<std::size_t>(instances));
  for (int i = 0; i < instances; ++i) {
    LatentState& lat = tr.latents_[static_cast<std::size_t>(i)];
    lat.z = tensors[10].row(i).transpose();
    tr.acc_z_[static_cast<std::size_t>(i)] = tensors[11].row(i).transpose();
    tr.acc_g_[static_cast<std::size_t>(i)] = tensors[13].row(i).transpose();
    lat.G.resize(static_cast<std::size_t>(views));
    for (int v = 0; v < views; ++v) {
      lat.G[static_cast<std::size_t>(v)] = {tensors[12](i, 3 * v + 0),
                                            tensors[12](i, 3 * v + 1),
                                            tensors[12](i, 3 * v + 2)};
    }
  }
  return tr;
}

std::string Trainer::checkpoint_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != "CKPT v1") {
    throw IoError("not a CKPT v1 file: " + path);
  }
  while (std::getline(in, line) && line != "data") {
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key == "spec" && !value.empty()) {
      return value;
    }
  }
  throw IoError("checkpoint manifest has no spec line: " + path);
}

void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  const int n = static_cast<int>(gt.Z.rows());
  const int v = gt.G.empty() ? 0 : static_cast<int>(gt.G.front().size());
  char header[256];
  std::snprintf(header, sizeof(header),
                "GTRUTH v1 SPEC=%s N=%d V=%d DZ=%d DX=%d H=%d SIGMA=%.17g\n",
                gt.spec.c_str(), n, v, gt.theta.dz(), gt.theta.dx(),
                gt.theta.hidden(), gt.sigma_true);
  out << header;
  write_tensor(out, gt.theta.W1);
  write_tensor(out, gt.theta.b1);
  write_tensor(out, gt.theta.W2);
  write_tensor(out, gt.theta.b2);
  write_tensor(out, gt.Z);
  Eigen::MatrixXd Gm(n, 3 * v);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < v; ++j) {
      const EulerZYZ& g = gt.G[static_cast<std::size_t>(i)]
                              [static_cast<std::size_t>(j)];
      Gm(i, 3 * j + 0) = g.g1;
      Gm(i, 3 * j + 1) = g.g2;
      Gm(i, 3 * j + 2) = g.g3;
    }
  }
  write_tensor(out, Gm);
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("cannot read ground-truth header: " + path);
  }
  char spec_buf[128] = {0};
  int n = -1, v = -1, dz = -1, dx = -1, h = -1;
  double sigma = -1.0;
  if (std::sscanf(line.c_str(),
                  "GTRUTH v1 SPEC=%127s N=%d V=%d DZ=%d DX=%d H=%d SIGMA=%lf",
                  spec_buf, &n, &v, &dz, &dx, &h, &sigma) != 7 ||
      n < 1 || v < 1 || dz < 1 || dx < 1 || h < 1 || sigma < 0.0) {
    throw IoError("not a GTRUTH v1 file: " + path);
  }
  GroundTruth gt;
  gt.spec = spec_buf;
  gt.sigma_true = sigma;
  gt.theta.W1 = read_tensor(in, h, dz, path);
  gt.theta.b1 = read_tensor(in, h, 1, path).col(0);
  gt.theta.W2 = read_tensor(in, dx, h, path);
  gt.theta.b2 = read_tensor(in, dx, 1, path).col(0);
  gt.Z = read_tensor(in, n, dz, path);
  const Eigen::MatrixXd Gm = read_tensor(in, n, 3 * v, path);
  gt.G.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& row = gt.G[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(v));
    for (int j = 0; j < v; ++j) {
      row[static_cast<std::size_t>(j)] = {Gm(i, 3 * j + 0), Gm(i, 3 * j + 1),
                                          Gm(i, 3 * j + 2)};
    }
  }
  return gt;
}

SynthResult synthesize_dataset(const JTable& jt, const RepSpec& spec, int n,
                               int v, int dx, int hidden, double sigma_true,
                               std::uint64_t seed) {
  if (n < 1 || v < 1 || dx < 1 || hidden < 1) {
    throw std::invalid_argument("dataset dimensions must be positive");
  }
  if (sigma_true < 0.0) {
    throw std::invalid_argument("noise scale must be non-negative");
  }
  if (spec.dim() < 1) {
    throw std::invalid_argument("representation layout is empty");
  }
  if (spec.max_weight() > jt.l_max()) {
    throw std::invalid_argument(
        "axis-exchange table does not cover the representation layout");
  }

  SynthResult result;
  GroundTruth& gt = result.truth;
  gt.spec = spec.to_string();
  gt.sigma_true = sigma_true;

  RngStream theta_rng(seed, "gt_theta");
  gt.theta = DecoderParams::init(spec.dim(), hidden, dx, theta_rng);

  RngStream z_rng(seed, "gt_z");
  gt.Z.resize(n, spec.dim());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < spec.dim(); ++j) {
      gt.Z(i, j) = z_rng.normal();
    }
  }

  RngStream pose_rng(seed, "gt_pose");
  gt.G.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    gt.G[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(v));
    for (int j = 0; j < v; ++j) {
      gt.G[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          haar_sample(pose_rng);
    }
  }

  RngStream noise_rng(seed, "gt_noise");
  Dataset& data = result.data;
  data.n_instances = n;
  data.views = v;
  data.dx = dx;
  data.X.resize(static_cast<Eigen::Index>(n) * v, dx);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = gt.Z.row(i).transpose();
    for (int j = 0; j < v; ++j) {
      const EulerZYZ& g =
          gt.G[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      Eigen::VectorXd x = decode(gt.theta, block_apply(jt, spec, g, z));
      for (int k = 0; k < dx; ++k) {
        x(k) += sigma_true * noise_rng.normal();
      }
      data.X.row(static_cast<Eigen::Index>(i) * v + j) = x.transpose();
    }
  }
  return result;
}

std::pair<EulerZYZ, double> refine_pose(const JTable& jt, const RepSpec& spec,
                                        const DecoderParams& params,
                                        const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& x,
                                        const EulerZYZ& start, int steps,
                                        double lr, double adagrad_eps) {
  if (x.size() != params.dx()) {
    throw std::invalid_argument("refine_pose: view dimension mismatch");
  }
  EulerZYZ g = start;
  double acc[3] = {0.0, 0.0, 0.0};
  EulerZYZ best_g = start;
  double best_r2 = std::numeric_limits<double>::infinity();

  auto residual_and_backprop = [&](const EulerZYZ& pose, double* grad_out) {
    const Eigen::VectorXd zr = block_apply(jt, spec, pose, z);
    const DecoderForward f = decode_forward(params, zr);
    const Eigen::VectorXd r = x - f.y;
    if (grad_out != nullptr) {
      // Gradient of -||r||^2 / 2 with respect to the pose angles.
      const Eigen::VectorXd dh =
          (params.W2.transpose() * r)
              .cwiseProduct((1.0 - f.h.array().square()).matrix());
      const Eigen::VectorXd dzr = params.W1.transpose() * dh;
      const EulerJacobian jac = block_apply_jacobian(jt, spec, pose, z);
      grad_out[0] = dzr.dot(jac.d_g1);
      grad_out[1] = dzr.dot(jac.d_g2);
      grad_out[2] = dzr.dot(jac.d_g3);
    }
    return r.squaredNorm();
  };

  for (int s = 0; s < steps; ++s) {
    double grad[3];
    const double r2 = residual_and_backprop(g, grad);
    if (r2 < best_r2) {
      best_r2 = r2;
      best_g = g;
    }
    double* angles[3] = {&g.g1, &g.g2, &g.g3};
    for (int k = 0; k < 3; ++k) {
      adagrad_update(*angles[k], grad[k], acc[k], lr, adagrad_eps);
    }
  }
  const double final_r2 = residual_and_backprop(g, nullptr);
  if (final_r2 < best_r2) {
    best_r2 = final_r2;
    best_g = g;
  }
  return {normalize_angles(best_g), best_r2};
}

HeldOutResult evaluate_held_out(const Trainer& trainer,
                                const Eigen::MatrixXd& held_views,
                                std::uint64_t seed,
                                const HeldOutOptions& options) {
  if (!trainer.has_data()) {
    throw std::logic_error("trainer has no dataset attached");
  }
  if (held_views.rows() != trainer.instances() ||
      held_views.cols() != trainer.data().dx) {
    throw std::invalid_argument("held-out views have the wrong shape");
  }
  if (options.random_restarts < 0 || options.steps < 1 || options.lr <= 0.0) {
    throw std::invalid_argument("invalid held-out evaluation options");
  }

  RngStream start_rng(seed, "heldout_starts");
  RngStream baseline_rng(seed, "heldout_baseline");
  const JTable& jt = trainer.table();
  const RepSpec& spec = trainer.spec();
  const DecoderParams& params = trainer.params();
  const int views = trainer.views();

  HeldOutResult result;
  for (int n = 0; n < trainer.instances(); ++n) {
    const Eigen::VectorXd z = trainer.latent(n).z;
    const Eigen::VectorXd x = held_views.row(n).transpose();

    std::vector<EulerZYZ> starts = trainer.latent(n).G;
    for (int r = 0; r < options.random_restarts; ++r) {
      starts.push_back(haar_sample(start_rng));
    }

    EulerZYZ best_g = euler_identity();
    double best_r2 = std::numeric_limits<double>::infinity();
    for (const EulerZYZ& start : starts) {
      auto [g, r2] = refine_pose(jt, spec, params, z, x, start, options.steps,
                                 options.lr, trainer.hyper().adagrad_eps);
      if (r2 < best_r2) {
        best_r2 = r2;
        best_g = g;
      }
    }

    const Eigen::VectorXd decoded =
        decode(params, block_apply(jt, spec, best_g, z));
    const int other = static_cast<int>(baseline_rng.next_u64() %
                                       static_cast<std::uint64_t>(views));
    const double dist_held = (decoded - x).norm();
    const double dist_other = (decoded - trainer.data().view(n, other)).norm();
    ++result.trials;
    if (dist_held < dist_other) {
      ++result.successes;
    }
  }
  result.success_rate =
      result.trials > 0
          ? static_cast<double>(result.successes) / result.trials
          : 0.0;
  return result;
}

}  // namespace so3rep
