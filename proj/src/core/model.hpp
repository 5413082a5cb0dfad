#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/dataset.hpp"
#include "core/representation.hpp"
#include "core/rng.hpp"

namespace so3rep {

// Latent pose-factored generative model.
//
// Each instance n owns one latent code z^n; each of its V views v owns one
// rotation g^{n,v}.  A view is generated by rotating the code inside the
// block-diagonal representation and decoding with a shared one-hidden-layer
// network:
//
//   x^{n,v} = f_theta(T(g^{n,v}) z^n) + Normal(0, sigma_x^2 I),
//   f_theta(z') = W2 tanh(W1 z' + b1) + b2.
//
// The complete per-instance log joint (up to additive constants; the uniform
// rotation prior contributes none) is
//
//   L = - sum_v ||x^{n,v} - f(T(g^{n,v}) z)||^2 / (2 sigma_x^2)
//       - (V Dx / 2) ln sigma_x  -  ||z||^2 / 2
//       - beta ||theta||^2 / 2   -  alpha (ln sigma_x)^2 / 2,
//
// with sigma_x = exp(ln_sigma_x) and theta = (W1, b1, W2, b2).  Training is
// stochastic hard EM: per instance, one adagrad ascent step on (z, G) with
// theta fixed (E), then one adagrad ascent step on (theta, ln sigma_x) with
// the latents fixed (M).

struct DecoderParams {
  Eigen::MatrixXd W1;  // hidden x Dz
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd W2;  // Dx x hidden
  Eigen::VectorXd b2;  // Dx
  double ln_sigma_x = 0.0;

  int dz() const { return static_cast<int>(W1.cols()); }
  int hidden() const { return static_cast<int>(W1.rows()); }
  int dx() const { return static_cast<int>(W2.rows()); }

  // ||theta||^2 over the network tensors (ln_sigma_x has its own prior).
  double squared_norm() const;

  // Weights ~ Normal(0, 1/fan_in), biases likewise with their layer's
  // fan-in, ln_sigma_x = 0.  Draw order is fixed (W1 column-major, b1, W2,
  // b2) so parameter initialization is reproducible from the stream alone.
  static DecoderParams init(int dz, int hidden, int dx, RngStream& rng);
};

struct HyperParams {
  double beta = 0.1;          // precision of the Gaussian prior on theta
  double alpha = 0.1;         // precision of the prior on ln sigma_x
  double lr_e = 0.18;         // adagrad step for the E update (z, G)
  double lr_m = 0.04;         // adagrad step for the M update (theta, sigma)
  double adagrad_eps = 1e-8;  // denominator floor
};

// One instance's latent state.
struct LatentState {
  Eigen::VectorXd z;
  std::vector<EulerZYZ> G;  // one rotation per view
};

// Views of one instance, one column per view (Dx x V).
using ViewSet = Eigen::MatrixXd;

Eigen::VectorXd decode(const DecoderParams& params, const Eigen::VectorXd& z);

// Directional derivative of decode at z along v (for derivative checks).
Eigen::VectorXd decode_jvp(const DecoderParams& params, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& v);

double log_joint(const JTable& jt, const RepSpec& spec, const ViewSet& X,
                 const std::vector<EulerZYZ>& G, const Eigen::VectorXd& z,
                 const DecoderParams& params, const HyperParams& hp);

struct ModelGrads {
  Eigen::VectorXd d_z;
  std::vector<std::array<double, 3>> d_g;  // per view, (g1, g2, g3)
  Eigen::MatrixXd d_W1;
  Eigen::VectorXd d_b1;
  Eigen::MatrixXd d_W2;
  Eigen::VectorXd d_b2;
  double d_ln_sigma = 0.0;
};

// Exact reverse-mode gradients of log_joint with respect to every variable.
// The z chain uses the transpose identity T(g)^T = T(g^{-1}); the pose chain
// contracts the residual backprop with the analytic Euler-angle Jacobians.
ModelGrads grad_log_joint(const JTable& jt, const RepSpec& spec,
                          const ViewSet& X, const std::vector<EulerZYZ>& G,
                          const Eigen::VectorXd& z, const DecoderParams& params,
                          const HyperParams& hp);

// Adagrad ascent update: acc += grad^2; param += lr * grad / sqrt(acc+eps),
// all elementwise.
void adagrad_update(Eigen::Ref<Eigen::MatrixXd> param,
                    const Eigen::MatrixXd& grad,
                    Eigen::Ref<Eigen::MatrixXd> acc, double lr, double eps);
void adagrad_update(Eigen::Ref<Eigen::VectorXd> param,
                    const Eigen::VectorXd& grad,
                    Eigen::Ref<Eigen::VectorXd> acc, double lr, double eps);
void adagrad_update(double& param, double grad, double& acc, double lr,
                    double eps);

// Stochastic hard-EM trainer.  Deterministic given (dataset, spec, hidden,
// hyperparameters, seed): the per-epoch visiting order comes from a named
// substream keyed on the global epoch index, so training, checkpointing and
// resuming all replay bit-identically.
class Trainer {
 public:
  Trainer(const JTable& jt, RepSpec spec, Dataset data, int hidden,
          HyperParams hp, std::uint64_t seed);

  // One adagrad ascent step on (z, G) of instance n, parameters fixed.
  // Euler angles are renormalized to canonical ranges afterwards.
  void e_step(int n);

  // One adagrad ascent step on (theta, ln sigma_x) from instance n's
  // gradient, latents fixed.
  void m_step(int n);

  // Per-instance complete log joint (prior terms included).
  double instance_log_joint(int n) const;

  // Full-dataset objective: per-instance data and z terms summed, the shared
  // theta and ln sigma priors counted once.
  double dataset_objective() const;

  // Runs `epochs` epochs (seeded shuffle; per instance: E step then M step)
  // and returns the objective after each epoch.  Throws Divergence as soon
  // as the objective stops being finite.
  std::vector<double> train(int epochs);

  Eigen::VectorXd decode_pose(int n, const EulerZYZ& g) const;

  // Root-mean-square residual per coordinate over every view in the dataset.
  double recon_rmse() const;

  const JTable& table() const { return *jt_; }
  const RepSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }
  const DecoderParams& params() const { return params_; }
  const HyperParams& hyper() const { return hp_; }
  const LatentState& latent(int n) const { return latents_.at(n); }
  int instances() const { return data_.n_instances; }
  int views() const { return data_.views; }
  int epochs_done() const { return epochs_done_; }
  std::uint64_t seed() const { return seed_; }
  bool has_data() const { return data_.X.size() > 0; }

  // Checkpoint: text manifest (spec string, shapes, hyperparameters, epoch
  // count) followed by raw little-endian doubles for every parameter,
  // latent and adagrad accumulator tensor.
  void save_checkpoint(const std::string& path) const;

  // Reloads a checkpoint; pass the dataset to resume training, or an empty
  // Dataset when only decoding is needed (train() then refuses to run).
  static Trainer load_checkpoint(const JTable& jt, const std::string& path,
                                 Dataset data = Dataset{});

  // Reads only the representation layout string from a checkpoint manifest
  // (cheap query used to size the axis-exchange table before loading).
  static std::string checkpoint_spec(const std::string& path);

 private:
  Trainer(const JTable& jt) : jt_(&jt) {}

  const JTable* jt_;
  RepSpec spec_;
  Dataset data_;
  DecoderParams params_;
  HyperParams hp_;
  std::uint64_t seed_ = 0;
  int epochs_done_ = 0;

  std::vector<LatentState> latents_;

  // Adagrad accumulators, one per variable group.
  DecoderParams acc_theta_;  // same shapes as params_; ln_sigma_x slot reused
  std::vector<Eigen::VectorXd> acc_z_;
  std::vector<Eigen::VectorXd> acc_g_;  // flattened (g1,g2,g3) per view
};

// Everything the synthetic-data generator drew, kept for evaluation only
// (training never sees it).
struct GroundTruth {
  std::string spec;       // representation layout used by the generator
  DecoderParams theta;    // generator network (ln_sigma_x unused)
  Eigen::MatrixXd Z;      // N x Dz codes
  std::vector<std::vector<EulerZYZ>> G;  // per instance, per view poses
  double sigma_true = 0.0;
};

void save_ground_truth(const std::string& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::string& path);

// Synthetic data with retained ground truth: a randomly initialized
// generator network, codes z* ~ Normal(0, I), uniform poses, Gaussian pixel
// noise of scale sigma_true.  The ground truth is for evaluation only.
struct SynthResult {
  Dataset data;
  GroundTruth truth;
};

SynthResult synthesize_dataset(const JTable& jt, const RepSpec& spec, int n,
                               int v, int dx, int hidden, double sigma_true,
                               std::uint64_t seed);

// Held-out-pose evaluation: for each instance, one view the trainer never
// saw.  With the decoder and code frozen, the pose of the held-out view is
// inferred by adagrad ascent on the rotation alone, restarted from every
// trained pose plus `random_restarts` uniform draws.  A trial succeeds when
// the decoded output at the inferred pose is closer (L2) to the held-out
// view than to a randomly chosen seen view of the same instance.
struct HeldOutOptions {
  int random_restarts = 16;
  int steps = 60;
  double lr = 0.1;
};

struct HeldOutResult {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
};

HeldOutResult evaluate_held_out(const Trainer& trainer,
                                const Eigen::MatrixXd& held_views,  // N x Dx
                                std::uint64_t seed,
                                const HeldOutOptions& options);

// Pose-only refinement used by the held-out evaluation: maximizes
// -||x - f(T(g) z)||^2 / 2 over g from the given start; returns the refined
// pose and its squared residual.
std::pair<EulerZYZ, double> refine_pose(const JTable& jt, const RepSpec& spec,
                                        const DecoderParams& params,
                                        const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& x,
                                        const EulerZYZ& start, int steps,
                                        double lr, double adagrad_eps);

}  // namespace so3rep
