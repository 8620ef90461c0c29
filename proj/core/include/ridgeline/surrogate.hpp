#pragma once

/// Projected neural network surrogate f(m, w) = Φ f_r(Vᵀ m, w) + b_Q.
///
/// Architecture (two nonlinear layers, softplus activations):
///   z₀ = Vᵀ m            (fixed input layer; trainable W₀ m in FS mode)
///   z₁ = softplus(W₁ z₀ + b₁)   with W₁ of size r_M × r_M
///   z₂ = softplus(W₂ z₁ + b₂)   with W₂ of size r_Q × r_M
///   q̂  = Φ z₂ + b_Q             with Φ of size d_Q × r_Q (trainable)
///
/// Trainable weight count:
///   d_W = (r_M² + r_M) + (r_M·r_Q + r_Q) + (d_Q·r_Q + d_Q)      (projected)
///   d_W += d_M·r_M                                              (FS mode)
/// so the projected-mode count is independent of d_M entirely and of d_Q
/// except through the final layer.
///
/// Weight vector layout (all matrices column-major):
///   [W₀ (FS only) | W₁ | b₁ | W₂ | b₂ | Φ | b_Q]

#include "ridgeline/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ridgeline::surrogate {

/// Which reduced coordinates feed the network.
enum class Mode { AS, KLE, RS, FS };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct NetworkSpec {
  Eigen::Index input_dim = 0;    // d_M
  Eigen::Index input_rank = 0;   // r_M
  Eigen::Index output_rank = 0;  // r_Q
  Eigen::Index output_dim = 0;   // d_Q
  Mode mode = Mode::AS;

  /// Fixed input layer V (d_M × r_M); ignored (and may be empty) for FS mode,
  /// where the input layer is trainable.  Bitwise constant across training.
  Eigen::MatrixXd input_layer;

  /// Initializers for the trainable output layer: Φ starts at the POD basis
  /// and b_Q at the snapshot mean, in every mode.
  Eigen::MatrixXd output_init;   // d_Q × r_Q
  Eigen::VectorXd output_shift;  // d_Q

  /// Number of trainable weights per the layout above.
  Eigen::Index d_w() const;

  /// Throws a config error if any dimension or initializer is inconsistent.
  void validate() const;
};

enum class Optimizer { Adam, NewtonCg };

std::string to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string& name);

struct TrainConfig {
  Optimizer optimizer = Optimizer::Adam;
  int epochs = 100;
  std::uint64_t seed = 0;

  double adam_step = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;

  double lm_damping = 1e-3;  // Levenberg–Marquardt damping for Newton-CG
  double cg_tolerance = 1e-2;
  int cg_max_iters = 50;
};

/// Batch schedule: N ≥ 256 uses gradient batches of 128 and curvature
/// batches of 16; smaller sets use N/4 and max(1, N/32).
struct BatchSchedule {
  Eigen::Index gradient = 0;
  Eigen::Index curvature = 0;
};
BatchSchedule batch_schedule(Eigen::Index n_train);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;       // full training-set loss after the epoch
  double wall_time_s = 0.0;
};

struct TrainResult {
  Eigen::VectorXd weights;  // weights with the lowest recorded full-set loss
  std::vector<EpochRecord> history;
  bool diverged = false;    // training aborted early (loss > 1e6 × initial)
};

struct Accuracy {
  double relative_error = 0.0;
  double accuracy = 0.0;  // 100 (1 − relative_error)
};

/// Glorot-uniform initialization of the trainable inner layers from `seed`;
/// Φ and b_Q are copied from the spec's initializers, inner biases start at
/// zero.  Deterministic per seed.
Eigen::VectorXd initialize_weights(const NetworkSpec& spec, std::uint64_t seed);

/// Evaluates the network on a block of inputs (d_M × N) → predictions
/// (d_Q × N).
Eigen::MatrixXd forward(const NetworkSpec& spec, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& m);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // length d_W
};

/// loss = (1/2N) Σ ‖q_i − f(m_i, w)‖² with its exact reverse-mode gradient.
/// The fixed input layer contributes no gradient entries.  A non-finite
/// per-sample residual raises a numerical error naming the sample.
LossGradient loss_and_gradient(const NetworkSpec& spec,
                               const Eigen::VectorXd& weights,
                               const Eigen::MatrixXd& m_batch,
                               const Eigen::MatrixXd& q_batch);

/// Gauss–Newton Hessian-vector product (1/N) Σ J_iᵀ J_i v + damping·v via a
/// forward tangent sweep followed by the linearized reverse sweep.
Eigen::VectorXd gauss_newton_hvp(const NetworkSpec& spec,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::MatrixXd& m_batch,
                                 const Eigen::MatrixXd& q_batch,
                                 const Eigen::VectorXd& v, double damping);

/// Runs the configured optimizer over shuffled mini-batches (one full pass
/// per epoch).  Records the full training-set loss per epoch and returns the
/// best-so-far weights.  Deterministic per cfg.seed.
TrainResult train(const NetworkSpec& spec, const TrainConfig& cfg,
                  const Eigen::MatrixXd& m_train, const Eigen::MatrixXd& q_train);

/// Relative error √(Σ‖q_i − f(m_i)‖² / Σ‖q_i‖²) and accuracy
/// 100 (1 − relative error); all-zero test outputs are a config error.
Accuracy evaluate_accuracy(const NetworkSpec& spec, const Eigen::VectorXd& weights,
                           const Eigen::MatrixXd& m_test,
                           const Eigen::MatrixXd& q_test);

}  // namespace ridgeline::surrogate
