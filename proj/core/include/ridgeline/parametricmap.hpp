#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <vector>

namespace ridgeline::maps {

/// Parametric map m ↦ q with exact (adjoint-based) Jacobian actions.
/// Jacobian calls accept blocks of directions; implementations must satisfy
/// ⟨J dm, w⟩ = ⟨dm, Jᵀw⟩ to roundoff and be linear in the direction block.
class Map {
 public:
  virtual ~Map() = default;

  [[nodiscard]] virtual Eigen::Index input_dim() const = 0;
  [[nodiscard]] virtual Eigen::Index output_dim() const = 0;

  [[nodiscard]] virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& m) const = 0;

  /// dq = J(m)·dm for each column of dm (d_M×b → d_Q×b).
  [[nodiscard]] virtual Eigen::MatrixXd jacobian_action(const Eigen::VectorXd& m,
                                                        const Eigen::MatrixXd& dm) const = 0;

  /// dm_out = J(m)ᵀ·w for each column of w (d_Q×b → d_M×b).
  [[nodiscard]] virtual Eigen::MatrixXd jacobian_transpose_action(
      const Eigen::VectorXd& m, const Eigen::MatrixXd& w) const = 0;
};

/// Convection-reaction-diffusion problem on (0,1)²:
///   −∇·(k∇u) + v·∇u + e^m u³ = f,  u = 0 on the boundary,
/// with 5-point diffusion, first-order upwind convection, nodal cubic
/// reaction, and fixed analytic divergence-free velocity
/// v = V₀(sin(πx₁)cos(πx₂), −cos(πx₁)sin(πx₂)).  The parameter m lives on
/// all (nx+1)(ny+1) grid nodes; q interpolates u bilinearly at an
/// obs_nx×obs_ny tensor grid inside obs_box.
struct CrdConfig {
  Eigen::Index nx = 32;
  Eigen::Index ny = 32;
  double k_diff = 0.1;
  double v0 = 1.0;
  double obs_lo = 0.6;
  double obs_hi = 0.8;
  Eigen::Index obs_nx = 7;
  Eigen::Index obs_ny = 7;
  double newton_tol = 1e-10;  // on the residual ∞-norm
  int newton_max_iters = 50;
  std::size_t cache_capacity = 4;  // per-m state cache; 0 disables caching
  bool zero_forcing = false;       // test hook: f ≡ 0 forces u ≡ 0
};

class CrdMap : public Map {
 public:
  explicit CrdMap(const CrdConfig& config);
  ~CrdMap() override;

  CrdMap(const CrdMap&) = delete;
  CrdMap& operator=(const CrdMap&) = delete;

  [[nodiscard]] Eigen::Index input_dim() const override;
  [[nodiscard]] Eigen::Index output_dim() const override;
  [[nodiscard]] const CrdConfig& config() const { return config_; }

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& m) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_action(const Eigen::VectorXd& m,
                                                const Eigen::MatrixXd& dm) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_transpose_action(
      const Eigen::VectorXd& m, const Eigen::MatrixXd& w) const override;

  /// PDE state on the full node grid (Dirichlet zeros included), for oracles.
  [[nodiscard]] Eigen::VectorXd full_state(const Eigen::VectorXd& m) const;

  /// Newton residual 2-norm trace of the solve at m (evaluates if needed);
  /// strictly decreasing across accepted steps by the Armijo line search.
  [[nodiscard]] std::vector<double> newton_residual_trace(const Eigen::VectorXd& m) const;

 private:
  struct State;
  struct Workspace;

  [[nodiscard]] std::shared_ptr<const State> state_at(const Eigen::VectorXd& m) const;
  [[nodiscard]] std::shared_ptr<const State> solve_state(const Eigen::VectorXd& m) const;

  CrdConfig config_;
  std::unique_ptr<const Workspace> workspace_;

  mutable std::mutex cache_mutex_;
  mutable std::list<std::pair<std::uint64_t, std::shared_ptr<const State>>> cache_;
};

/// q = G·m with J = G.
class LinearMap : public Map {
 public:
  explicit LinearMap(Eigen::MatrixXd g);

  [[nodiscard]] Eigen::Index input_dim() const override { return g_.cols(); }
  [[nodiscard]] Eigen::Index output_dim() const override { return g_.rows(); }
  [[nodiscard]] const Eigen::MatrixXd& g() const { return g_; }

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& m) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_action(const Eigen::VectorXd& m,
                                                const Eigen::MatrixXd& dm) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_transpose_action(
      const Eigen::VectorXd& m, const Eigen::MatrixXd& w) const override;

 private:
  Eigen::MatrixXd g_;
};

/// q = B_out·sin(ω·W·m) with J = B_out·diag(ω cos(ω·W·m))·W.
class OscillatoryMap : public Map {
 public:
  OscillatoryMap(Eigen::MatrixXd b_out, Eigen::MatrixXd w, double omega);

  [[nodiscard]] Eigen::Index input_dim() const override { return w_.cols(); }
  [[nodiscard]] Eigen::Index output_dim() const override { return b_out_.rows(); }

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& m) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_action(const Eigen::VectorXd& m,
                                                const Eigen::MatrixXd& dm) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian_transpose_action(
      const Eigen::VectorXd& m, const Eigen::MatrixXd& w) const override;

 private:
  Eigen::MatrixXd b_out_;
  Eigen::MatrixXd w_;
  double omega_;
};

}  // namespace ridgeline::maps
