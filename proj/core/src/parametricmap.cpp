#include "ridgeline/parametricmap.hpp"

#include "ridgeline/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>
#include <string>

namespace ridgeline::maps {

namespace {

std::uint64_t fnv1a_bytes(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t hash_vector(const Eigen::VectorXd& v) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto n = static_cast<std::uint64_t>(v.size());
  hash = fnv1a_bytes(&n, sizeof n, hash);
  return fnv1a_bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()), hash);
}

}  // namespace

/// Immutable discretization data shared by all solves.
struct CrdMap::Workspace {
  Eigen::Index n1 = 0;       // nodes per x-line
  Eigen::Index n2 = 0;       // nodes per y-line
  Eigen::Index n_nodes = 0;  // full grid including boundary
  Eigen::Index n_int = 0;    // interior nodes
  double h = 0.0;
  std::vector<Eigen::Index> int_to_global;
  std::vector<Eigen::Index> global_to_int;  // -1 for boundary nodes
  Eigen::SparseMatrix<double> l_base;       // diffusion + upwind convection
  Eigen::VectorXd forcing;                  // at interior nodes
  Eigen::SparseMatrix<double> obs;          // d_Q × n_int bilinear interpolation
};

/// Cached per-m solve: the state, the reaction coefficient, and the
/// factorized linearization shared by all Jacobian calls at this m.
struct CrdMap::State {
  Eigen::VectorXd m;       // full-grid parameter (cache key payload)
  Eigen::VectorXd u;       // interior state
  Eigen::VectorXd em_u3;   // e^m u³ at interior nodes = ∂R/∂m diagonal
  // A_u at u.  Mutable because Eigen declares SparseLU::adjoint() non-const
  // even though it only returns a solve view.
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> linearization;
  std::vector<double> residual_trace;  // Newton residual 2-norms, accepted steps
};

CrdMap::CrdMap(const CrdConfig& config) : config_(config) {
  require_config(config.nx >= 4 && config.ny >= 4, "CrdConfig: nx, ny must be >= 4");
  require_config(config.k_diff > 0.0, "CrdConfig: k_diff must be > 0");
  require_config(config.newton_tol > 0.0, "CrdConfig: newton_tol must be > 0");
  require_config(config.newton_max_iters >= 1, "CrdConfig: newton_max_iters must be >= 1");
  require_config(config.obs_nx >= 1 && config.obs_ny >= 1,
                 "CrdConfig: observation grid must be non-empty");
  require_config(0.0 < config.obs_lo && config.obs_lo <= config.obs_hi &&
                     config.obs_hi < 1.0,
                 "CrdConfig: observation box must lie strictly inside (0,1)²");

  auto ws = std::make_unique<Workspace>();
  ws->n1 = config.nx + 1;
  ws->n2 = config.ny + 1;
  ws->n_nodes = ws->n1 * ws->n2;
  ws->h = 1.0 / static_cast<double>(config.nx);
  auto node = [&](Eigen::Index ix, Eigen::Index iy) { return iy * ws->n1 + ix; };

  ws->global_to_int.assign(static_cast<std::size_t>(ws->n_nodes), -1);
  for (Eigen::Index iy = 1; iy < config.ny; ++iy) {
    for (Eigen::Index ix = 1; ix < config.nx; ++ix) {
      ws->global_to_int[static_cast<std::size_t>(node(ix, iy))] =
          static_cast<Eigen::Index>(ws->int_to_global.size());
      ws->int_to_global.push_back(node(ix, iy));
    }
  }
  ws->n_int = static_cast<Eigen::Index>(ws->int_to_global.size());

  const double h = ws->h;
  const double diff = config.k_diff / (h * h);
  const double pi = std::numbers::pi;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * ws->n_int));
  ws->forcing.resize(ws->n_int);
  for (Eigen::Index row = 0; row < ws->n_int; ++row) {
    Eigen::Index g = ws->int_to_global[static_cast<std::size_t>(row)];
    Eigen::Index ix = g % ws->n1;
    Eigen::Index iy = g / ws->n1;
    double x = static_cast<double>(ix) * h;
    double y = static_cast<double>(iy) * h;

    double vx = config.v0 * std::sin(pi * x) * std::cos(pi * y);
    double vy = -config.v0 * std::cos(pi * x) * std::sin(pi * y);

    double diag = 4.0 * diff;
    auto couple = [&](Eigen::Index jx, Eigen::Index jy, double value) {
      Eigen::Index j = ws->global_to_int[static_cast<std::size_t>(node(jx, jy))];
      if (j >= 0) triplets.emplace_back(row, j, value);  // boundary: u = 0 drops out
    };

    couple(ix - 1, iy, -diff);
    couple(ix + 1, iy, -diff);
    couple(ix, iy - 1, -diff);
    couple(ix, iy + 1, -diff);

    // First-order upwind convection.
    if (vx >= 0.0) {
      diag += vx / h;
      couple(ix - 1, iy, -vx / h);
    } else {
      diag -= vx / h;
      couple(ix + 1, iy, vx / h);
    }
    if (vy >= 0.0) {
      diag += vy / h;
      couple(ix, iy - 1, -vy / h);
    } else {
      diag -= vy / h;
      couple(ix, iy + 1, vy / h);
    }
    triplets.emplace_back(row, row, diag);

    ws->forcing[row] =
        config.zero_forcing
            ? 0.0
            : std::max(0.5, std::exp(-25.0 * (x - 0.7) * (x - 0.7) -
                                     25.0 * (y - 0.7) * (y - 0.7)));
  }
  ws->l_base.resize(ws->n_int, ws->n_int);
  ws->l_base.setFromTriplets(triplets.begin(), triplets.end());
  ws->l_base.makeCompressed();

  // Bilinear observation operator on the obs_nx×obs_ny tensor grid.
  const Eigen::Index n_obs = config.obs_nx * config.obs_ny;
  std::vector<Eigen::Triplet<double>> obs_triplets;
  obs_triplets.reserve(static_cast<std::size_t>(4 * n_obs));
  for (Eigen::Index oy = 0; oy < config.obs_ny; ++oy) {
    for (Eigen::Index ox = 0; ox < config.obs_nx; ++ox) {
      double x = config.obs_nx == 1 ? 0.5 * (config.obs_lo + config.obs_hi)
                                    : config.obs_lo + (config.obs_hi - config.obs_lo) *
                                          static_cast<double>(ox) /
                                          static_cast<double>(config.obs_nx - 1);
      double y = config.obs_ny == 1 ? 0.5 * (config.obs_lo + config.obs_hi)
                                    : config.obs_lo + (config.obs_hi - config.obs_lo) *
                                          static_cast<double>(oy) /
                                          static_cast<double>(config.obs_ny - 1);
      auto cx = std::min(static_cast<Eigen::Index>(x / h), config.nx - 1);
      auto cy = std::min(static_cast<Eigen::Index>(y / h), config.ny - 1);
      double wx = x / h - static_cast<double>(cx);
      double wy = y / h - static_cast<double>(cy);
      Eigen::Index point = oy * config.obs_nx + ox;
      auto add = [&](Eigen::Index jx, Eigen::Index jy, double weight) {
        Eigen::Index j = ws->global_to_int[static_cast<std::size_t>(node(jx, jy))];
        if (j >= 0 && weight != 0.0) obs_triplets.emplace_back(point, j, weight);
      };
      add(cx, cy, (1.0 - wx) * (1.0 - wy));
      add(cx + 1, cy, wx * (1.0 - wy));
      add(cx, cy + 1, (1.0 - wx) * wy);
      add(cx + 1, cy + 1, wx * wy);
    }
  }
  ws->obs.resize(n_obs, ws->n_int);
  ws->obs.setFromTriplets(obs_triplets.begin(), obs_triplets.end());
  ws->obs.makeCompressed();

  workspace_ = std::move(ws);
}

CrdMap::~CrdMap() = default;

Eigen::Index CrdMap::input_dim() const { return workspace_->n_nodes; }

Eigen::Index CrdMap::output_dim() const { return workspace_->obs.rows(); }

std::shared_ptr<const CrdMap::State> CrdMap::solve_state(const Eigen::VectorXd& m) const {
  const Workspace& ws = *workspace_;
  auto state = std::make_shared<State>();
  state->m = m;

  Eigen::VectorXd m_int(ws.n_int);
  for (Eigen::Index i = 0; i < ws.n_int; ++i)
    m_int[i] = m[ws.int_to_global[static_cast<std::size_t>(i)]];
  Eigen::VectorXd em = m_int.array().exp();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(ws.n_int);
  auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return ws.l_base * v + em.cwiseProduct(v.array().cube().matrix()) - ws.forcing;
  };

  Eigen::VectorXd r = residual(u);
  double merit = 0.5 * r.squaredNorm();
  state->residual_trace.push_back(r.norm());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  constexpr double c1 = 1e-4;
  int iter = 0;
  for (; iter < config_.newton_max_iters; ++iter) {
    if (r.lpNorm<Eigen::Infinity>() <= config_.newton_tol) break;

    Eigen::SparseMatrix<double> a_u = ws.l_base;
    Eigen::VectorXd reaction = 3.0 * em.cwiseProduct(u.cwiseProduct(u));
    for (Eigen::Index i = 0; i < ws.n_int; ++i) a_u.coeffRef(i, i) += reaction[i];
    if (!analyzed) {
      lu.analyzePattern(a_u);
      analyzed = true;
    }
    lu.factorize(a_u);
    require_numerical(lu.info() == Eigen::Success,
                      "crd: singular Newton linearization at iteration " +
                          std::to_string(iter));
    Eigen::VectorXd step = lu.solve(-r);

    // Armijo backtracking on φ = ½‖R‖²; ∇φᵀstep = −2φ for a Newton step.
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-10) {
      Eigen::VectorXd u_trial = u + alpha * step;
      Eigen::VectorXd r_trial = residual(u_trial);
      if (r_trial.allFinite()) {
        double merit_trial = 0.5 * r_trial.squaredNorm();
        if (merit_trial <= (1.0 - 2.0 * c1 * alpha) * merit) {
          u = std::move(u_trial);
          r = std::move(r_trial);
          merit = merit_trial;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    require_numerical(accepted, "crd: Newton line search failed at iteration " +
                                    std::to_string(iter) + ", residual " +
                                    std::to_string(r.norm()));
    state->residual_trace.push_back(r.norm());
  }
  require_numerical(u.allFinite(), "crd: non-finite state after Newton solve");
  require_numerical(r.lpNorm<Eigen::Infinity>() <= config_.newton_tol,
                    "crd: Newton did not converge in " +
                        std::to_string(config_.newton_max_iters) +
                        " iterations; last residual inf-norm " +
                        std::to_string(r.lpNorm<Eigen::Infinity>()));

  // Factorize the linearization at the converged state for Jacobian reuse.
  Eigen::SparseMatrix<double> a_u = ws.l_base;
  Eigen::VectorXd reaction = 3.0 * em.cwiseProduct(u.cwiseProduct(u));
  for (Eigen::Index i = 0; i < ws.n_int; ++i) a_u.coeffRef(i, i) += reaction[i];
  state->linearization.compute(a_u);
  require_numerical(state->linearization.info() == Eigen::Success,
                    "crd: singular linearization at the converged state");
  state->em_u3 = em.cwiseProduct(u.array().cube().matrix());
  state->u = std::move(u);
  return state;
}

std::shared_ptr<const CrdMap::State> CrdMap::state_at(const Eigen::VectorXd& m) const {
  require_config(m.size() == input_dim(), "crd: parameter has wrong dimension");
  require_config(m.allFinite(), "crd: parameter contains non-finite values");
  if (config_.cache_capacity == 0) return solve_state(m);

  const std::uint64_t key = hash_vector(m);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->first == key && it->second->m == m) {
        cache_.splice(cache_.begin(), cache_, it);  // LRU move-to-front
        return cache_.front().second;
      }
    }
  }
  std::shared_ptr<const State> state = solve_state(m);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->first == key && it->second->m == m) return it->second;  // lost the race
    }
    cache_.emplace_front(key, state);
    while (cache_.size() > config_.cache_capacity) cache_.pop_back();
  }
  return state;
}

Eigen::VectorXd CrdMap::evaluate(const Eigen::VectorXd& m) const {
  return workspace_->obs * state_at(m)->u;
}

Eigen::MatrixXd CrdMap::jacobian_action(const Eigen::VectorXd& m,
                                        const Eigen::MatrixXd& dm) const {
  require_config(dm.rows() == input_dim(), "crd: direction block has wrong dimension");
  const Workspace& ws = *workspace_;
  auto state = state_at(m);
  // Implicit differentiation of R(u, m) = 0: du = −A_u⁻¹ diag(e^m u³) dm.
  Eigen::MatrixXd rhs(ws.n_int, dm.cols());
  for (Eigen::Index i = 0; i < ws.n_int; ++i)
    rhs.row(i) = state->em_u3[i] * dm.row(ws.int_to_global[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd du = state->linearization.solve(rhs);
  return -(ws.obs * du);
}

Eigen::MatrixXd CrdMap::jacobian_transpose_action(const Eigen::VectorXd& m,
                                                  const Eigen::MatrixXd& w) const {
  require_config(w.rows() == output_dim(), "crd: adjoint block has wrong dimension");
  const Workspace& ws = *workspace_;
  auto state = state_at(m);
  Eigen::MatrixXd rhs = ws.obs.transpose() * w;
  Eigen::MatrixXd lambda = state->linearization.adjoint().solve(rhs);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(input_dim(), w.cols());
  for (Eigen::Index i = 0; i < ws.n_int; ++i)
    out.row(ws.int_to_global[static_cast<std::size_t>(i)]) =
        -state->em_u3[i] * lambda.row(i);
  return out;
}

Eigen::VectorXd CrdMap::full_state(const Eigen::VectorXd& m) const {
  const Workspace& ws = *workspace_;
  auto state = state_at(m);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(ws.n_nodes);
  for (Eigen::Index i = 0; i < ws.n_int; ++i)
    full[ws.int_to_global[static_cast<std::size_t>(i)]] = state->u[i];
  return full;
}

std::vector<double> CrdMap::newton_residual_trace(const Eigen::VectorXd& m) const {
  return state_at(m)->residual_trace;
}

LinearMap::LinearMap(Eigen::MatrixXd g) : g_(std::move(g)) {
  require_config(g_.size() > 0, "LinearMap: empty matrix");
}

Eigen::VectorXd LinearMap::evaluate(const Eigen::VectorXd& m) const {
  require_config(m.size() == g_.cols(), "LinearMap: dimension mismatch");
  return g_ * m;
}

Eigen::MatrixXd LinearMap::jacobian_action(const Eigen::VectorXd& m,
                                           const Eigen::MatrixXd& dm) const {
  require_config(dm.rows() == g_.cols(), "LinearMap: dimension mismatch");
  (void)m;
  return g_ * dm;
}

Eigen::MatrixXd LinearMap::jacobian_transpose_action(const Eigen::VectorXd& m,
                                                     const Eigen::MatrixXd& w) const {
  require_config(w.rows() == g_.rows(), "LinearMap: dimension mismatch");
  (void)m;
  return g_.transpose() * w;
}

OscillatoryMap::OscillatoryMap(Eigen::MatrixXd b_out, Eigen::MatrixXd w, double omega)
    : b_out_(std::move(b_out)), w_(std::move(w)), omega_(omega) {
  require_config(b_out_.cols() == w_.rows(),
                 "OscillatoryMap: inner dimensions disagree");
  require_config(omega_ > 0.0, "OscillatoryMap: omega must be > 0");
}

Eigen::VectorXd OscillatoryMap::evaluate(const Eigen::VectorXd& m) const {
  require_config(m.size() == w_.cols(), "OscillatoryMap: dimension mismatch");
  Eigen::VectorXd z = omega_ * (w_ * m);
  return b_out_ * z.array().sin().matrix();
}

Eigen::MatrixXd OscillatoryMap::jacobian_action(const Eigen::VectorXd& m,
                                                const Eigen::MatrixXd& dm) const {
  require_config(dm.rows() == w_.cols(), "OscillatoryMap: dimension mismatch");
  Eigen::VectorXd gain =
      omega_ * (omega_ * (w_ * m)).array().cos().matrix();
  return b_out_ * gain.asDiagonal() * (w_ * dm);
}

Eigen::MatrixXd OscillatoryMap::jacobian_transpose_action(const Eigen::VectorXd& m,
                                                          const Eigen::MatrixXd& w) const {
  require_config(w.rows() == b_out_.rows(), "OscillatoryMap: dimension mismatch");
  Eigen::VectorXd gain =
      omega_ * (omega_ * (w_ * m)).array().cos().matrix();
  return w_.transpose() * (gain.asDiagonal() * (b_out_.transpose() * w));
}

}  // namespace ridgeline::maps
