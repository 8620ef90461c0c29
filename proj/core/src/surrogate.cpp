#include "ridgeline/surrogate.hpp"

#include "ridgeline/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

namespace ridgeline::surrogate {

namespace {

double softplus(double x) {
  // Stable branches: for large x, ln(1+eˣ) = x + ln(1+e⁻ˣ) ≈ x.
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

struct Layout {
  Eigen::Index w0 = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, phi = 0, bq = 0;
  Eigen::Index total = 0;
};

Layout layout_of(const NetworkSpec& s) {
  Layout l;
  Eigen::Index at = 0;
  if (s.mode == Mode::FS) {
    l.w0 = at;
    at += s.input_rank * s.input_dim;
  }
  l.w1 = at;
  at += s.input_rank * s.input_rank;
  l.b1 = at;
  at += s.input_rank;
  l.w2 = at;
  at += s.output_rank * s.input_rank;
  l.b2 = at;
  at += s.output_rank;
  l.phi = at;
  at += s.output_dim * s.output_rank;
  l.bq = at;
  at += s.output_dim;
  l.total = at;
  return l;
}

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Mat = Eigen::Map<Eigen::MatrixXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

/// Column-major matrix views into the packed weight vector.
struct Views {
  ConstMat w0, w1, w2, phi;
  ConstVec b1, b2, bq;
};

Views views_of(const NetworkSpec& s, const Layout& l, const Eigen::VectorXd& w) {
  const double* d = w.data();
  return Views{ConstMat(d + l.w0, s.mode == Mode::FS ? s.input_rank : 0,
                        s.mode == Mode::FS ? s.input_dim : 0),
               ConstMat(d + l.w1, s.input_rank, s.input_rank),
               ConstMat(d + l.w2, s.output_rank, s.input_rank),
               ConstMat(d + l.phi, s.output_dim, s.output_rank),
               ConstVec(d + l.b1, s.input_rank),
               ConstVec(d + l.b2, s.output_rank),
               ConstVec(d + l.bq, s.output_dim)};
}

struct ForwardCache {
  Eigen::MatrixXd z0;      // r_M × N
  Eigen::MatrixXd s1, z1;  // sigmoid(a₁), softplus(a₁)
  Eigen::MatrixXd s2, z2;
  Eigen::MatrixXd qhat;    // d_Q × N
};

ForwardCache run_forward(const NetworkSpec& spec, const Views& v,
                         const Eigen::MatrixXd& m) {
  ForwardCache c;
  if (spec.mode == Mode::FS)
    c.z0 = v.w0 * m;
  else
    c.z0 = spec.input_layer.transpose() * m;

  Eigen::MatrixXd a1 = (v.w1 * c.z0).colwise() + v.b1;
  c.s1 = a1.unaryExpr([](double x) { return sigmoid(x); });
  c.z1 = a1.unaryExpr([](double x) { return softplus(x); });

  Eigen::MatrixXd a2 = (v.w2 * c.z1).colwise() + v.b2;
  c.s2 = a2.unaryExpr([](double x) { return sigmoid(x); });
  c.z2 = a2.unaryExpr([](double x) { return softplus(x); });

  c.qhat = (v.phi * c.z2).colwise() + v.bq;
  return c;
}

/// Adjoint of the network linearization: accumulates the gradient of
/// Σ_i ⟨g_i, f(m_i, w)⟩ into a fresh weight-shaped vector.  Shared by the
/// loss gradient (g = residual/N) and the Gauss–Newton product (g = Jv/N).
Eigen::VectorXd run_backward(const NetworkSpec& spec, const Layout& l,
                             const Views& v, const ForwardCache& c,
                             const Eigen::MatrixXd& m, const Eigen::MatrixXd& g) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(l.total);
  double* d = grad.data();

  Mat(d + l.phi, spec.output_dim, spec.output_rank) = g * c.z2.transpose();
  Vec(d + l.bq, spec.output_dim) = g.rowwise().sum();

  Eigen::MatrixXd da2 = (v.phi.transpose() * g).cwiseProduct(c.s2);
  Mat(d + l.w2, spec.output_rank, spec.input_rank) = da2 * c.z1.transpose();
  Vec(d + l.b2, spec.output_rank) = da2.rowwise().sum();

  Eigen::MatrixXd da1 = (v.w2.transpose() * da2).cwiseProduct(c.s1);
  Mat(d + l.w1, spec.input_rank, spec.input_rank) = da1 * c.z0.transpose();
  Vec(d + l.b1, spec.input_rank) = da1.rowwise().sum();

  if (spec.mode == Mode::FS) {
    Eigen::MatrixXd dz0 = v.w1.transpose() * da1;
    Mat(d + l.w0, spec.input_rank, spec.input_dim) = dz0 * m.transpose();
  }
  return grad;
}

/// Forward (tangent) sweep: J·dw per sample, linearizing around the cache.
Eigen::MatrixXd run_tangent(const NetworkSpec& spec, const Layout& l,
                            const Views& v, const ForwardCache& c,
                            const Eigen::MatrixXd& m, const Eigen::VectorXd& dw) {
  Views t = views_of(spec, l, dw);

  Eigen::MatrixXd dz0;
  if (spec.mode == Mode::FS)
    dz0 = t.w0 * m;
  else
    dz0 = Eigen::MatrixXd::Zero(spec.input_rank, m.cols());

  Eigen::MatrixXd da1 = ((t.w1 * c.z0 + v.w1 * dz0).colwise() + t.b1);
  Eigen::MatrixXd dz1 = da1.cwiseProduct(c.s1);
  Eigen::MatrixXd da2 = ((t.w2 * c.z1 + v.w2 * dz1).colwise() + t.b2);
  Eigen::MatrixXd dz2 = da2.cwiseProduct(c.s2);
  return (t.phi * c.z2 + v.phi * dz2).colwise() + t.bq;
}

void check_batch(const NetworkSpec& spec, const Eigen::MatrixXd& m,
                 const Eigen::MatrixXd& q) {
  require_config(m.cols() >= 1, "surrogate: empty batch");
  require_config(m.rows() == spec.input_dim,
                 "surrogate: input rows disagree with spec.input_dim");
  require_config(q.rows() == spec.output_dim && q.cols() == m.cols(),
                 "surrogate: output block shape disagrees with the batch");
}

double full_loss(const NetworkSpec& spec, const Views& v, const Eigen::MatrixXd& m,
                 const Eigen::MatrixXd& q) {
  Eigen::MatrixXd qhat = run_forward(spec, v, m).qhat;
  return (qhat - q).squaredNorm() / (2.0 * static_cast<double>(m.cols()));
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::AS: return "as";
    case Mode::KLE: return "kle";
    case Mode::RS: return "rs";
    case Mode::FS: return "fs";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "as") return Mode::AS;
  if (name == "kle") return Mode::KLE;
  if (name == "rs") return Mode::RS;
  if (name == "fs") return Mode::FS;
  throw_config("unknown surrogate mode '" + name + "' (expected as|kle|rs|fs)");
}

std::string to_string(Optimizer optimizer) {
  return optimizer == Optimizer::Adam ? "adam" : "newtoncg";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "newtoncg") return Optimizer::NewtonCg;
  throw_config("unknown optimizer '" + name + "' (expected adam|newtoncg)");
}

Eigen::Index NetworkSpec::d_w() const {
  Eigen::Index n = (input_rank * input_rank + input_rank) +
                   (input_rank * output_rank + output_rank) +
                   (output_dim * output_rank + output_dim);
  if (mode == Mode::FS) n += input_dim * input_rank;
  return n;
}

void NetworkSpec::validate() const {
  require_config(input_dim >= 1 && input_rank >= 1 && output_rank >= 1 &&
                     output_dim >= 1,
                 "NetworkSpec: all dimensions must be >= 1");
  if (mode != Mode::FS) {
    require_config(input_layer.rows() == input_dim && input_layer.cols() == input_rank,
                   "NetworkSpec: input_layer must be d_M × r_M");
  }
  require_config(output_init.rows() == output_dim && output_init.cols() == output_rank,
                 "NetworkSpec: output_init must be d_Q × r_Q");
  require_config(output_shift.size() == output_dim,
                 "NetworkSpec: output_shift must have length d_Q");
}

BatchSchedule batch_schedule(Eigen::Index n_train) {
  require_config(n_train >= 1, "batch_schedule: n_train must be >= 1");
  BatchSchedule s;
  if (n_train >= 256) {
    s.gradient = 128;
    s.curvature = 16;
  } else {
    s.gradient = std::max<Eigen::Index>(1, n_train / 4);
    s.curvature = std::max<Eigen::Index>(1, n_train / 32);
  }
  s.gradient = std::min(s.gradient, n_train);
  s.curvature = std::min(s.curvature, n_train);
  return s;
}

Eigen::VectorXd initialize_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Layout l = layout_of(spec);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(l.total);
  Rng rng(seed);

  // Glorot-uniform on [−√(6/(fan_in+fan_out)), +√(6/…)], filled column-major
  // in layout order so the draw sequence is part of the determinism contract.
  auto glorot = [&rng, &w](Eigen::Index offset, Eigen::Index rows, Eigen::Index cols,
                           Eigen::Index fan_in, Eigen::Index fan_out) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < rows * cols; ++i)
      w[offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
  };

  if (spec.mode == Mode::FS)
    glorot(l.w0, spec.input_rank, spec.input_dim, spec.input_dim, spec.input_rank);
  glorot(l.w1, spec.input_rank, spec.input_rank, spec.input_rank, spec.input_rank);
  glorot(l.w2, spec.output_rank, spec.input_rank, spec.input_rank, spec.output_rank);

  Mat(w.data() + l.phi, spec.output_dim, spec.output_rank) = spec.output_init;
  Vec(w.data() + l.bq, spec.output_dim) = spec.output_shift;
  return w;
}

Eigen::MatrixXd forward(const NetworkSpec& spec, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& m) {
  spec.validate();
  Layout l = layout_of(spec);
  require_config(weights.size() == l.total,
                 "forward: weight vector length disagrees with d_W");
  require_config(m.rows() == spec.input_dim,
                 "forward: input rows disagree with spec.input_dim");
  Views v = views_of(spec, l, weights);
  return run_forward(spec, v, m).qhat;
}

LossGradient loss_and_gradient(const NetworkSpec& spec,
                               const Eigen::VectorXd& weights,
                               const Eigen::MatrixXd& m_batch,
                               const Eigen::MatrixXd& q_batch) {
  spec.validate();
  check_batch(spec, m_batch, q_batch);
  Layout l = layout_of(spec);
  require_config(weights.size() == l.total,
                 "loss_and_gradient: weight vector length disagrees with d_W");
  Views v = views_of(spec, l, weights);
  ForwardCache c = run_forward(spec, v, m_batch);

  Eigen::MatrixXd residual = c.qhat - q_batch;
  const double n = static_cast<double>(m_batch.cols());
  LossGradient out;
  out.loss = residual.squaredNorm() / (2.0 * n);
  if (!std::isfinite(out.loss)) {
    for (Eigen::Index i = 0; i < residual.cols(); ++i) {
      if (!residual.col(i).allFinite())
        throw_numerical("loss_and_gradient: non-finite residual at sample " +
                        std::to_string(i));
    }
    throw_numerical("loss_and_gradient: non-finite loss");
  }
  out.gradient = run_backward(spec, l, v, c, m_batch, residual / n);
  return out;
}

Eigen::VectorXd gauss_newton_hvp(const NetworkSpec& spec,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::MatrixXd& m_batch,
                                 const Eigen::MatrixXd& q_batch,
                                 const Eigen::VectorXd& v, double damping) {
  spec.validate();
  check_batch(spec, m_batch, q_batch);
  Layout l = layout_of(spec);
  require_config(weights.size() == l.total && v.size() == l.total,
                 "gauss_newton_hvp: vector length disagrees with d_W");
  Views views = views_of(spec, l, weights);
  ForwardCache c = run_forward(spec, views, m_batch);
  Eigen::MatrixXd jv = run_tangent(spec, l, views, c, m_batch, v);
  Eigen::VectorXd hv =
      run_backward(spec, l, views, c, m_batch,
                   jv / static_cast<double>(m_batch.cols()));
  hv += damping * v;
  return hv;
}

TrainResult train(const NetworkSpec& spec, const TrainConfig& cfg,
                  const Eigen::MatrixXd& m_train, const Eigen::MatrixXd& q_train) {
  spec.validate();
  check_batch(spec, m_train, q_train);
  require_config(cfg.epochs >= 0, "train: epochs must be >= 0");
  const Eigen::Index n = m_train.cols();
  const BatchSchedule schedule = batch_schedule(n);
  const Layout l = layout_of(spec);

  TrainResult result;
  result.weights = initialize_weights(spec, cfg.seed);
  Eigen::VectorXd w = result.weights;
  Rng rng = Rng(cfg.seed).child(0x7261696e);  // batch-shuffle stream

  const double initial_loss = full_loss(spec, views_of(spec, l, w), m_train, q_train);
  double best_loss = initial_loss;

  // Adam state (unused for Newton-CG).
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(l.total);
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(l.total);
  double beta1_t = 1.0, beta2_t = 1.0;
  constexpr double kAdamEps = 1e-8;

  auto gather = [&](const std::vector<Eigen::Index>& order, Eigen::Index begin,
                    Eigen::Index count, Eigen::MatrixXd& mb, Eigen::MatrixXd& qb) {
    mb.resize(m_train.rows(), count);
    qb.resize(q_train.rows(), count);
    for (Eigen::Index j = 0; j < count; ++j) {
      mb.col(j) = m_train.col(order[static_cast<std::size_t>(begin + j)]);
      qb.col(j) = q_train.col(order[static_cast<std::size_t>(begin + j)]);
    }
  };

  const auto start = std::chrono::steady_clock::now();
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
    std::vector<Eigen::Index> order = rng.permutation(n);
    for (Eigen::Index begin = 0; begin < n; begin += schedule.gradient) {
      Eigen::Index count = std::min(schedule.gradient, n - begin);
      Eigen::MatrixXd mb, qb;
      gather(order, begin, count, mb, qb);
      LossGradient lg;
      try {
        lg = loss_and_gradient(spec, w, mb, qb);
      } catch (const Error& e) {
        // Overflow mid-epoch is divergence, not a hard failure: the caller
        // gets the flag plus the history recorded so far.
        if (e.kind() == ErrorKind::Config) throw;
        result.diverged = true;
        break;
      }

      if (cfg.optimizer == Optimizer::Adam) {
        beta1_t *= cfg.adam_beta1;
        beta2_t *= cfg.adam_beta2;
        adam_m = cfg.adam_beta1 * adam_m + (1.0 - cfg.adam_beta1) * lg.gradient;
        adam_v = cfg.adam_beta2 * adam_v +
                 (1.0 - cfg.adam_beta2) * lg.gradient.cwiseProduct(lg.gradient);
        Eigen::VectorXd m_hat = adam_m / (1.0 - beta1_t);
        Eigen::VectorXd v_hat = adam_v / (1.0 - beta2_t);
        w -= cfg.adam_step *
             (m_hat.array() / (v_hat.array().sqrt() + kAdamEps)).matrix();
      } else {
        // Subsampled inexact Newton-CG: curvature on a small sub-batch,
        // CG on (J_cᵀJ_c + λI) p = −g to a relative residual of cg_tolerance.
        Eigen::Index curv = std::min(schedule.curvature, count);
        Eigen::MatrixXd mc = mb.leftCols(curv);
        Eigen::MatrixXd qc = qb.leftCols(curv);
        auto hvp = [&](const Eigen::VectorXd& x) {
          return gauss_newton_hvp(spec, w, mc, qc, x, cfg.lm_damping);
        };

        Eigen::VectorXd p = Eigen::VectorXd::Zero(l.total);
        Eigen::VectorXd r = -lg.gradient;
        Eigen::VectorXd d = r;
        double rr = r.squaredNorm();
        const double stop = cfg.cg_tolerance * lg.gradient.norm();
        for (int it = 0; it < cfg.cg_max_iters && std::sqrt(rr) > stop; ++it) {
          Eigen::VectorXd hd = hvp(d);
          double dhd = d.dot(hd);
          if (dhd <= 0.0) break;  // damping should prevent this; stay safe
          double alpha = rr / dhd;
          p += alpha * d;
          r -= alpha * hd;
          double rr_new = r.squaredNorm();
          d = r + (rr_new / rr) * d;
          rr = rr_new;
        }
        if (p.squaredNorm() == 0.0) p = -lg.gradient;

        // Armijo backtracking on the gradient-batch loss.
        const double slope = lg.gradient.dot(p);
        double alpha = 1.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
          Eigen::VectorXd trial = w + alpha * p;
          double trial_loss = full_loss(spec, views_of(spec, l, trial), mb, qb);
          if (std::isfinite(trial_loss) &&
              trial_loss <= lg.loss + 1e-4 * alpha * slope) {
            w = std::move(trial);
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!accepted) continue;  // keep current weights for this batch
      }
    }

    double epoch_loss = full_loss(spec, views_of(spec, l, w), m_train, q_train);
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    result.history.push_back(EpochRecord{epoch, epoch_loss, elapsed});
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      result.weights = w;
    }
    // Negated form so a NaN loss also counts as divergence.
    if (!(epoch_loss <= 1e6 * initial_loss)) {
      result.diverged = true;
      break;
    }
  }
  return result;
}

Accuracy evaluate_accuracy(const NetworkSpec& spec, const Eigen::VectorXd& weights,
                           const Eigen::MatrixXd& m_test,
                           const Eigen::MatrixXd& q_test) {
  spec.validate();
  check_batch(spec, m_test, q_test);
  double denom = q_test.squaredNorm();
  require_config(denom > 0.0,
                 "evaluate_accuracy: all-zero test outputs (relative error "
                 "undefined)");
  Eigen::MatrixXd qhat = forward(spec, weights, m_test);
  Accuracy acc;
  acc.relative_error = std::sqrt((qhat - q_test).squaredNorm() / denom);
  acc.accuracy = 100.0 * (1.0 - acc.relative_error);
  return acc;
}

}  // namespace ridgeline::surrogate
