#include "ridgeline/surrogate.hpp"

#include "ridgeline/errors.hpp"
#include "ridgeline/rng.hpp"
#include "ridgeline/subspaces.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace {

using ridgeline::Error;
using ridgeline::ErrorKind;
using ridgeline::Rng;
namespace sg = ridgeline::surrogate;

/// Offsets into the weight vector per the documented layout
/// [W0 (FS only) | W1 | b1 | W2 | b2 | Phi | bQ], matrices column-major.
struct Offsets {
  Eigen::Index w0 = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, phi = 0, bq = 0,
               total = 0;
};

Offsets offsets_of(const sg::NetworkSpec& spec) {
  Offsets o;
  const Eigen::Index n_w0 =
      spec.mode == sg::Mode::FS ? spec.input_dim * spec.input_rank : 0;
  o.w0 = 0;
  o.w1 = n_w0;
  o.b1 = o.w1 + spec.input_rank * spec.input_rank;
  o.w2 = o.b1 + spec.input_rank;
  o.b2 = o.w2 + spec.output_rank * spec.input_rank;
  o.phi = o.b2 + spec.output_rank;
  o.bq = o.phi + spec.output_dim * spec.output_rank;
  o.total = o.bq + spec.output_dim;
  return o;
}

sg::NetworkSpec make_spec(Eigen::Index d_m, Eigen::Index r_m, Eigen::Index r_q,
                          Eigen::Index d_q, sg::Mode mode, std::uint64_t seed) {
  sg::NetworkSpec spec;
  spec.input_dim = d_m;
  spec.input_rank = r_m;
  spec.output_rank = r_q;
  spec.output_dim = d_q;
  spec.mode = mode;
  Rng rng(seed);
  if (mode != sg::Mode::FS) {
    spec.input_layer = ridgeline::subspaces::random_basis(d_m, r_m, rng).matrix;
  }
  spec.output_init = rng.normal_matrix(d_q, r_q);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(spec.output_init);
  spec.output_init = qr.householderQ() * Eigen::MatrixXd::Identity(d_q, r_q);
  spec.output_shift = rng.normal_matrix(d_q, 1);
  return spec;
}

}  // namespace

TEST_CASE("d_w matches the enumerated trainable count") {
  sg::NetworkSpec spec = make_spec(50, 4, 3, 10, sg::Mode::AS, 1);
  CHECK(spec.d_w() == (16 + 4) + (12 + 3) + (30 + 10));
  CHECK(spec.d_w() == offsets_of(spec).total);

  sg::NetworkSpec fs = make_spec(50, 4, 3, 10, sg::Mode::FS, 1);
  CHECK(fs.d_w() == spec.d_w() + 50 * 4);
  CHECK(fs.d_w() == offsets_of(fs).total);
  CHECK(sg::initialize_weights(spec, 7).size() == spec.d_w());
  CHECK(sg::initialize_weights(fs, 7).size() == fs.d_w());
}

TEST_CASE("projected weight count is mesh-independent, FS grows") {
  Eigen::Index previous_fs = 0;
  Eigen::Index projected = -1;
  for (Eigen::Index d_m : {100, 400, 1600}) {
    sg::NetworkSpec spec = make_spec(d_m, 8, 8, 49, sg::Mode::KLE, 2);
    if (projected < 0) projected = spec.d_w();
    CHECK(spec.d_w() == projected);

    sg::NetworkSpec fs = make_spec(d_m, 8, 8, 49, sg::Mode::FS, 2);
    CHECK(fs.d_w() > previous_fs);
    CHECK(fs.d_w() == projected + d_m * 8);
    previous_fs = fs.d_w();
  }
}

TEST_CASE("zero inner weights reduce the network to the softplus ladder") {
  sg::NetworkSpec spec = make_spec(9, 3, 2, 4, sg::Mode::AS, 3);
  Offsets o = offsets_of(spec);
  Rng rng(4);
  Eigen::MatrixXd m = rng.normal_matrix(9, 6);

  // All trainable weights zero except the output layer: with W2 = 0 each
  // second pre-activation is 0, so z2 = ln(2)·1 and qhat = ln2·Phi·1 + bQ.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(o.total);
  Eigen::Map<Eigen::MatrixXd>(w.data() + o.phi, 4, 2) = spec.output_init;
  w.segment(o.bq, 4) = spec.output_shift;

  Eigen::MatrixXd qhat = sg::forward(spec, w, m);
  Eigen::VectorXd expect =
      std::log(2.0) * spec.output_init.rowwise().sum() + spec.output_shift;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    CHECK((qhat.col(j) - expect).cwiseAbs().maxCoeff() <= 1e-14);
  }

  // Output layer also zeroed: the network is the constant bQ.
  Eigen::VectorXd w_const = Eigen::VectorXd::Zero(o.total);
  w_const.segment(o.bq, 4) = spec.output_shift;
  Eigen::MatrixXd constant = sg::forward(spec, w_const, m);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    CHECK((constant.col(j) - spec.output_shift).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("forward returns finite predictions of the right shape") {
  sg::NetworkSpec spec = make_spec(12, 4, 3, 5, sg::Mode::RS, 5);
  Eigen::VectorXd w = sg::initialize_weights(spec, 11);
  Rng rng(6);
  Eigen::MatrixXd m = rng.normal_matrix(12, 1000);
  Eigen::MatrixXd qhat = sg::forward(spec, w, m);
  CHECK(qhat.rows() == 5);
  CHECK(qhat.cols() == 1000);
  CHECK(qhat.allFinite());

  CHECK_THROWS_AS(sg::forward(spec, w, rng.normal_matrix(7, 3)), Error);
  CHECK_THROWS_AS(sg::forward(spec, Eigen::VectorXd::Zero(3), m), Error);
}

TEST_CASE("initialize_weights is seeded and plants the output layer") {
  for (sg::Mode mode : {sg::Mode::AS, sg::Mode::FS}) {
    sg::NetworkSpec spec = make_spec(10, 4, 3, 6, mode, 7);
    Offsets o = offsets_of(spec);
    Eigen::VectorXd w = sg::initialize_weights(spec, 42);
    CHECK(w == sg::initialize_weights(spec, 42));
    CHECK(w != sg::initialize_weights(spec, 43));

    Eigen::MatrixXd phi = Eigen::Map<Eigen::MatrixXd>(w.data() + o.phi, 6, 3);
    CHECK(phi == spec.output_init);
    CHECK(w.segment(o.bq, 6) == spec.output_shift);
    CHECK(w.segment(o.b1, 4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.segment(o.b2, 3).cwiseAbs().maxCoeff() == 0.0);
    // Glorot layers are non-degenerate.
    CHECK(w.segment(o.w1, 16).cwiseAbs().maxCoeff() > 0.0);
    if (mode == sg::Mode::FS) {
      CHECK(w.segment(o.w0, 40).cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("loss and gradient vanish on a residual-zero batch") {
  sg::NetworkSpec spec = make_spec(8, 4, 4, 5, sg::Mode::AS, 8);
  Eigen::VectorXd w = sg::initialize_weights(spec, 9);
  Rng rng(10);
  Eigen::MatrixXd m = rng.normal_matrix(8, 7);
  Eigen::MatrixXd q = sg::forward(spec, w, m);

  sg::LossGradient lg = sg::loss_and_gradient(spec, w, m, q);
  CHECK(lg.loss <= 1e-14);
  CHECK(lg.gradient.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("gradient matches central finite differences in every mode") {
  for (sg::Mode mode :
       {sg::Mode::AS, sg::Mode::KLE, sg::Mode::RS, sg::Mode::FS}) {
    sg::NetworkSpec spec = make_spec(8, 4, 4, 5, mode, 12);
    Rng rng(13);
    Eigen::VectorXd w = sg::initialize_weights(spec, 14) +
                        0.1 * Eigen::VectorXd(rng.normal_matrix(spec.d_w(), 1));
    Eigen::MatrixXd m = rng.normal_matrix(8, 5);
    Eigen::MatrixXd q =
        sg::forward(spec, w, m) + 0.3 * rng.normal_matrix(5, 5);

    sg::LossGradient lg = sg::loss_and_gradient(spec, w, m, q);
    const double gmax = lg.gradient.cwiseAbs().maxCoeff();
    REQUIRE(gmax > 0.0);

    const double eps = 1e-6;
    for (Eigen::Index j = 0; j < spec.d_w(); ++j) {
      Eigen::VectorXd wp = w;
      Eigen::VectorXd wm = w;
      wp[j] += eps;
      wm[j] -= eps;
      double fd = (sg::loss_and_gradient(spec, wp, m, q).loss -
                   sg::loss_and_gradient(spec, wm, m, q).loss) /
                  (2.0 * eps);
      CHECK(std::abs(fd - lg.gradient[j]) <=
            1e-6 * std::max(std::abs(lg.gradient[j]), 0.01 * gmax));
    }
  }
}

TEST_CASE("duplicating the batch leaves loss and gradient unchanged") {
  sg::NetworkSpec spec = make_spec(8, 3, 3, 4, sg::Mode::AS, 15);
  Rng rng(16);
  Eigen::VectorXd w = sg::initialize_weights(spec, 17);
  Eigen::MatrixXd m = rng.normal_matrix(8, 6);
  Eigen::MatrixXd q = rng.normal_matrix(4, 6);

  Eigen::MatrixXd m2(8, 12);
  m2 << m, m;
  Eigen::MatrixXd q2(4, 12);
  q2 << q, q;

  sg::LossGradient one = sg::loss_and_gradient(spec, w, m, q);
  sg::LossGradient two = sg::loss_and_gradient(spec, w, m2, q2);
  CHECK(std::abs(one.loss - two.loss) <= 1e-14 * one.loss);
  CHECK((one.gradient - two.gradient).cwiseAbs().maxCoeff() <=
        1e-14 * one.gradient.cwiseAbs().maxCoeff());
}

TEST_CASE("non-finite residuals raise an error naming the sample") {
  sg::NetworkSpec spec = make_spec(6, 3, 3, 4, sg::Mode::AS, 18);
  Eigen::VectorXd w = sg::initialize_weights(spec, 19);
  Rng rng(20);
  Eigen::MatrixXd m = rng.normal_matrix(6, 4);
  Eigen::MatrixXd q = rng.normal_matrix(4, 4);
  q(1, 2) = std::numeric_limits<double>::infinity();

  try {
    sg::loss_and_gradient(spec, w, m, q);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
  }
}

TEST_CASE("Gauss-Newton HVP matches the exact dense operator") {
  sg::NetworkSpec spec = make_spec(10, 4, 4, 5, sg::Mode::AS, 21);
  REQUIRE(spec.d_w() <= 200);
  const Eigen::Index d_w = spec.d_w();
  Rng rng(22);
  Eigen::VectorXd w = sg::initialize_weights(spec, 23) +
                      0.1 * Eigen::VectorXd(rng.normal_matrix(d_w, 1));
  const Eigen::Index n = 4;
  Eigen::MatrixXd m = rng.normal_matrix(10, n);
  Eigen::MatrixXd q_base = sg::forward(spec, w, m);

  // Exact Jacobian rows via reverse mode: with the residual set to N·e_(i,s)
  // the batch gradient is exactly row (i, s) of J.
  const Eigen::Index d_q = spec.output_dim;
  Eigen::MatrixXd jac(n * d_q, d_w);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index i = 0; i < d_q; ++i) {
      Eigen::MatrixXd q_probe = q_base;
      q_probe(i, s) -= static_cast<double>(n);
      jac.row(s * d_q + i) =
          sg::loss_and_gradient(spec, w, m, q_probe).gradient.transpose();
    }
  }
  Eigen::MatrixXd dense_h = jac.transpose() * jac / static_cast<double>(n);

  Rng probe_rng(24);
  Eigen::MatrixXd q = q_base + 0.2 * probe_rng.normal_matrix(d_q, n);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd v = probe_rng.normal_matrix(d_w, 1);
    Eigen::VectorXd hv = sg::gauss_newton_hvp(spec, w, m, q, v, 0.0);
    Eigen::VectorXd oracle = dense_h * v;
    CHECK((hv - oracle).cwiseAbs().maxCoeff() <=
          1e-8 * oracle.cwiseAbs().maxCoeff());
  }

  // Zero direction, damping shift, and symmetry of the probed operator.
  CHECK(sg::gauss_newton_hvp(spec, w, m, q, Eigen::VectorXd::Zero(d_w), 0.7)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  Eigen::VectorXd v = probe_rng.normal_matrix(d_w, 1);
  Eigen::VectorXd damped = sg::gauss_newton_hvp(spec, w, m, q, v, 0.5);
  Eigen::VectorXd plain = sg::gauss_newton_hvp(spec, w, m, q, v, 0.0);
  CHECK((damped - plain - 0.5 * v).cwiseAbs().maxCoeff() <=
        1e-14 * v.cwiseAbs().maxCoeff());

  Eigen::VectorXd u = probe_rng.normal_matrix(d_w, 1);
  double uv = u.dot(sg::gauss_newton_hvp(spec, w, m, q, v, 0.0));
  double vu = v.dot(sg::gauss_newton_hvp(spec, w, m, q, u, 0.0));
  CHECK(std::abs(uv - vu) <= 1e-10 * std::abs(uv));
}

TEST_CASE("batch schedule follows the documented breakpoints") {
  CHECK(sg::batch_schedule(512).gradient == 128);
  CHECK(sg::batch_schedule(512).curvature == 16);
  CHECK(sg::batch_schedule(256).gradient == 128);
  CHECK(sg::batch_schedule(256).curvature == 16);
  CHECK(sg::batch_schedule(128).gradient == 32);
  CHECK(sg::batch_schedule(128).curvature == 4);
  CHECK(sg::batch_schedule(64).gradient == 16);
  CHECK(sg::batch_schedule(64).curvature == 2);
  CHECK(sg::batch_schedule(16).gradient == 4);
  CHECK(sg::batch_schedule(16).curvature == 1);
  for (Eigen::Index n : {8, 16, 64, 128, 256, 1024}) {
    sg::BatchSchedule s = sg::batch_schedule(n);
    CHECK(s.gradient >= 1);
    CHECK(s.gradient <= n);
    CHECK(s.curvature >= 1);
    CHECK(s.curvature <= n);
  }
}

TEST_CASE("training fits a realizable linear target") {
  const Eigen::Index d_m = 6;
  const Eigen::Index d_q = 3;
  sg::NetworkSpec spec;
  spec.input_dim = d_m;
  spec.input_rank = d_m;
  spec.output_rank = d_q;
  spec.output_dim = d_q;
  spec.mode = sg::Mode::AS;
  spec.input_layer = Eigen::MatrixXd::Identity(d_m, d_m);

  Rng rng(25);
  Eigen::MatrixXd g = rng.normal_matrix(d_q, d_m);
  Eigen::MatrixXd m_train = rng.normal_matrix(d_m, 512);
  Eigen::MatrixXd q_train = g * m_train;

  ridgeline::subspaces::PodResult pod = ridgeline::subspaces::pod(q_train, d_q);
  spec.output_init = pod.basis.matrix;
  spec.output_shift = pod.mean;

  sg::TrainConfig cfg;
  cfg.optimizer = sg::Optimizer::NewtonCg;
  cfg.epochs = 80;
  cfg.seed = 26;
  sg::TrainResult result = sg::train(spec, cfg, m_train, q_train);
  CHECK_FALSE(result.diverged);
  REQUIRE(!result.history.empty());
  CHECK(result.history.back().loss < result.history.front().loss);

  sg::Accuracy fit =
      sg::evaluate_accuracy(spec, result.weights, m_train, q_train);
  CHECK(fit.relative_error <= 5e-2);
}

TEST_CASE("training is deterministic and returns best-so-far weights") {
  sg::NetworkSpec spec = make_spec(10, 3, 3, 4, sg::Mode::KLE, 27);
  Rng rng(28);
  Eigen::MatrixXd m_train = rng.normal_matrix(10, 64);
  Eigen::MatrixXd q_train =
      rng.normal_matrix(4, 10) * m_train.topRows(10) * 0.3;

  sg::TrainConfig cfg;
  cfg.optimizer = sg::Optimizer::Adam;
  cfg.epochs = 30;
  cfg.seed = 29;

  sg::TrainResult a = sg::train(spec, cfg, m_train, q_train);
  sg::TrainResult b = sg::train(spec, cfg, m_train, q_train);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].epoch == b.history[i].epoch);
    CHECK(a.history[i].loss == b.history[i].loss);
  }
  CHECK(a.weights == b.weights);

  sg::TrainConfig other = cfg;
  other.seed = 30;
  sg::TrainResult c = sg::train(spec, other, m_train, q_train);
  CHECK(a.weights != c.weights);

  // The returned weights realize the smallest recorded full-set loss.
  double best = std::numeric_limits<double>::infinity();
  for (const sg::EpochRecord& rec : a.history) best = std::min(best, rec.loss);
  sg::LossGradient lg = sg::loss_and_gradient(spec, a.weights, m_train, q_train);
  CHECK(lg.loss == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("an exploding step size trips the divergence flag") {
  sg::NetworkSpec spec = make_spec(8, 3, 3, 4, sg::Mode::AS, 31);
  Rng rng(32);
  Eigen::MatrixXd m_train = rng.normal_matrix(8, 32);
  Eigen::MatrixXd q_train = rng.normal_matrix(4, 32);

  sg::TrainConfig cfg;
  cfg.optimizer = sg::Optimizer::Adam;
  cfg.epochs = 20;
  cfg.seed = 33;
  cfg.adam_step = 1e8;

  sg::TrainResult result = sg::train(spec, cfg, m_train, q_train);
  CHECK(result.diverged);
  CHECK(result.history.size() < 20);
  CHECK(result.weights.allFinite());
}

TEST_CASE("evaluate_accuracy reproduces the hand examples") {
  sg::NetworkSpec spec = make_spec(4, 2, 2, 2, sg::Mode::AS, 34);
  Offsets o = offsets_of(spec);
  Eigen::MatrixXd m_test = Eigen::MatrixXd::Zero(4, 1);
  Eigen::MatrixXd q_test(2, 1);
  q_test << 3.0, 4.0;

  // Constant network: all zero except bQ.
  Eigen::VectorXd w_zero = Eigen::VectorXd::Zero(o.total);
  sg::Accuracy zero = sg::evaluate_accuracy(spec, w_zero, m_test, q_test);
  CHECK(zero.relative_error == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(zero.accuracy == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::VectorXd w_three = Eigen::VectorXd::Zero(o.total);
  w_three[o.bq] = 3.0;
  sg::Accuracy three = sg::evaluate_accuracy(spec, w_three, m_test, q_test);
  CHECK(three.relative_error == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(three.accuracy == doctest::Approx(20.0).epsilon(1e-12));

  CHECK_THROWS_AS(
      sg::evaluate_accuracy(spec, w_zero, m_test, Eigen::MatrixXd::Zero(2, 1)),
      Error);
}

TEST_CASE("accuracy is invariant under test-set permutation") {
  sg::NetworkSpec spec = make_spec(9, 3, 3, 5, sg::Mode::RS, 35);
  Eigen::VectorXd w = sg::initialize_weights(spec, 36);
  Rng rng(37);
  Eigen::MatrixXd m_test = rng.normal_matrix(9, 40);
  Eigen::MatrixXd q_test = rng.normal_matrix(5, 40);

  sg::Accuracy base = sg::evaluate_accuracy(spec, w, m_test, q_test);

  std::vector<Eigen::Index> perm = rng.permutation(40);
  Eigen::MatrixXd m_perm(9, 40);
  Eigen::MatrixXd q_perm(5, 40);
  for (Eigen::Index j = 0; j < 40; ++j) {
    m_perm.col(j) = m_test.col(perm[static_cast<std::size_t>(j)]);
    q_perm.col(j) = q_test.col(perm[static_cast<std::size_t>(j)]);
  }
  sg::Accuracy permuted = sg::evaluate_accuracy(spec, w, m_perm, q_perm);
  CHECK(permuted.relative_error ==
        doctest::Approx(base.relative_error).epsilon(1e-12));
}

TEST_CASE("mode and optimizer names round-trip") {
  for (sg::Mode mode :
       {sg::Mode::AS, sg::Mode::KLE, sg::Mode::RS, sg::Mode::FS}) {
    CHECK(sg::mode_from_string(sg::to_string(mode)) == mode);
  }
  for (sg::Optimizer opt : {sg::Optimizer::Adam, sg::Optimizer::NewtonCg}) {
    CHECK(sg::optimizer_from_string(sg::to_string(opt)) == opt);
  }
  CHECK_THROWS_AS(sg::mode_from_string("nope"), Error);
  CHECK_THROWS_AS(sg::optimizer_from_string("sgd"), Error);
}

TEST_CASE("NetworkSpec validation catches inconsistent shapes") {
  sg::NetworkSpec spec = make_spec(10, 4, 3, 6, sg::Mode::AS, 38);
  CHECK_NOTHROW(spec.validate());

  sg::NetworkSpec bad_layer = spec;
  bad_layer.input_layer = Eigen::MatrixXd::Zero(10, 2);
  CHECK_THROWS_AS(bad_layer.validate(), Error);

  sg::NetworkSpec bad_init = spec;
  bad_init.output_init = Eigen::MatrixXd::Zero(5, 3);
  CHECK_THROWS_AS(bad_init.validate(), Error);

  sg::NetworkSpec bad_rank = spec;
  bad_rank.input_rank = 0;
  CHECK_THROWS_AS(bad_rank.validate(), Error);
}
