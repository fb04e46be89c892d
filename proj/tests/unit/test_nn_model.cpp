#include "gradcheck.hpp"
#include "oracles.hpp"

#include "handkin/nn/decoder.hpp"
#include "handkin/nn/mlr.hpp"
#include "handkin/nn/train.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace handkin;
using namespace handkin::nn;
using handkin::testing::random_tensor;

namespace {

DecoderConfig small_config(std::uint64_t seed = 1) {
  DecoderConfig cfg;
  cfg.conv_filters = {4, 6, 8};
  cfg.res_filters = {8, 8, 8};
  cfg.lstm_hidden = 5;
  cfg.seed = seed;
  return cfg;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("decoder length arithmetic for a 62 x 30 source window") {
  const auto d = plan_decoder(62, 30, DecoderConfig{});
  CHECK(d.block_lengths == std::vector<std::size_t>{10, 3, 1});
  CHECK(d.pooled == std::vector<bool>{true, true, true});
  CHECK(d.lstm_length == 1);
}

TEST_CASE("decoder auto-skips the third pool for a 32 x 15 sensor window") {
  const auto d = plan_decoder(32, 15, DecoderConfig{});
  CHECK(d.block_lengths == std::vector<std::size_t>{5, 1, 1});
  CHECK(d.pooled == std::vector<bool>{true, true, false});
  CHECK(descriptor_json(d).find("\"pooled\"") != std::string::npos);

  DecoderConfig strict;
  strict.auto_skip_pool = false;
  CHECK(minimal_input_length(strict) == 27);
  try {
    plan_decoder(32, 15, strict);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("27") != std::string::npos);
  }
  CHECK_NOTHROW(plan_decoder(32, 27, strict));
}

TEST_CASE("decoder output is batch x 3 and eval mode is pure") {
  std::mt19937_64 rng(8);
  for (std::size_t N : {3u, 15u, 20u, 25u, 30u}) {
    DecoderModel model(4, N, small_config());
    const Matrix x = random_matrix(5, static_cast<Eigen::Index>(4 * N), rng);
    // Running statistics start at (0, 1), so eval mode is usable straight away
    // only after one train-mode pass has marked them initialized.
    std::mt19937_64 drop(1);
    model.forward(Tensor::from_matrix(x), ForwardContext{true, true, &drop});
    const Matrix a = model.predict(x);
    const Matrix b = model.predict(x);
    CHECK(a.rows() == 5);
    CHECK(a.cols() == 3);
    CHECK(a == b);
  }
}

TEST_CASE("ResBlock with zero convolutions and zero BN scale is the identity") {
  std::mt19937_64 rng(21);
  ResBlock blk(4, {4, 4, 4}, 3, 0.5, rng);
  CHECK_FALSE(blk.project_skip);
  for (auto& c : blk.conv) c.weight->value.fill(0.0);
  for (auto& b : blk.bn) b.gamma->value.fill(0.0);
  Tensor x = random_tensor({3, 4, 5}, rng);
  for (auto& v : x.values()) v = std::abs(v);  // the join is followed by ReLU
  for (bool training : {false, true}) {
    for (auto& b : blk.bn) b.state.initialized = true;
    auto y = blk(constant(x), ForwardContext{training, false, nullptr});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y->value[i] == doctest::Approx(x[i]).epsilon(1e-15));
  }
}

TEST_CASE("ResBlock projects the skip path when channels change") {
  std::mt19937_64 rng(2);
  ResBlock blk(3, {4, 4, 6}, 3, 0.5, rng);
  CHECK(blk.project_skip);
  auto y = blk(constant(random_tensor({2, 3, 4}, rng)), ForwardContext{true, false, nullptr});
  CHECK(y->value.shape() == Shape{2, 6, 4});
}

TEST_CASE("model file round-trips parameters, running stats and descriptor") {
  std::mt19937_64 rng(5);
  DecoderModel model(3, 15, small_config(9));
  const Matrix x = random_matrix(6, 45, rng);
  std::mt19937_64 drop(3);
  model.forward(Tensor::from_matrix(x), ForwardContext{true, true, &drop});
  const auto path = std::filesystem::temp_directory_path() / "handkin_model_roundtrip.bin";
  save_model(model, path);
  auto loaded = load_model(path);
  CHECK(loaded->descriptor().pooled == model.descriptor().pooled);
  CHECK(loaded->predict(x) == model.predict(x));
  std::filesystem::remove(path);
}

TEST_CASE("adam: closed-form first step, zero gradient, quadratic bowl") {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  Tensor p({1}, 0.5);
  AdamMoments mom;
  adam_update(p, Tensor({1}, 1.0), mom, 1, cfg);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  CHECK(p[0] == doctest::Approx(0.5 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));

  Tensor q({3}, std::vector<double>{1, -2, 3});
  AdamMoments mq;
  for (std::uint64_t t = 1; t <= 100; ++t) adam_update(q, Tensor({3}, 0.0), mq, t, cfg);
  CHECK(q[0] == 1.0);
  CHECK(q[1] == -2.0);
  CHECK(q[2] == 3.0);

  auto w = parameter(Tensor({1}, 1.0));
  Adam opt({w}, AdamConfig{0.05});
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    w->grad[0] = 2.0 * w->value[0];  // d(w^2)/dw
    opt.step();
  }
  CHECK(std::abs(w->value[0]) < 1e-3);
  CHECK_THROWS_AS(adam_update(p, Tensor({2}), mom, 2, cfg), Error);
}

TEST_CASE("early stopping counter") {
  EarlyStopping es(5);
  const std::vector<double> seq{1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95};
  std::size_t stopped = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    es.update(seq[i]);
    if (es.should_stop()) {
      stopped = i + 1;
      break;
    }
  }
  CHECK(stopped == 7);
  CHECK(es.best_epoch() == 2);
  CHECK_THROWS_AS(EarlyStopping(0), Error);
}

TEST_CASE("train with a forced validation sequence stops and restores the best epoch") {
  std::mt19937_64 rng(13);
  const Matrix x = random_matrix(40, 2 * 9, rng);
  const Matrix y = random_matrix(40, 3, rng, 0.1);
  DecoderModel model(2, 9, small_config(4));
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 50;
  const std::vector<double> forced{1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.5};
  ParamSnapshot at_best;
  TrainHooks hooks;
  hooks.override_val_loss = [&](std::size_t epoch, double) { return forced.at(epoch - 1); };
  hooks.on_epoch_end = [&](std::size_t epoch, double, double) {
    if (epoch == 2) at_best = model.snapshot();
  };
  const auto rep = train(model, x, y, x, y, cfg, hooks);
  CHECK(rep.stopped_epoch == 7);
  CHECK(rep.best_epoch == 2);
  CHECK(rep.stopped_early);
  CHECK(rep.stopped_epoch - rep.best_epoch == cfg.patience);
  CHECK(rep.val_loss.size() == 7);
  const auto now = model.snapshot();
  bool all_equal = true;
  for (std::size_t i = 0; i < now.params.size(); ++i) {
    for (std::size_t k = 0; k < now.params[i].size(); ++k) all_equal = all_equal && now.params[i][k] == at_best.params[i][k];
  }
  CHECK(all_equal);
}

TEST_CASE("train: one epoch, determinism, argument checks") {
  std::mt19937_64 rng(17);
  const Matrix x = random_matrix(30, 2 * 9, rng);
  const Matrix y = random_matrix(30, 3, rng, 0.1);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 1;
  DecoderModel m1(2, 9, small_config(4));
  const auto r1 = train(m1, x, y, x, y, cfg);
  CHECK(r1.train_loss.size() == 1);
  CHECK(r1.val_loss.size() == 1);
  CHECK(r1.stopped_epoch == 1);
  CHECK(r1.best_epoch <= r1.stopped_epoch);

  cfg.max_epochs = 3;
  DecoderModel a(2, 9, small_config(4)), b(2, 9, small_config(4));
  const auto ra = train(a, x, y, x, y, cfg);
  const auto rb = train(b, x, y, x, y, cfg);
  CHECK(ra.same_trajectory(rb));
  CHECK(a.predict(x) == b.predict(x));

  CHECK_THROWS_AS(train(a, x.leftCols(10), y, x, y, cfg), Error);
  CHECK_THROWS_AS(train(a, x, y, x.topRows(0), y.topRows(0), cfg), Error);
  TrainConfig bad = cfg;
  bad.patience = 0;
  CHECK_THROWS_AS(train(a, x, y, x, y, bad), Error);
}

TEST_CASE("train reports divergence with the epoch index") {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(20, 18, rng);
  Matrix y = random_matrix(20, 3, rng);
  y(0, 0) = std::numeric_limits<double>::infinity();
  DecoderModel m(2, 9, small_config());
  TrainConfig cfg;
  cfg.batch_size = 20;
  try {
    train(m, x, y, x, y, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("mlr recovers exact linear maps") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(50, 4, rng);
  const Matrix w = random_matrix(4, 3, rng);
  const Eigen::RowVector3d c(0.5, -1.0, 2.0);
  const Matrix y = (x * w).rowwise() + c;
  const auto m = mlr_fit(x, y, 0.0);
  CHECK((m.weights.row(0) - c).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((m.weights.bottomRows(4) - w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((mlr_predict(m, x) - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mlr with zero inputs returns the target means as intercept") {
  std::mt19937_64 rng(2);
  const Matrix y = random_matrix(20, 3, rng);
  const auto m = mlr_fit(Matrix::Zero(20, 5), y);
  const Eigen::RowVectorXd mean = y.colwise().mean();
  CHECK((m.weights.row(0) - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.weights.bottomRows(5).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(mlr_fit(Matrix::Zero(20, 5), y, 0.0), Error);
  CHECK_THROWS_AS(mlr_fit(Matrix::Ones(3, 5), y.topRows(3), 0.0), Error);
}

TEST_CASE("mlr matches an explicit normal-equation solve") {
  std::mt19937_64 rng(7);
  const Matrix x = random_matrix(200, 10, rng);
  const Matrix y = random_matrix(200, 3, rng);
  const double lambda = 0.3;
  const auto m = mlr_fit(x, y, lambda);
  // Augmented design [1, X]; the ridge penalty skips the intercept.
  std::vector<std::vector<double>> A(11, std::vector<double>(11, 0.0));
  for (Eigen::Index r = 0; r < 200; ++r) {
    std::vector<double> z(11, 1.0);
    for (int j = 0; j < 10; ++j) z[static_cast<std::size_t>(j + 1)] = x(r, j);
    for (std::size_t i = 0; i < 11; ++i) {
      for (std::size_t j = 0; j < 11; ++j) A[i][j] += z[i] * z[j];
    }
  }
  for (std::size_t i = 1; i < 11; ++i) A[i][i] += lambda;
  for (Eigen::Index out = 0; out < 3; ++out) {
    std::vector<double> b(11, 0.0);
    for (Eigen::Index r = 0; r < 200; ++r) {
      b[0] += y(r, out);
      for (int j = 0; j < 10; ++j) b[static_cast<std::size_t>(j + 1)] += x(r, j) * y(r, out);
    }
    const auto sol = handkin::testing::gauss_solve(A, b);
    for (std::size_t i = 0; i < 11; ++i) CHECK(std::abs(sol[i] - m.weights(static_cast<Eigen::Index>(i), out)) < 1e-8);
  }
}
