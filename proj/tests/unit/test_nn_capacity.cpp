#include "handkin/nn/decoder.hpp"
#include "handkin/nn/mlr.hpp"
#include "handkin/nn/train.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace handkin;
using namespace handkin::nn;

// Kept apart from the fast model tests: this trains the full-size decoder.
TEST_CASE("decoder approaches the mLR oracle on noiseless linear targets 930 features wide") {
  // 62 scout series x 15 lags, the source-domain shape of a 150 ms window.
  const Eigen::Index M = 62, N = 15, T = 3000, T_train = 2400;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(T, M * N);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index m = 0; m < M; ++m) {
      double v = n(rng);
      for (Eigen::Index k = 0; k < N; ++k) {
        v = 0.9 * v + std::sqrt(1.0 - 0.81) * n(rng);
        x(t, m * N + k) = v;
      }
    }
  }
  Matrix w = Matrix::Zero(M * N, 3);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index k = N - 3; k < N; ++k) {
      for (Eigen::Index j = 0; j < 3; ++j) w(m * N + k, j) = n(rng);
    }
  }
  Matrix y = x * w;
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double sd = std::sqrt((y.col(j).array() - y.col(j).mean()).square().mean());
    y.col(j) = (y.col(j).array() / (4.0 * sd) + 0.5).matrix();
  }
  const Matrix xt = x.topRows(T_train), yt = y.topRows(T_train);
  const Matrix xv = x.bottomRows(T - T_train), yv = y.bottomRows(T - T_train);

  const auto lm = mlr_fit(xt, yt);
  const double oracle = (mlr_predict(lm, xv) - yv).squaredNorm() / static_cast<double>(yv.size());
  CHECK(oracle < 1e-10);

  DecoderModel model(M, N, DecoderConfig{});
  TrainConfig cfg;
  cfg.max_epochs = 50;
  const auto rep = train(model, xt, yt, xv, yv, cfg);
  const double best = *std::min_element(rep.val_loss.begin(), rep.val_loss.end());
  MESSAGE("linear-target val MSE " << best << " (target variance 0.0625) after " << rep.stopped_epoch << " epochs");
  CHECK(best < 1e-2);
}
