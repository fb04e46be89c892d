#include "handkin/nn/train.hpp"

#include "handkin/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace handkin::nn {

void validate(const TrainConfig& cfg) {
  if (cfg.patience < 1) throw Error("train: patience must be >= 1");
  if (cfg.batch_size < 1) throw Error("train: batch size must be >= 1");
  if (cfg.max_epochs < 1) throw Error("train: max_epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw Error("train: learning rate must be positive");
}

bool TrainReport::same_trajectory(const TrainReport& o) const {
  return train_loss == o.train_loss && val_loss == o.val_loss && stopped_epoch == o.stopped_epoch &&
         best_epoch == o.best_epoch && stopped_early == o.stopped_early;
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw Error("early stopping: patience must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

double evaluate_mse(DecoderModel& model, const Matrix& inputs, const Matrix& targets, std::size_t batch) {
  const Matrix pred = model.predict(inputs, batch);
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) throw Error("evaluate: target shape mismatch");
  return (pred - targets).squaredNorm() / static_cast<double>(targets.size());
}

TrainReport train(DecoderModel& model, const Matrix& train_x, const Matrix& train_y, const Matrix& val_x,
                  const Matrix& val_y, const TrainConfig& cfg, const TrainHooks& hooks) {
  validate(cfg);
  const auto width = static_cast<Eigen::Index>(model.input_width());
  const auto outputs = static_cast<Eigen::Index>(model.descriptor().config.outputs);
  if (train_x.rows() == 0 || val_x.rows() == 0) throw Error("train: training and validation sets must be non-empty");
  if (train_x.cols() != width || val_x.cols() != width) {
    throw Error("train: feature width " + std::to_string(train_x.cols()) + " does not match model width " +
                std::to_string(width));
  }
  if (train_y.rows() != train_x.rows() || val_y.rows() != val_x.rows() || train_y.cols() != outputs ||
      val_y.cols() != outputs) {
    throw Error("train: target shape mismatch");
  }

  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam opt(model.parameters(), AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps});
  EarlyStopping stopper(cfg.patience);
  ParamSnapshot best = model.snapshot();
  TrainReport report;

  const std::size_t T = static_cast<std::size_t>(train_x.rows());
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);
  ForwardContext ctx{true, cfg.dropout, &dropout_rng};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < T; b0 += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, T - b0);
      // A lone trailing sample cannot form batch statistics.
      if (n == 1 && T > 1) continue;
      Tensor xb({n, static_cast<std::size_t>(width)});
      Tensor yb({n, static_cast<std::size_t>(outputs)});
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(order[b0 + i]);
        for (Eigen::Index j = 0; j < width; ++j) xb[i * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)] = train_x(r, j);
        for (Eigen::Index j = 0; j < outputs; ++j) yb[i * static_cast<std::size_t>(outputs) + static_cast<std::size_t>(j)] = train_y(r, j);
      }
      opt.zero_grad();
      Var loss = mse_loss(model.forward(xb, ctx), yb);
      const double lv = loss->value[0];
      if (!std::isfinite(lv)) throw Error("train: non-finite loss in epoch " + std::to_string(epoch) + " (diverged)");
      backward(loss);
      opt.step();
      loss_sum += lv;
      ++batches;
    }
    const double train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    double val_loss = evaluate_mse(model, val_x, val_y);
    if (hooks.override_val_loss) val_loss = hooks.override_val_loss(epoch, val_loss);
    if (!std::isfinite(val_loss)) throw Error("train: non-finite validation loss in epoch " + std::to_string(epoch));
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    report.stopped_epoch = epoch;
    if (stopper.update(val_loss)) best = model.snapshot();
    log::debug("epoch " + std::to_string(epoch) + " train " + std::to_string(train_loss) + " val " +
               std::to_string(val_loss));
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, train_loss, val_loss);
    if (stopper.should_stop()) {
      report.stopped_early = true;
      break;
    }
  }
  report.best_epoch = stopper.best_epoch();
  model.restore(best);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace handkin::nn
