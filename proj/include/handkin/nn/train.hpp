#pragma once

#include "handkin/nn/decoder.hpp"
#include "handkin/nn/optim.hpp"

#include <functional>
#include <optional>

namespace handkin::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool dropout = true;
};

void validate(const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, mean over mini-batches
  std::vector<double> val_loss;
  std::size_t stopped_epoch = 0;  // 1-based, last epoch run
  std::size_t best_epoch = 0;     // 1-based
  bool stopped_early = false;
  double wall_time_s = 0.0;

  // Compares everything except wall time.
  bool same_trajectory(const TrainReport& o) const;
};

struct TrainHooks {
  // Replaces the measured validation loss of a 1-based epoch.
  std::function<double(std::size_t epoch, double measured)> override_val_loss;
  std::function<void(std::size_t epoch, double train_loss, double val_loss)> on_epoch_end;
};

// Patience counter over a stream of validation losses.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  // Returns true when the new loss is the best so far.
  bool update(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_;
};

// Eval-mode mean squared error over all entries.
double evaluate_mse(DecoderModel& model, const Matrix& inputs, const Matrix& targets, std::size_t batch = 256);

TrainReport train(DecoderModel& model, const Matrix& train_x, const Matrix& train_y, const Matrix& val_x,
                  const Matrix& val_y, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace handkin::nn
