#pragma once

#include "handkin/nn/graph.hpp"

#include <random>

namespace handkin::nn {

// x [B, C_in, L], w [C_out, C_in, K] (K odd), b [C_out] -> [B, C_out, L];
// zero padding K/2 on each side keeps the length.
Var conv1d(const Var& x, const Var& w, const Var& b);

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  bool initialized = false;  // false until the first train-mode update
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-channel normalization over (batch, length). Train mode uses batch
// statistics (biased variance) and updates the running statistics with the
// unbiased variance; eval mode uses the running statistics.
Var batchnorm1d(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool training);

Var relu(const Var& x);

// Inverted dropout: survivors scaled by 1/(1-rate). Identity when !active.
Var dropout(const Var& x, double rate, bool active, std::mt19937_64& rng);

// Non-overlapping stride-`pool` means along the last axis; the remainder is dropped.
Var avgpool1d(const Var& x, std::size_t pool);

Var add(const Var& a, const Var& b);

// x [B, D], w [O, D], b [O] -> [B, O]
Var linear(const Var& x, const Var& w, const Var& b);

Var reshape(const Var& x, Shape shape);

// x [B, C, L] read as a length-L sequence of C-vectors. Gate order i, f, g, o.
// w_ih [4H, C], w_hh [4H, H], b [4H]; h0 = c0 = 0. Returns [B, H, L].
Var lstm(const Var& x, const Var& w_ih, const Var& w_hh, const Var& b);

// Mean over all entries of (pred - target)^2.
Var mse_loss(const Var& pred, const Tensor& target);

}  // namespace handkin::nn
