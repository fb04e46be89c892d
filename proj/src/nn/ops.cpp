#include "handkin/nn/ops.hpp"

#include <cmath>

namespace handkin::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<const RowMat>;
using Idx = Eigen::Index;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

Idx ix(std::size_t v) { return static_cast<Idx>(v); }

}  // namespace

Var conv1d(const Var& x, const Var& w, const Var& b) {
  const Tensor& X = x->value;
  const Tensor& W = w->value;
  require(X.ndim() == 3 && W.ndim() == 3 && b->value.ndim() == 1,
          "conv1d: expected x [B,C,L], w [O,C,K], b [O]; got " + shape_string(X.shape()) + ", " +
              shape_string(W.shape()) + ", " + shape_string(b->value.shape()));
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  const std::size_t O = W.dim(0), K = W.dim(2);
  require(W.dim(1) == C, "conv1d: weight expects " + std::to_string(W.dim(1)) + " input channels, x has " +
                             std::to_string(C));
  require(K % 2 == 1, "conv1d: kernel size must be odd");
  require(b->value.dim(0) == O, "conv1d: bias length must equal output channels");
  const std::size_t pad = K / 2;

  // im2col: rows (c, k), columns (n, t).
  auto cols = std::make_shared<RowMat>(RowMat::Zero(ix(C * K), ix(B * L)));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      double* dst = cols->row(ix(c * K + k)).data();
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t t = 0; t < L; ++t) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(L)) dst[n * L + t] = X.at(n, c, static_cast<std::size_t>(src));
        }
      }
    }
  }
  const CMapR Wm(W.data(), ix(O), ix(C * K));
  RowMat Y = Wm * (*cols);
  Tensor out({B, O, L});
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      const double bias = b->value[o];
      for (std::size_t t = 0; t < L; ++t) out.at(n, o, t) = Y(ix(o), ix(n * L + t)) + bias;
    }
  }

  Var y = make_node(std::move(out), {x, w, b});
  Node* self = y.get();
  y->backward_fn = [self, cols, B, C, L, O, K, pad]() {
    Node& xn = *self->parents[0];
    Node& wn = *self->parents[1];
    Node& bn = *self->parents[2];
    const Tensor& G = self->grad;
    RowMat dY(ix(O), ix(B * L));
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t t = 0; t < L; ++t) dY(ix(o), ix(n * L + t)) = G.at(n, o, t);
      }
    }
    if (wn.requires_grad) MapR(wn.grad.data(), ix(O), ix(C * K)).noalias() += dY * cols->transpose();
    if (bn.requires_grad) {
      for (std::size_t o = 0; o < O; ++o) bn.grad[o] += dY.row(ix(o)).sum();
    }
    if (xn.requires_grad) {
      const RowMat dcols = CMapR(wn.value.data(), ix(O), ix(C * K)).transpose() * dY;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < K; ++k) {
          const double* src = dcols.row(ix(c * K + k)).data();
          for (std::size_t n = 0; n < B; ++n) {
            for (std::size_t t = 0; t < L; ++t) {
              const std::ptrdiff_t dst = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
              if (dst >= 0 && dst < static_cast<std::ptrdiff_t>(L)) {
                xn.grad.at(n, c, static_cast<std::size_t>(dst)) += src[n * L + t];
              }
            }
          }
        }
      }
    }
  };
  return y;
}

Var batchnorm1d(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool training) {
  const Tensor& X = x->value;
  require(X.ndim() == 3, "batchnorm1d: expected x [B,C,L], got " + shape_string(X.shape()));
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  require(gamma->value.size() == C && beta->value.size() == C, "batchnorm1d: gamma/beta must have C entries");
  const double count = static_cast<double>(B * L);
  if (state.running_mean.size() != C) {
    state.running_mean = Tensor({C}, 0.0);
    state.running_var = Tensor({C}, 1.0);
    state.initialized = false;
  }

  std::vector<double> mean(C), inv_std(C);
  if (training) {
    require(B * L > 1, "batchnorm1d: train mode needs batch * length > 1 per channel");
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t t = 0; t < L; ++t) s += X.at(n, c, t);
      }
      mean[c] = s / count;
      double ss = 0.0;
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t t = 0; t < L; ++t) {
          const double d = X.at(n, c, t) - mean[c];
          ss += d * d;
        }
      }
      const double var = ss / count;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      const double m = state.momentum;
      state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mean[c];
      state.running_var[c] = (1.0 - m) * state.running_var[c] + m * ss / (count - 1.0);
    }
    state.initialized = true;
  } else {
    require(state.initialized, "batchnorm1d: eval mode before any running-statistics update");
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  Tensor xhat({B, C, L});
  Tensor out({B, C, L});
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < L; ++t) {
        const double h = (X.at(n, c, t) - mean[c]) * inv_std[c];
        xhat.at(n, c, t) = h;
        out.at(n, c, t) = gamma->value[c] * h + beta->value[c];
      }
    }
  }

  Var y = make_node(std::move(out), {x, gamma, beta});
  Node* self = y.get();
  y->backward_fn = [self, xhat = std::move(xhat), inv_std = std::move(inv_std), training, B, C, L, count]() {
    Node& xn = *self->parents[0];
    Node& gn = *self->parents[1];
    Node& bn = *self->parents[2];
    const Tensor& G = self->grad;
    for (std::size_t c = 0; c < C; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t t = 0; t < L; ++t) {
          sum_dy += G.at(n, c, t);
          sum_dy_xhat += G.at(n, c, t) * xhat.at(n, c, t);
        }
      }
      if (gn.requires_grad) gn.grad[c] += sum_dy_xhat;
      if (bn.requires_grad) bn.grad[c] += sum_dy;
      if (!xn.requires_grad) continue;
      const double g = gn.value[c];
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t t = 0; t < L; ++t) {
          const double dy = G.at(n, c, t);
          xn.grad.at(n, c, t) += training ? g * inv_std[c] * (dy - sum_dy / count - xhat.at(n, c, t) * sum_dy_xhat / count)
                                          : g * inv_std[c] * dy;
        }
      }
    }
  };
  return y;
}

Var relu(const Var& x) {
  Tensor out = x->value;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  Var y = make_node(std::move(out), {x});
  Node* self = y.get();
  y->backward_fn = [self]() {
    Node& xn = *self->parents[0];
    for (std::size_t i = 0; i < xn.value.size(); ++i) {
      if (xn.value[i] > 0.0) xn.grad[i] += self->grad[i];
    }
  };
  return y;
}

Var dropout(const Var& x, double rate, bool active, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (!active || rate == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x->value.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& m : mask) m = u(rng) < rate ? 0.0 : scale;
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  Var y = make_node(std::move(out), {x});
  Node* self = y.get();
  y->backward_fn = [self, mask = std::move(mask)]() {
    Node& xn = *self->parents[0];
    for (std::size_t i = 0; i < mask.size(); ++i) xn.grad[i] += mask[i] * self->grad[i];
  };
  return y;
}

Var avgpool1d(const Var& x, std::size_t pool) {
  const Tensor& X = x->value;
  require(X.ndim() == 3, "avgpool1d: expected x [B,C,L]");
  require(pool >= 1, "avgpool1d: pool must be >= 1");
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  require(L >= pool, "avgpool1d: length " + std::to_string(L) + " shorter than pool " + std::to_string(pool));
  const std::size_t Lo = L / pool;
  Tensor out({B, C, Lo});
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < Lo; ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < pool; ++k) s += X.at(n, c, t * pool + k);
        out.at(n, c, t) = s / static_cast<double>(pool);
      }
    }
  }
  Var y = make_node(std::move(out), {x});
  Node* self = y.get();
  y->backward_fn = [self, B, C, Lo, pool]() {
    Node& xn = *self->parents[0];
    const double inv = 1.0 / static_cast<double>(pool);
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < Lo; ++t) {
          const double g = self->grad.at(n, c, t) * inv;
          for (std::size_t k = 0; k < pool; ++k) xn.grad.at(n, c, t * pool + k) += g;
        }
      }
    }
  };
  return y;
}

Var add(const Var& a, const Var& b) {
  require(a->value.same_shape(b->value), "add: shape mismatch " + shape_string(a->value.shape()) + " vs " +
                                             shape_string(b->value.shape()));
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  Var y = make_node(std::move(out), {a, b});
  Node* self = y.get();
  y->backward_fn = [self]() {
    for (auto& p : self->parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self->grad.size(); ++i) p->grad[i] += self->grad[i];
    }
  };
  return y;
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& X = x->value;
  const Tensor& W = w->value;
  require(X.ndim() == 2 && W.ndim() == 2 && W.dim(1) == X.dim(1) && b->value.size() == W.dim(0),
          "linear: expected x [B,D], w [O,D], b [O]; got " + shape_string(X.shape()) + ", " + shape_string(W.shape()));
  const std::size_t B = X.dim(0), D = X.dim(1), O = W.dim(0);
  Tensor out({B, O});
  MapR Y(out.data(), ix(B), ix(O));
  Y.noalias() = CMapR(X.data(), ix(B), ix(D)) * CMapR(W.data(), ix(O), ix(D)).transpose();
  Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b->value.data(), ix(O));
  Var y = make_node(std::move(out), {x, w, b});
  Node* self = y.get();
  y->backward_fn = [self, B, D, O]() {
    Node& xn = *self->parents[0];
    Node& wn = *self->parents[1];
    Node& bn = *self->parents[2];
    const CMapR dY(self->grad.data(), ix(B), ix(O));
    if (xn.requires_grad) MapR(xn.grad.data(), ix(B), ix(D)).noalias() += dY * CMapR(wn.value.data(), ix(O), ix(D));
    if (wn.requires_grad) MapR(wn.grad.data(), ix(O), ix(D)).noalias() += dY.transpose() * CMapR(xn.value.data(), ix(B), ix(D));
    if (bn.requires_grad) Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), ix(O)) += dY.colwise().sum();
  };
  return y;
}

Var reshape(const Var& x, Shape shape) {
  Var y = make_node(x->value.reshaped(std::move(shape)), {x});
  Node* self = y.get();
  y->backward_fn = [self]() {
    Node& xn = *self->parents[0];
    for (std::size_t i = 0; i < self->grad.size(); ++i) xn.grad[i] += self->grad[i];
  };
  return y;
}

namespace {
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

Var lstm(const Var& x, const Var& w_ih, const Var& w_hh, const Var& b) {
  const Tensor& X = x->value;
  require(X.ndim() == 3, "lstm: expected x [B,C,L], got " + shape_string(X.shape()));
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  require(w_hh->value.ndim() == 2 && w_hh->value.dim(0) % 4 == 0, "lstm: w_hh must be [4H, H]");
  const std::size_t H = w_hh->value.dim(0) / 4;
  require(w_hh->value.dim(1) == H, "lstm: w_hh must be [4H, H]");
  require(w_ih->value.ndim() == 2 && w_ih->value.dim(0) == 4 * H && w_ih->value.dim(1) == C,
          "lstm: w_ih must be [4H, C] with C = " + std::to_string(C));
  require(b->value.size() == 4 * H, "lstm: bias must have 4H entries");

  const CMapR Wih(w_ih->value.data(), ix(4 * H), ix(C));
  const CMapR Whh(w_hh->value.data(), ix(4 * H), ix(H));
  const Eigen::Map<const Eigen::RowVectorXd> bias(b->value.data(), ix(4 * H));

  struct Step {
    RowMat x;      // B x C
    RowMat gates;  // B x 4H, activated: i, f, g, o
    RowMat c;      // B x H
    RowMat tanh_c; // B x H
  };
  auto steps = std::make_shared<std::vector<Step>>(L);
  RowMat h = RowMat::Zero(ix(B), ix(H));
  RowMat c = RowMat::Zero(ix(B), ix(H));
  Tensor out({B, H, L});
  for (std::size_t t = 0; t < L; ++t) {
    Step& s = (*steps)[t];
    s.x.resize(ix(B), ix(C));
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t ch = 0; ch < C; ++ch) s.x(ix(n), ix(ch)) = X.at(n, ch, t);
    }
    s.gates = s.x * Wih.transpose() + h * Whh.transpose();
    s.gates.rowwise() += bias;
    for (Idx n = 0; n < ix(B); ++n) {
      for (Idx j = 0; j < ix(H); ++j) {
        s.gates(n, j) = sigmoid(s.gates(n, j));
        s.gates(n, ix(H) + j) = sigmoid(s.gates(n, ix(H) + j));
        s.gates(n, ix(2 * H) + j) = std::tanh(s.gates(n, ix(2 * H) + j));
        s.gates(n, ix(3 * H) + j) = sigmoid(s.gates(n, ix(3 * H) + j));
      }
    }
    const auto gi = s.gates.leftCols(ix(H)).array();
    const auto gf = s.gates.middleCols(ix(H), ix(H)).array();
    const auto gg = s.gates.middleCols(ix(2 * H), ix(H)).array();
    const auto go = s.gates.rightCols(ix(H)).array();
    c = (gf * c.array() + gi * gg).matrix();
    s.c = c;
    s.tanh_c = c.array().tanh().matrix();
    h = (go * s.tanh_c.array()).matrix();
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t j = 0; j < H; ++j) out.at(n, j, t) = h(ix(n), ix(j));
    }
  }

  Var y = make_node(std::move(out), {x, w_ih, w_hh, b});
  Node* self = y.get();
  y->backward_fn = [self, steps, B, C, L, H]() {
    Node& xn = *self->parents[0];
    Node& wihn = *self->parents[1];
    Node& whhn = *self->parents[2];
    Node& bn = *self->parents[3];
    const CMapR Wih(wihn.value.data(), ix(4 * H), ix(C));
    const CMapR Whh(whhn.value.data(), ix(4 * H), ix(H));
    RowMat dh_next = RowMat::Zero(ix(B), ix(H));
    RowMat dc_next = RowMat::Zero(ix(B), ix(H));
    RowMat dgates(ix(B), ix(4 * H));
    RowMat dWih = RowMat::Zero(ix(4 * H), ix(C));
    RowMat dWhh = RowMat::Zero(ix(4 * H), ix(H));
    Eigen::RowVectorXd db = Eigen::RowVectorXd::Zero(ix(4 * H));
    for (std::size_t tt = L; tt-- > 0;) {
      const Step& s = (*steps)[tt];
      RowMat dh = dh_next;
      for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t j = 0; j < H; ++j) dh(ix(n), ix(j)) += self->grad.at(n, j, tt);
      }
      for (Idx n = 0; n < ix(B); ++n) {
        for (Idx j = 0; j < ix(H); ++j) {
          const double i = s.gates(n, j);
          const double f = s.gates(n, ix(H) + j);
          const double g = s.gates(n, ix(2 * H) + j);
          const double o = s.gates(n, ix(3 * H) + j);
          const double tc = s.tanh_c(n, j);
          const double c_prev = tt > 0 ? (*steps)[tt - 1].c(n, j) : 0.0;
          const double dc = dh(n, j) * o * (1.0 - tc * tc) + dc_next(n, j);
          dgates(n, j) = dc * g * i * (1.0 - i);
          dgates(n, ix(H) + j) = dc * c_prev * f * (1.0 - f);
          dgates(n, ix(2 * H) + j) = dc * i * (1.0 - g * g);
          dgates(n, ix(3 * H) + j) = dh(n, j) * tc * o * (1.0 - o);
          dc_next(n, j) = dc * f;
        }
      }
      dWih.noalias() += dgates.transpose() * s.x;
      if (tt > 0) {
        RowMat h_prev(ix(B), ix(H));
        const Step& p = (*steps)[tt - 1];
        h_prev = (p.gates.rightCols(ix(H)).array() * p.tanh_c.array()).matrix();
        dWhh.noalias() += dgates.transpose() * h_prev;
      }
      db += dgates.colwise().sum();
      if (xn.requires_grad) {
        const RowMat dx = dgates * Wih;
        for (std::size_t n = 0; n < B; ++n) {
          for (std::size_t ch = 0; ch < C; ++ch) xn.grad.at(n, ch, tt) += dx(ix(n), ix(ch));
        }
      }
      dh_next = dgates * Whh;
    }
    if (wihn.requires_grad) MapR(wihn.grad.data(), ix(4 * H), ix(C)) += dWih;
    if (whhn.requires_grad) MapR(whhn.grad.data(), ix(4 * H), ix(H)) += dWhh;
    if (bn.requires_grad) Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), ix(4 * H)) += db;
  };
  return y;
}

Var mse_loss(const Var& pred, const Tensor& target) {
  require(pred->value.same_shape(target), "mse_loss: shape mismatch " + shape_string(pred->value.shape()) + " vs " +
                                              shape_string(target.shape()));
  require(target.size() > 0, "mse_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = pred->value[i] - target[i];
    s += d * d;
  }
  const double n = static_cast<double>(target.size());
  Var y = make_node(Tensor({1}, std::vector<double>{s / n}), {pred});
  Node* self = y.get();
  y->backward_fn = [self, target, n]() {
    Node& pn = *self->parents[0];
    const double g = self->grad[0];
    for (std::size_t i = 0; i < target.size(); ++i) pn.grad[i] += g * 2.0 * (pn.value[i] - target[i]) / n;
  };
  return y;
}

}  // namespace handkin::nn
