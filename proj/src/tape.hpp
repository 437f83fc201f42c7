#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gemm.hpp"
#include "tensor.hpp"

namespace gfs {

// Running batch-norm statistics; points at tensors owned elsewhere (the
// model's parameter store) so checkpoints capture them.
template <typename T>
struct BnState {
  Tensor<T>* running_mean = nullptr;  // rows x 1
  Tensor<T>* running_var = nullptr;   // rows x 1
  T momentum = T(0.9);
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBceClamp = 1e-7;

// Reverse-mode tape. Forward ops append nodes; backward() walks the nodes in
// reverse, accumulating gradients additively. Intermediate values are freed
// as soon as backward has consumed them.
template <typename T>
class Tape {
 public:
  using Ref = int;

  struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    const Tensor<T>* ext_val = nullptr;  // leaf backed by a Param
    Tensor<T>* ext_grad = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&, Ref)> backward;
  };

  Ref constant(Tensor<T> v) {
    Node n;
    n.val = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  Ref leaf(Param<T>& p) {
    p.zero_grad();
    Node n;
    n.ext_val = &p.value;
    n.ext_grad = &p.grad;
    n.needs_grad = p.trainable;
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  const Tensor<T>& val(Ref r) const {
    const Node& n = nodes_[r];
    return n.ext_val ? *n.ext_val : n.val;
  }

  Tensor<T>& grad(Ref r) {
    Node& n = nodes_[r];
    if (n.ext_grad) return *n.ext_grad;
    if (!n.grad.same_shape(val(r)))
      n.grad = Tensor<T>(val(r).rows, val(r).cols);
    return n.grad;
  }

  bool needs_grad(Ref r) const { return nodes_[r].needs_grad; }

  size_t node_count() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // ---- operations ----

  // W [m x k] * X [k x n]
  Ref matmul(Ref w, Ref x) {
    const Tensor<T>&W = val(w), &X = val(x);
    if (W.cols != X.rows) throw InvalidArgument("matmul: inner dims disagree");
    Tensor<T> out(W.rows, X.cols);
    gemm(false, false, (int)W.rows, (int)X.cols, (int)W.cols, T(1), W.data(),
         (int)W.cols, X.data(), (int)X.cols, T(0), out.data(), (int)out.cols);
    return emit(std::move(out), {w, x}, [w, x](Tape& t, Ref self) {
      const Tensor<T>& dy = t.grad(self);
      const Tensor<T>&W = t.val(w), &X = t.val(x);
      if (t.needs_grad(w))
        gemm(false, true, (int)W.rows, (int)W.cols, (int)X.cols, T(1),
             dy.data(), (int)dy.cols, X.data(), (int)X.cols, T(1),
             t.grad(w).data(), (int)W.cols);
      if (t.needs_grad(x))
        gemm(true, false, (int)X.rows, (int)X.cols, (int)W.rows, T(1),
             W.data(), (int)W.cols, dy.data(), (int)dy.cols, T(1),
             t.grad(x).data(), (int)X.cols);
    });
  }

  // X [m x n] + b [m x 1] broadcast over columns.
  Ref add_bias(Ref x, Ref b) {
    const Tensor<T>&X = val(x), &B = val(b);
    if (B.rows != X.rows || B.cols != 1)
      throw InvalidArgument("add_bias: bias must be rows x 1");
    Tensor<T> out = X;
    for (size_t r = 0; r < X.rows; ++r)
      for (size_t c = 0; c < X.cols; ++c) out.at(r, c) += B.v[r];
    return emit(std::move(out), {x, b}, [x, b](Tape& t, Ref self) {
      const Tensor<T>& dy = t.grad(self);
      if (t.needs_grad(x)) {
        Tensor<T>& dx = t.grad(x);
        for (size_t i = 0; i < dy.size(); ++i) dx.v[i] += dy.v[i];
      }
      if (t.needs_grad(b)) {
        Tensor<T>& db = t.grad(b);
        for (size_t r = 0; r < dy.rows; ++r)
          for (size_t c = 0; c < dy.cols; ++c) db.v[r] += dy.at(r, c);
      }
    });
  }

  Ref add(Ref a, Ref b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw InvalidArgument("add: shape mismatch");
    Tensor<T> out = A;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += B.v[i];
    return emit(std::move(out), {a, b}, [a, b](Tape& t, Ref self) {
      const Tensor<T>& dy = t.grad(self);
      for (Ref r : {a, b}) {
        if (!t.needs_grad(r)) continue;
        Tensor<T>& dr = t.grad(r);
        for (size_t i = 0; i < dy.size(); ++i) dr.v[i] += dy.v[i];
      }
    });
  }

  Ref hadamard(Ref a, Ref b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw InvalidArgument("hadamard: shape mismatch");
    Tensor<T> out = A;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] *= B.v[i];
    return emit(std::move(out), {a, b}, [a, b](Tape& t, Ref self) {
      const Tensor<T>& dy = t.grad(self);
      if (t.needs_grad(a)) {
        Tensor<T>& da = t.grad(a);
        const Tensor<T>& B = t.val(b);
        for (size_t i = 0; i < dy.size(); ++i) da.v[i] += dy.v[i] * B.v[i];
      }
      if (t.needs_grad(b)) {
        Tensor<T>& db = t.grad(b);
        const Tensor<T>& A = t.val(a);
        for (size_t i = 0; i < dy.size(); ++i) db.v[i] += dy.v[i] * A.v[i];
      }
    });
  }

  Ref relu(Ref x) {
    Tensor<T> out = val(x);
    for (auto& v : out.v) v = v > T(0) ? v : T(0);
    return emit(std::move(out), {x}, [x](Tape& t, Ref self) {
      if (!t.needs_grad(x)) return;
      const Tensor<T>&dy = t.grad(self), &y = t.val(self);
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dy.size(); ++i)
        if (y.v[i] > T(0)) dx.v[i] += dy.v[i];
    });
  }

  Ref sigmoid(Ref x) {
    Tensor<T> out = val(x);
    for (auto& v : out.v) v = stable_sigmoid(v);
    return emit(std::move(out), {x}, [x](Tape& t, Ref self) {
      if (!t.needs_grad(x)) return;
      const Tensor<T>&dy = t.grad(self), &y = t.val(self);
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dy.size(); ++i)
        dx.v[i] += dy.v[i] * y.v[i] * (T(1) - y.v[i]);
    });
  }

  Ref tanh_(Ref x) {
    Tensor<T> out = val(x);
    for (auto& v : out.v) v = std::tanh(v);
    return emit(std::move(out), {x}, [x](Tape& t, Ref self) {
      if (!t.needs_grad(x)) return;
      const Tensor<T>&dy = t.grad(self), &y = t.val(self);
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dy.size(); ++i)
        dx.v[i] += dy.v[i] * (T(1) - y.v[i] * y.v[i]);
    });
  }

  // Stack inputs along rows; all must share the column count.
  Ref concat_rows(const std::vector<Ref>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_rows: no inputs");
    size_t cols = val(parts[0]).cols, rows = 0;
    for (Ref p : parts) {
      if (val(p).cols != cols)
        throw InvalidArgument("concat_rows: column mismatch");
      rows += val(p).rows;
    }
    Tensor<T> out(rows, cols);
    size_t r0 = 0;
    for (Ref p : parts) {
      const Tensor<T>& v = val(p);
      std::copy(v.v.begin(), v.v.end(), out.v.begin() + r0 * cols);
      r0 += v.rows;
    }
    return emit(std::move(out), parts, [parts](Tape& t, Ref self) {
      const Tensor<T>& dy = t.grad(self);
      size_t r0 = 0;
      for (Ref p : parts) {
        const size_t pr = t.val(p).rows;
        if (t.needs_grad(p)) {
          Tensor<T>& dp = t.grad(p);
          const T* src = dy.v.data() + r0 * dy.cols;
          for (size_t i = 0; i < pr * dy.cols; ++i) dp.v[i] += src[i];
        }
        r0 += pr;
      }
    });
  }

  // Reinterpret [f x (n_sym*batch)] with columns grouped symbol-major as
  // [(n_sym*f) x batch]: output row (i*f + r), column b <- input (r, i*batch+b).
  Ref fold_symbols(Ref x, size_t n_sym, size_t batch) {
    const Tensor<T>& X = val(x);
    if (X.cols != n_sym * batch)
      throw InvalidArgument("fold_symbols: column count != n_sym*batch");
    const size_t f = X.rows;
    Tensor<T> out(n_sym * f, batch);
    for (size_t i = 0; i < n_sym; ++i)
      for (size_t r = 0; r < f; ++r)
        for (size_t b = 0; b < batch; ++b)
          out.at(i * f + r, b) = X.at(r, i * batch + b);
    return emit(std::move(out), {x}, [x, n_sym, batch](Tape& t, Ref self) {
      if (!t.needs_grad(x)) return;
      const Tensor<T>& dy = t.grad(self);
      Tensor<T>& dx = t.grad(x);
      const size_t f = dx.rows;
      for (size_t i = 0; i < n_sym; ++i)
        for (size_t r = 0; r < f; ++r)
          for (size_t b = 0; b < batch; ++b)
            dx.at(r, i * batch + b) += dy.at(i * f + r, b);
    });
  }

  // Batch normalization per row over columns. Training mode uses batch
  // statistics (population variance) and updates the running state; inference
  // mode normalizes with the running state.
  Ref batchnorm(Ref x, Ref gamma, Ref beta, BnState<T>& state, bool training) {
    const Tensor<T>& X = val(x);
    const size_t R = X.rows, C = X.cols;
    if (val(gamma).rows != R || val(beta).rows != R)
      throw InvalidArgument("batchnorm: gamma/beta must have one entry per row");
    if (!state.running_mean || !state.running_var ||
        state.running_mean->rows != R || state.running_var->rows != R)
      throw InvalidArgument("batchnorm: running stats not initialized");
    const T eps = T(kBnEps);
    if (!training) {
      Tensor<T> out(R, C);
      std::vector<T> inv_sd(R);
      for (size_t r = 0; r < R; ++r)
        inv_sd[r] = T(1) / std::sqrt(state.running_var->v[r] + eps);
      for (size_t r = 0; r < R; ++r)
        for (size_t c = 0; c < C; ++c)
          out.at(r, c) = val(gamma).v[r] *
                             (X.at(r, c) - state.running_mean->v[r]) * inv_sd[r] +
                         val(beta).v[r];
      auto rm = *state.running_mean, rv = *state.running_var;
      return emit(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, rm, rv, eps](Tape& t, Ref self) {
                    const Tensor<T>& dy = t.grad(self);
                    const Tensor<T>& X = t.val(x);
                    for (size_t r = 0; r < X.rows; ++r) {
                      T inv_sd = T(1) / std::sqrt(rv.v[r] + eps);
                      T g = t.val(gamma).v[r];
                      for (size_t c = 0; c < X.cols; ++c) {
                        T d = dy.at(r, c);
                        if (t.needs_grad(x)) t.grad(x).at(r, c) += d * g * inv_sd;
                        if (t.needs_grad(gamma))
                          t.grad(gamma).v[r] +=
                              d * (X.at(r, c) - rm.v[r]) * inv_sd;
                        if (t.needs_grad(beta)) t.grad(beta).v[r] += d;
                      }
                    }
                  });
    }
    if (C < 2)
      throw InvalidArgument("batchnorm: training mode needs batch size >= 2");
    auto mean = std::make_shared<std::vector<T>>(R);
    auto inv_sd = std::make_shared<std::vector<T>>(R);
    Tensor<T> out(R, C);
    for (size_t r = 0; r < R; ++r) {
      T mu = T(0);
      for (size_t c = 0; c < C; ++c) mu += X.at(r, c);
      mu /= T(C);
      T var = T(0);
      for (size_t c = 0; c < C; ++c) {
        T d = X.at(r, c) - mu;
        var += d * d;
      }
      var /= T(C);
      (*mean)[r] = mu;
      (*inv_sd)[r] = T(1) / std::sqrt(var + eps);
      state.running_mean->v[r] = state.momentum * state.running_mean->v[r] +
                                 (T(1) - state.momentum) * mu;
      state.running_var->v[r] = state.momentum * state.running_var->v[r] +
                                (T(1) - state.momentum) * var;
      for (size_t c = 0; c < C; ++c)
        out.at(r, c) = val(gamma).v[r] * (X.at(r, c) - mu) * (*inv_sd)[r] +
                       val(beta).v[r];
    }
    return emit(std::move(out), {x, gamma, beta},
                [x, gamma, beta, mean, inv_sd](Tape& t, Ref self) {
                  const Tensor<T>& dy = t.grad(self);
                  const Tensor<T>& X = t.val(x);
                  const size_t R = X.rows, C = X.cols;
                  for (size_t r = 0; r < R; ++r) {
                    const T mu = (*mean)[r], is = (*inv_sd)[r];
                    const T g = t.val(gamma).v[r];
                    T sum_dy = T(0), sum_dy_xhat = T(0);
                    for (size_t c = 0; c < C; ++c) {
                      T xh = (X.at(r, c) - mu) * is;
                      sum_dy += dy.at(r, c);
                      sum_dy_xhat += dy.at(r, c) * xh;
                    }
                    if (t.needs_grad(gamma)) t.grad(gamma).v[r] += sum_dy_xhat;
                    if (t.needs_grad(beta)) t.grad(beta).v[r] += sum_dy;
                    if (t.needs_grad(x)) {
                      for (size_t c = 0; c < C; ++c) {
                        T xh = (X.at(r, c) - mu) * is;
                        t.grad(x).at(r, c) +=
                            g * is *
                            (dy.at(r, c) - sum_dy / T(C) - xh * sum_dy_xhat / T(C));
                      }
                    }
                  }
                });
  }

  // Binary cross entropy against targets in {0,1}; sum over rows, mean over
  // columns. Predictions are clamped to [kBceClamp, 1-kBceClamp].
  Ref bce_loss(Ref q, const Tensor<T>& target) {
    const Tensor<T>& Q = val(q);
    if (!Q.same_shape(target)) throw InvalidArgument("bce_loss: shape mismatch");
    const T lo = T(kBceClamp), hi = T(1) - T(kBceClamp);
    T acc = T(0);
    for (size_t i = 0; i < Q.size(); ++i) {
      T t = target.v[i];
      if (t != T(0) && t != T(1))
        throw InvalidArgument("bce_loss: targets must be 0 or 1");
      T qc = std::min(hi, std::max(lo, Q.v[i]));
      acc -= t * std::log(qc) + (T(1) - t) * std::log(T(1) - qc);
    }
    Tensor<T> out(1, 1);
    out.v[0] = acc / T(Q.cols);
    auto tgt = std::make_shared<Tensor<T>>(target);
    return emit(std::move(out), {q}, [q, tgt, lo, hi](Tape& t, Ref self) {
      if (!t.needs_grad(q)) return;
      const T dy = t.grad(self).v[0];
      const Tensor<T>& Q = t.val(q);
      Tensor<T>& dq = t.grad(q);
      const T inv_cols = T(1) / T(Q.cols);
      for (size_t i = 0; i < Q.size(); ++i) {
        T qv = Q.v[i];
        if (qv < lo || qv > hi) continue;  // clamped: flat
        T tv = tgt->v[i];
        dq.v[i] += dy * inv_cols * (-tv / qv + (T(1) - tv) / (T(1) - qv));
      }
    });
  }

  // Seeds d(root) = 1 and accumulates into every leaf gradient reachable from
  // `root`. Node buffers are freed as soon as they are consumed.
  void backward(Ref root) {
    if (val(root).size() != 1)
      throw InvalidArgument("backward: root must be scalar");
    grad(root).v[0] = T(1);
    for (Ref i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.needs_grad && n.grad.size() > 0) n.backward(*this, i);
      if (!n.ext_val && i != root) {
        n.val.release();
        n.grad.release();
      }
    }
  }

 private:
  static T stable_sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    T e = std::exp(x);
    return e / (T(1) + e);
  }

  Ref emit(Tensor<T> out, const std::vector<Ref>& inputs,
           std::function<void(Tape&, Ref)> back) {
    Node n;
    n.val = std::move(out);
    for (Ref r : inputs) n.needs_grad = n.needs_grad || nodes_[r].needs_grad;
    if (n.needs_grad) n.backward = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

}  // namespace gfs
