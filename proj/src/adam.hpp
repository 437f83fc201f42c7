#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace gfs {

// Standard bias-corrected ADAM over a fixed parameter list.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, T lr, T beta1 = T(0.9),
                T beta2 = T(0.999), T eps = T(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    for (const Param<T>* p : params_) {
      m_.emplace_back(p->value.rows, p->value.cols);
      v_.emplace_back(p->value.rows, p->value.cols);
    }
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - std::pow(beta1_, T(t_));
    const T bc2 = T(1) - std::pow(beta2_, T(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<T>& p = *params_[i];
      if (p.grad.size() != p.value.size())
        throw InvalidArgument("adam: gradient shape mismatch for " + p.name);
      for (size_t k = 0; k < p.value.size(); ++k) {
        T g = p.grad.v[k];
        m_[i].v[k] = beta1_ * m_[i].v[k] + (T(1) - beta1_) * g;
        v_[i].v[k] = beta2_ * v_[i].v[k] + (T(1) - beta2_) * g * g;
        T mhat = m_[i].v[k] / bc1;
        T vhat = v_[i].v[k] / bc2;
        p.value.v[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  int64_t steps() const { return t_; }
  void set_lr(T lr) { lr_ = lr; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  T lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace gfs
