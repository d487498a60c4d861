#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pointseg/errors.hpp"
#include "pointseg/nn/tensor.hpp"

namespace pointseg::nn {

// Adam with bias correction. Moment buffers persist across steps and are
// part of the training state that checkpoints must round-trip.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>*> params, T lr, T beta1 = T(0.5),
       T beta2 = T(0.999), T eps = T(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->size(), T(0));
      v_[i].assign(params_[i]->size(), T(0));
    }
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - static_cast<T>(std::pow(beta1_, t_));
    const T bc2 = T(1) - static_cast<T>(std::pow(beta2_, t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = *params_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const T g = p.g[j];
        if (!std::isfinite(g))
          throw TrainError("non-finite gradient at optimizer step " +
                           std::to_string(t_));
        m_[i][j] = beta1_ * m_[i][j] + (T(1) - beta1_) * g;
        v_[i][j] = beta2_ * v_[i][j] + (T(1) - beta2_) * g * g;
        const T mhat = m_[i][j] / bc1;
        const T vhat = v_[i][j] / bc2;
        p.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  long t() const { return t_; }
  void set_t(long t) { t_ = t; }
  std::vector<std::vector<T>>& m() { return m_; }
  std::vector<std::vector<T>>& v() { return v_; }

 private:
  std::vector<Tensor<T>*> params_;
  T lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace pointseg::nn
