#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"
#include "hsicnn/tensor.hpp"

namespace hsicnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  Tensor<T> m;
  Tensor<T> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const Shape& shape) : m(shape), v(shape) {}
};

// One bias-corrected Adam update of `param` in place.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state, const AdamConfig& cfg) {
  if (param.shape() != grad.shape() || param.shape() != state.m.shape()) {
    throw Error(ErrorKind::shape, "adam: parameter " + shape_string(param.shape()) +
                                      " / gradient " + shape_string(grad.shape()) + " mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(static_cast<double>(grad[i]))) {
      throw Error(ErrorKind::training, "non-finite gradient at element " + std::to_string(i) +
                                           " of tensor " + shape_string(param.shape()) +
                                           " (step " + std::to_string(state.t + 1) + ")");
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    state.m[i] = b1 * state.m[i] + (T{1} - b1) * g;
    state.v[i] = b2 * state.v[i] + (T{1} - b2) * g * g;
    const double m_hat = static_cast<double>(state.m[i]) / c1;
    const double v_hat = static_cast<double>(state.v[i]) / c2;
    param[i] -= static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Tensor<T>*>& params, AdamConfig cfg) : cfg_(cfg) {
    for (const auto* p : params) states_.emplace_back(p->shape());
  }

  void step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>*>& grads) {
    if (params.size() != states_.size() || grads.size() != states_.size()) {
      throw Error(ErrorKind::shape, "adam: tensor count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i], *grads[i], states_[i], cfg_);
  }

  const AdamConfig& config() const noexcept { return cfg_; }
  std::uint64_t steps() const noexcept { return states_.empty() ? 0 : states_.front().t; }

 private:
  AdamConfig cfg_;
  std::vector<AdamState<T>> states_;
};

}  // namespace hsicnn
