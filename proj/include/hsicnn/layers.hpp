#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"
#include "hsicnn/kernels.hpp"
#include "hsicnn/rng.hpp"
#include "hsicnn/tensor.hpp"

namespace hsicnn {

enum class Mode { train, eval };

namespace detail {

struct ConvGeometry {
  std::size_t c, h, w, d;      // input [c, h, w, d]
  std::size_t o, kh, kw, kd;   // weight [o, c, kh, kw, kd]
  std::size_t ho, wo, dout;    // output [o, ho, wo, dout]

  std::size_t patch_len() const { return c * kh * kw * kd; }
  std::size_t positions() const { return ho * wo * dout; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& weight, const Tensor<T>& bias, const Tensor<T>& x) {
  if (weight.rank() != 5 || x.rank() != 4 || bias.rank() != 1 || bias.size() != weight.extent(0)) {
    throw Error(ErrorKind::shape, "conv3d expects weight [o,c,kh,kw,kd], bias [o], input [c,h,w,d]");
  }
  ConvGeometry g{x.extent(0), x.extent(1), x.extent(2), x.extent(3),
                 weight.extent(0), weight.extent(2), weight.extent(3), weight.extent(4),
                 0, 0, 0};
  if (weight.extent(1) != g.c) {
    throw Error(ErrorKind::shape, "conv3d input has " + std::to_string(g.c) +
                                      " maps, kernel expects " + std::to_string(weight.extent(1)));
  }
  if (g.h < g.kh || g.w < g.kw || g.d < g.kd) {
    throw Error(ErrorKind::shape, "conv3d input extents " + shape_string(x.shape()) +
                                      " smaller than kernel " + shape_string(weight.shape()));
  }
  g.ho = g.h - g.kh + 1;
  g.wo = g.w - g.kw + 1;
  g.dout = g.d - g.kd + 1;
  return g;
}

// cols[K x P], K = c*kh*kw*kd (kernel tap), P = ho*wo*dout (output position)
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const std::size_t p_count = g.positions();
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j)
        for (std::size_t k = 0; k < g.kd; ++k, ++r) {
          T* dst = cols + r * p_count;
          for (std::size_t y = 0; y < g.ho; ++y)
            for (std::size_t z = 0; z < g.wo; ++z) {
              const T* src = x + ((c * g.h + y + i) * g.w + z + j) * g.d + k;
              std::copy_n(src, g.dout, dst);
              dst += g.dout;
            }
        }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* x) {
  const std::size_t p_count = g.positions();
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j)
        for (std::size_t k = 0; k < g.kd; ++k, ++r) {
          const T* src = cols + r * p_count;
          for (std::size_t y = 0; y < g.ho; ++y)
            for (std::size_t z = 0; z < g.wo; ++z) {
              T* dst = x + ((c * g.h + y + i) * g.w + z + j) * g.d + k;
              for (std::size_t t = 0; t < g.dout; ++t) dst[t] += src[t];
              src += g.dout;
            }
        }
}

}  // namespace detail

// Valid, stride-1 3D cross-correlation written as the plain loop nest:
// out[o,y,z,t] = bias[o] + sum_{c,i,j,k} w[o,c,i,j,k] * x[c,y+i,z+j,t+k]
template <typename T>
Tensor<T> conv3d_direct(const Tensor<T>& weight, const Tensor<T>& bias, const Tensor<T>& x) {
  const auto g = detail::conv_geometry(weight, bias, x);
  Tensor<T> out({g.o, g.ho, g.wo, g.dout});
  const T* w = weight.raw();
  const T* in = x.raw();
  T* dst = out.raw();
  for (std::size_t o = 0; o < g.o; ++o)
    for (std::size_t y = 0; y < g.ho; ++y)
      for (std::size_t z = 0; z < g.wo; ++z)
        for (std::size_t t = 0; t < g.dout; ++t) {
          T acc{0};
          for (std::size_t c = 0; c < g.c; ++c)
            for (std::size_t i = 0; i < g.kh; ++i)
              for (std::size_t j = 0; j < g.kw; ++j)
                for (std::size_t k = 0; k < g.kd; ++k)
                  acc += w[(((o * g.c + c) * g.kh + i) * g.kw + j) * g.kd + k] *
                         in[((c * g.h + y + i) * g.w + z + j) * g.d + t + k];
          *dst++ = acc + bias[o];
        }
  return out;
}

// Same operation lowered to one matrix product over an im2col buffer.
// `cols` is scratch and is left holding the lowered input.
template <typename T>
Tensor<T> conv3d_lowered(const Tensor<T>& weight, const Tensor<T>& bias, const Tensor<T>& x,
                         std::vector<T>& cols) {
  const auto g = detail::conv_geometry(weight, bias, x);
  const std::size_t kk = g.patch_len();
  const std::size_t pp = g.positions();
  cols.resize(kk * pp);
  detail::im2col(g, x.raw(), cols.data());
  Tensor<T> out({g.o, g.ho, g.wo, g.dout});
  for (std::size_t o = 0; o < g.o; ++o) std::fill_n(out.raw() + o * pp, pp, bias[o]);
  kernels::gemm_nn(g.o, pp, kk, weight.raw(), cols.data(), out.raw());
  return out;
}

template <typename T>
Tensor<T> conv3d_lowered(const Tensor<T>& weight, const Tensor<T>& bias, const Tensor<T>& x) {
  std::vector<T> cols;
  return conv3d_lowered(weight, bias, x, cols);
}

template <typename T>
class Conv3D {
 public:
  Conv3D() = default;
  Conv3D(std::size_t in_maps, std::size_t out_maps, std::size_t kh, std::size_t kw, std::size_t kd)
      : weight({out_maps, in_maps, kh, kw, kd}),
        bias({out_maps}),
        grad_weight({out_maps, in_maps, kh, kw, kd}),
        grad_bias({out_maps}) {
    if (kh % 2 == 0 || kw % 2 == 0 || kd % 2 == 0) {
      throw Error(ErrorKind::shape, "conv3d kernel extents must be odd");
    }
  }

  Tensor<T> weight;  // [out, in, kh, kw, kd]
  Tensor<T> bias;    // [out]
  Tensor<T> grad_weight;
  Tensor<T> grad_bias;

  std::size_t in_maps() const { return weight.extent(1); }
  std::size_t out_maps() const { return weight.extent(0); }
  std::size_t fan_in() const { return weight.size() / out_maps(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  Tensor<T> apply(const Tensor<T>& x) const { return conv3d_lowered(weight, bias, x); }

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    cached_ = true;
    return conv3d_lowered(weight, bias, x, cols_);
  }

  // Accumulates into grad_weight / grad_bias. Returns the input gradient, or
  // an empty tensor when `want_input_grad` is false (first layer).
  Tensor<T> backward(const Tensor<T>& grad_out, bool want_input_grad = true) {
    if (!cached_) throw Error(ErrorKind::state, "conv3d backward called before forward");
    const auto g = detail::conv_geometry(weight, bias, input_);
    if (grad_out.shape() != Shape{g.o, g.ho, g.wo, g.dout}) {
      throw Error(ErrorKind::shape, "conv3d upstream gradient shape " +
                                        shape_string(grad_out.shape()) + " != output shape");
    }
    const std::size_t kk = g.patch_len();
    const std::size_t pp = g.positions();
    const T* gout = grad_out.raw();

    for (std::size_t o = 0; o < g.o; ++o) {
      T s{0};
      for (std::size_t p = 0; p < pp; ++p) s += gout[o * pp + p];
      grad_bias[o] += s;
    }

    // dW[o, r] += sum_p G[o, p] * cols[r, p], done as axpy rows over cols^T.
    cols_t_.resize(pp * kk);
    kernels::transpose(kk, pp, cols_.data(), cols_t_.data());
    kernels::gemm_nn(g.o, kk, pp, gout, cols_t_.data(), grad_weight.raw());

    if (!want_input_grad) return {};
    // dcols[r, p] = sum_o W[o, r] * G[o, p], then scatter back.
    grad_cols_.assign(kk * pp, T{0});
    kernels::gemm_tn(kk, pp, g.o, weight.raw(), gout, grad_cols_.data());
    Tensor<T> grad_in(input_.shape());
    detail::col2im_add(g, grad_cols_.data(), grad_in.raw());
    return grad_in;
  }

 private:
  Tensor<T> input_;
  std::vector<T> cols_;
  std::vector<T> cols_t_;
  std::vector<T> grad_cols_;
  bool cached_ = false;
};

template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out)
      : weight({out, in}), bias({out}), grad_weight({out, in}), grad_bias({out}) {}

  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]
  Tensor<T> grad_weight;
  Tensor<T> grad_bias;

  std::size_t in_features() const { return weight.extent(1); }
  std::size_t out_features() const { return weight.extent(0); }
  std::size_t fan_in() const { return in_features(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  Tensor<T> apply(const Tensor<T>& x) const {
    if (x.size() != in_features()) {
      throw Error(ErrorKind::shape, "dense expects " + std::to_string(in_features()) +
                                        " inputs, got " + std::to_string(x.size()));
    }
    const std::size_t in = in_features();
    Tensor<T> y({out_features()});
    for (std::size_t o = 0; o < out_features(); ++o)
      y[o] = kernels::dot(in, weight.raw() + o * in, x.raw()) + bias[o];
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = apply(x);
    input_ = x;
    cached_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!cached_) throw Error(ErrorKind::state, "dense backward called before forward");
    if (grad_out.size() != out_features()) {
      throw Error(ErrorKind::shape, "dense upstream gradient has " +
                                        std::to_string(grad_out.size()) + " entries");
    }
    const std::size_t in = in_features();
    Tensor<T> grad_in(input_.shape());
    for (std::size_t o = 0; o < out_features(); ++o) {
      const T g = grad_out[o];
      grad_bias[o] += g;
      if (g == T{0}) continue;
      kernels::axpy(in, g, input_.raw(), grad_weight.raw() + o * in);
      kernels::axpy(in, g, weight.raw() + o * in, grad_in.raw());
    }
    return grad_in;
  }

 private:
  Tensor<T> input_;
  bool cached_ = false;
};

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (auto& v : x.data()) v = v > T{0} ? v : T{0};
  return x;
}

template <typename T>
class Relu {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    cached_ = true;
    return relu(x);
  }

  Tensor<T> backward(Tensor<T> grad) const {
    if (!cached_) throw Error(ErrorKind::state, "relu backward called before forward");
    if (grad.size() != input_.size()) throw Error(ErrorKind::shape, "relu gradient size mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (!(input_[i] > T{0})) grad[i] = T{0};
    return grad;
  }

 private:
  Tensor<T> input_;
  bool cached_ = false;
};

// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
// evaluation is the identity.
template <typename T>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0) || !(rate < 1.0)) {
      throw Error(ErrorKind::invalid_rate, "dropout rate " + std::to_string(rate) + " not in [0, 1)");
    }
  }

  double rate() const { return rate_; }

  Tensor<T> forward(Tensor<T> x, Mode mode, Rng* rng) {
    scale_.assign(x.size(), T{1});
    cached_ = true;
    if (mode == Mode::eval || rate_ == 0.0) return x;
    if (rng == nullptr) throw Error(ErrorKind::state, "training-mode dropout needs a generator");
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      scale_[i] = rng->uniform() < rate_ ? T{0} : keep_scale;
      x[i] *= scale_[i];
    }
    return x;
  }

  Tensor<T> backward(Tensor<T> grad) const {
    if (!cached_) throw Error(ErrorKind::state, "dropout backward called before forward");
    if (grad.size() != scale_.size()) throw Error(ErrorKind::shape, "dropout gradient size mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= scale_[i];
    return grad;
  }

 private:
  double rate_ = 0.0;
  std::vector<T> scale_;
  bool cached_ = false;
};

template <typename T>
std::vector<double> softmax(std::span<const T> logits) {
  double mx = -INFINITY;
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(static_cast<double>(logits[i]) - mx));
  for (auto& v : p) v /= z;
  return p;
}

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  Tensor<T> grad;
};

// Max-shifted log-softmax negative log-likelihood and its logit gradient
// softmax(logits) - onehot(label).
template <typename T>
LossAndGrad<T> softmax_cross_entropy(std::span<const T> logits, int label) {
  const std::size_t c = logits.size();
  if (c < 2) throw Error(ErrorKind::shape, "softmax needs at least 2 classes");
  if (label < 0 || static_cast<std::size_t>(label) >= c) {
    throw Error(ErrorKind::label, "label " + std::to_string(label) + " outside [0, " +
                                      std::to_string(c) + ")");
  }
  double mx = -INFINITY;
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0.0;
  for (T v : logits) z += std::exp(static_cast<double>(v) - mx);
  const double log_z = std::log(z) + mx;
  LossAndGrad<T> out;
  out.loss = log_z - static_cast<double>(logits[static_cast<std::size_t>(label)]);
  out.grad = Tensor<T>({c});
  for (std::size_t i = 0; i < c; ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - log_z);
    out.grad[i] = static_cast<T>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
  }
  return out;
}

}  // namespace hsicnn
