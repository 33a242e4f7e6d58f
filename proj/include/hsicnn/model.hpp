#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"
#include "hsicnn/layers.hpp"
#include "hsicnn/rng.hpp"
#include "hsicnn/tensor.hpp"

namespace hsicnn {

struct ArchitectureConfig {
  std::size_t window = 11;
  std::size_t bands = 20;
  std::size_t classes = 16;
  double dropout = 0.4;
};

struct ConvSpec {
  std::size_t filters, kh, kw, kd;
};

// Four valid 3D convolutions followed by dense 256 -> 128 -> classes.
inline constexpr std::array<ConvSpec, 4> kConvStack{{
    {8, 3, 3, 7},
    {16, 3, 3, 5},
    {32, 3, 3, 3},
    {64, 3, 3, 3},
}};
inline constexpr std::array<std::size_t, 2> kHiddenWidths{256, 128};

struct LayerSummary {
  std::string name;
  Shape output;  // channel-last for the conv stack: (h, w, d, maps)
  std::size_t params = 0;
};

// Shape propagation of the layer table, without allocating any weights.
inline std::vector<LayerSummary> summarize(const ArchitectureConfig& cfg) {
  if (cfg.window == 0 || cfg.window % 2 == 0) {
    throw Error(ErrorKind::architecture, "window " + std::to_string(cfg.window) + " must be odd");
  }
  if (cfg.classes < 2) throw Error(ErrorKind::architecture, "need at least 2 classes");
  if (cfg.bands < 1) throw Error(ErrorKind::architecture, "need at least 1 band");
  std::vector<LayerSummary> rows;
  std::size_t h = cfg.window, w = cfg.window, d = cfg.bands, maps = 1;
  rows.push_back({"Input Layer", {h, w, d, maps}, 0});
  for (std::size_t i = 0; i < kConvStack.size(); ++i) {
    const auto& k = kConvStack[i];
    const std::string name = "Conv3D_" + std::to_string(i + 1);
    if (h < k.kh || w < k.kw || d < k.kd) {
      throw Error(ErrorKind::architecture,
                  name + ": input extent (" + std::to_string(h) + "," + std::to_string(w) + "," +
                      std::to_string(d) + ") smaller than kernel (" + std::to_string(k.kh) + "," +
                      std::to_string(k.kw) + "," + std::to_string(k.kd) + ")");
    }
    const std::size_t params = k.filters * (maps * k.kh * k.kw * k.kd) + k.filters;
    h = h - k.kh + 1;
    w = w - k.kw + 1;
    d = d - k.kd + 1;
    maps = k.filters;
    rows.push_back({name, {h, w, d, maps}, params});
  }
  std::size_t width = h * w * d * maps;
  rows.push_back({"Flatten_1", {width}, 0});
  for (std::size_t i = 0; i < kHiddenWidths.size(); ++i) {
    const std::size_t out = kHiddenWidths[i];
    rows.push_back({"Dense_" + std::to_string(i + 1), {out}, out * width + out});
    rows.push_back({"Dropout_" + std::to_string(i + 1), {out}, 0});
    width = out;
  }
  rows.push_back({"Dense_3", {cfg.classes}, cfg.classes * width + cfg.classes});
  return rows;
}

inline std::size_t total_parameters(const std::vector<LayerSummary>& rows) {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.params;
  return total;
}

template <typename T>
class Model {
 public:
  Model() = default;

  // Weights drawn uniform in +-sqrt(6 / fan_in) from the init stream of
  // `seed`, in parameter order; biases start at zero.
  Model(const ArchitectureConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    const auto rows = summarize(cfg);  // validates the geometry
    std::size_t maps = 1;
    for (std::size_t i = 0; i < kConvStack.size(); ++i) {
      const auto& k = kConvStack[i];
      convs_[i] = Conv3D<T>(maps, k.filters, k.kh, k.kw, k.kd);
      maps = k.filters;
    }
    std::size_t width = rows[kConvStack.size() + 1].output[0];
    for (std::size_t i = 0; i < kHiddenWidths.size(); ++i) {
      denses_[i] = Dense<T>(width, kHiddenWidths[i]);
      drops_[i] = Dropout<T>(cfg.dropout);
      width = kHiddenWidths[i];
    }
    denses_[2] = Dense<T>(width, cfg.classes);
    const Shape& last = rows[kConvStack.size()].output;  // (h, w, d, maps)
    conv_out_shape_ = {last[3], last[0], last[1], last[2]};

    Rng rng(seed, Stream::init);
    auto init = [&](Tensor<T>& weight, std::size_t fan_in) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (auto& v : weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    };
    for (auto& c : convs_) init(c.weight, c.fan_in());
    for (auto& dl : denses_) init(dl.weight, dl.fan_in());
  }

  const ArchitectureConfig& config() const noexcept { return cfg_; }
  std::size_t input_volume() const noexcept { return cfg_.window * cfg_.window * cfg_.bands; }

  // Training path: caches activations for backward().
  Tensor<T> forward(std::span<const float> patch, Mode mode, Rng* dropout_rng) {
    Tensor<T> a = input_tensor(patch);
    for (std::size_t i = 0; i < convs_.size(); ++i) a = relus_[i].forward(convs_[i].forward(a));
    a = std::move(a).reshape({a.size()});
    for (std::size_t i = 0; i < kHiddenWidths.size(); ++i) {
      a = relus_[4 + i].forward(denses_[i].forward(a));
      a = drops_[i].forward(std::move(a), mode, dropout_rng);
    }
    return denses_[2].forward(a);
  }

  // Accumulates parameter gradients for the most recent forward().
  void backward(const Tensor<T>& grad_logits) {
    Tensor<T> g = denses_[2].backward(grad_logits);
    for (std::size_t i = kHiddenWidths.size(); i-- > 0;) {
      g = drops_[i].backward(std::move(g));
      g = denses_[i].backward(relus_[4 + i].backward(std::move(g)));
    }
    g = std::move(g).reshape(conv_out_shape_);
    for (std::size_t i = convs_.size(); i-- > 0;) {
      g = relus_[i].backward(std::move(g));
      g = convs_[i].backward(g, i != 0);
    }
  }

  // Inference path; touches no caches, safe to call concurrently.
  Tensor<T> logits(std::span<const float> patch) const {
    Tensor<T> a = input_tensor(patch);
    for (const auto& c : convs_) a = relu(c.apply(a));
    a = std::move(a).reshape({a.size()});
    for (std::size_t i = 0; i < kHiddenWidths.size(); ++i) a = relu(denses_[i].apply(a));
    return denses_[2].apply(a);
  }

  // Arg-max class, ties resolved to the lowest id.
  int predict_one(std::span<const float> patch) const {
    const Tensor<T> z = logits(patch);
    std::size_t best = 0;
    for (std::size_t i = 1; i < z.size(); ++i)
      if (z[i] > z[best]) best = i;
    return static_cast<int>(best);
  }

  // Fixed architectural order: conv1.w, conv1.b, ..., dense3.w, dense3.b.
  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> out;
    for (auto& c : convs_) out.insert(out.end(), {&c.weight, &c.bias});
    for (auto& dl : denses_) out.insert(out.end(), {&dl.weight, &dl.bias});
    return out;
  }
  std::vector<const Tensor<T>*> parameters() const {
    std::vector<const Tensor<T>*> out;
    for (auto& c : convs_) out.insert(out.end(), {&c.weight, &c.bias});
    for (auto& dl : denses_) out.insert(out.end(), {&dl.weight, &dl.bias});
    return out;
  }
  std::vector<Tensor<T>*> gradients() {
    std::vector<Tensor<T>*> out;
    for (auto& c : convs_) out.insert(out.end(), {&c.grad_weight, &c.grad_bias});
    for (auto& dl : denses_) out.insert(out.end(), {&dl.grad_weight, &dl.grad_bias});
    return out;
  }

  void zero_grad() {
    for (auto* g : gradients()) g->fill(T{0});
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  Conv3D<T>& conv(std::size_t i) { return convs_.at(i); }
  Dense<T>& dense(std::size_t i) { return denses_.at(i); }

 private:
  Tensor<T> input_tensor(std::span<const float> patch) const {
    if (patch.size() != input_volume()) {
      throw Error(ErrorKind::shape, "patch has " + std::to_string(patch.size()) +
                                        " values, model expects " + std::to_string(input_volume()));
    }
    Tensor<T> x({1, cfg_.window, cfg_.window, cfg_.bands});
    std::transform(patch.begin(), patch.end(), x.raw(), [](float v) { return static_cast<T>(v); });
    return x;
  }

  ArchitectureConfig cfg_;
  Shape conv_out_shape_;  // [maps, h, w, d]
  std::array<Conv3D<T>, 4> convs_;
  std::array<Dense<T>, 3> denses_;
  std::array<Relu<T>, 6> relus_;
  std::array<Dropout<T>, 2> drops_;
};

}  // namespace hsicnn
