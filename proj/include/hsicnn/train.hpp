#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include "hsicnn/error.hpp"
#include "hsicnn/model.hpp"
#include "hsicnn/optim.hpp"
#include "hsicnn/patches.hpp"
#include "hsicnn/rng.hpp"

namespace hsicnn {

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch = 256;
  AdamConfig adam{};
  std::uint64_t seed = 0;
  // 1 = deterministic mode: one thread, samples reduced in batch order.
  std::size_t threads = 1;
  // When false the seconds column of the history is left at zero.
  bool record_time = true;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

struct EvalResult {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> predictions;
};

namespace detail {

// Runs fn(worker, begin, end) over [0, n) split into contiguous ranges.
template <typename Fn>
void parallel_ranges(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = n * w / threads;
    const std::size_t end = n * (w + 1) / threads;
    pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Eval-mode pass over a patch set: mean loss, accuracy and arg-max labels.
template <typename T>
EvalResult evaluate(const Model<T>& model, const PatchSet& set, std::size_t threads = 1) {
  EvalResult out;
  if (set.size() == 0) return out;
  out.predictions.assign(set.size(), 0);
  std::vector<double> losses(set.size(), 0.0);
  detail::parallel_ranges(set.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Tensor<T> z = model.logits(set.patch(i));
      losses[i] = softmax_cross_entropy<T>(z.data(), set.labels[i]).loss;
      std::size_t best = 0;
      for (std::size_t k = 1; k < z.size(); ++k)
        if (z[k] > z[best]) best = k;
      out.predictions[i] = static_cast<int>(best);
    }
  });
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    loss += losses[i];
    correct += out.predictions[i] == set.labels[i];
  }
  out.loss = loss / static_cast<double>(set.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return out;
}

template <typename T>
std::vector<int> predict(const Model<T>& model, const PatchSet& set, std::size_t threads = 1) {
  std::vector<int> out(set.size(), 0);
  detail::parallel_ranges(set.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = model.predict_one(set.patch(i));
  });
  return out;
}

inline std::size_t updates_per_epoch(std::size_t n, std::size_t batch) {
  return batch == 0 ? 0 : (n + batch - 1) / batch;
}

// Mini-batch Adam on mean softmax cross-entropy. Each epoch reshuffles with
// the shuffle stream; the final partial batch is kept. Dropout masks come
// from a per-(step, slot) stream so they do not depend on thread count.
template <typename T>
std::vector<EpochRecord> train(Model<T>& model, const PatchSet& train_set, const PatchSet& val_set,
                               const TrainOptions& opt,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (train_set.size() == 0) throw Error(ErrorKind::training, "empty training set");
  if (opt.batch == 0) throw Error(ErrorKind::training, "batch size must be at least 1");
  if (train_set.patch_volume() != model.input_volume()) {
    throw Error(ErrorKind::training, "patch volume " + std::to_string(train_set.patch_volume()) +
                                         " does not match the model input");
  }
  for (int label : train_set.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.config().classes) {
      throw Error(ErrorKind::label, "training label " + std::to_string(label) + " out of range");
    }
  }

  const std::size_t n = train_set.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.threads, opt.batch));
  std::vector<Model<T>> replicas(workers > 1 ? workers : 0, model);

  auto params = model.parameters();
  auto grads = model.gradients();
  Adam<T> adam(params, opt.adam);
  Rng shuffle_rng(opt.seed, Stream::shuffle);
  std::vector<std::size_t> order(n);
  std::uint64_t step = 0;

  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += opt.batch, ++step) {
      const std::size_t bs = std::min(opt.batch, n - start);
      std::vector<double> part_loss(workers, 0.0);
      std::vector<std::size_t> part_correct(workers, 0);

      auto run = [&](Model<T>& m, std::size_t w, std::size_t begin, std::size_t end) {
        for (std::size_t slot = begin; slot < end; ++slot) {
          const std::size_t idx = order[start + slot];
          Rng drop_rng(opt.seed, Stream::dropout, step, slot);
          const Tensor<T> z = m.forward(train_set.patch(idx), Mode::train, &drop_rng);
          auto lg = softmax_cross_entropy<T>(z.data(), train_set.labels[idx]);
          part_loss[w] += lg.loss;
          std::size_t best = 0;
          for (std::size_t k = 1; k < z.size(); ++k)
            if (z[k] > z[best]) best = k;
          part_correct[w] += static_cast<int>(best) == train_set.labels[idx];
          m.backward(lg.grad);
        }
      };

      model.zero_grad();
      if (workers == 1) {
        run(model, 0, 0, bs);
      } else {
        for (auto& r : replicas) {
          auto dst = r.parameters();
          for (std::size_t i = 0; i < params.size(); ++i) *dst[i] = *params[i];
          r.zero_grad();
        }
        detail::parallel_ranges(bs, workers, [&](std::size_t w, std::size_t begin, std::size_t end) {
          run(replicas[w], w, begin, end);
        });
        for (auto& r : replicas) {
          auto src = r.gradients();
          for (std::size_t i = 0; i < grads.size(); ++i) {
            T* g = grads[i]->raw();
            const T* s = src[i]->raw();
            for (std::size_t k = 0; k < grads[i]->size(); ++k) g[k] += s[k];
          }
        }
      }
      for (std::size_t w = 0; w < workers; ++w) {
        loss_sum += part_loss[w];
        correct += part_correct[w];
      }
      const T scale = static_cast<T>(1.0 / static_cast<double>(bs));
      for (auto* g : grads)
        for (auto& v : g->data()) v *= scale;
      adam.step(params, grads);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    const EvalResult val = evaluate(model, val_set, opt.threads);
    rec.val_loss = val.loss;
    rec.val_acc = val.accuracy;
    if (opt.record_time) {
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (!std::isfinite(rec.train_loss)) {
      throw Error(ErrorKind::training, "training loss became non-finite at epoch " +
                                           std::to_string(epoch));
    }
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

}  // namespace hsicnn
