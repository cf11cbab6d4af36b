#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "uvsd/cnn.hpp"
#include "uvsd/parallel.hpp"
#include "uvsd/rng.hpp"
#include "uvsd/tensor.hpp"

namespace uvsd {

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 100;
  int batch_size = 16;
  int patience = 10;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int threads = 1;
};

struct OptimizerState {
  std::vector<Tensor> m, v;  // first/second moments, mirroring ModelParams
  long step = 0;

  static OptimizerState for_params(ModelParams& params) {
    OptimizerState s;
    for (auto& [name, t] : params.named()) {
      s.m.emplace_back(t->dims);
      s.v.emplace_back(t->dims);
    }
    return s;
  }
};

// Standard Adam update with bias correction.
inline void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
                      const TrainConfig& config) {
  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto p_named = params.named();
  auto g_named = grads.named();
  for (std::size_t t = 0; t < p_named.size(); ++t) {
    Tensor& p = *p_named[t].second;
    const Tensor& g = *g_named[t].second;
    Tensor& m = state.m[t];
    Tensor& v = state.v[t];
    for (std::size_t i = 0; i < p.v.size(); ++i) {
      m.v[i] = b1 * m.v[i] + (1.0 - b1) * g.v[i];
      v.v[i] = b2 * v.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
      const double m_hat = m.v[i] / corr1;
      const double v_hat = v.v[i] / corr2;
      p.v[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

struct Sample {
  Tensor video;
  int label = 0;
};

// Mean BCE over the batch plus exact analytic gradients. Per-sample gradients
// are computed independently (optionally in parallel) and summed in sample
// order, so the result does not depend on the thread count.
inline std::pair<double, Gradients> loss_and_gradients(const std::vector<const Sample*>& batch,
                                                       const ModelParams& params,
                                                       const ModelShape& shape,
                                                       int threads = 1) {
  if (batch.empty()) throw Error("loss_and_gradients: empty batch");
  std::vector<Gradients> per_sample(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    per_sample[i] = Gradients::sized(shape);
    losses[i] = backward(batch[i]->video, batch[i]->label, params, per_sample[i]);
  });
  Gradients total = Gradients::sized(shape);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  auto t_named = total.named();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += losses[i];
    auto s_named = per_sample[i].named();
    for (std::size_t t = 0; t < t_named.size(); ++t) {
      const auto& src = s_named[t].second->v;
      auto& dst = t_named[t].second->v;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  for (auto& [name, t] : t_named)
    for (double& x : t->v) x *= scale;
  return {loss * scale, std::move(total)};
}

inline double mean_bce(const std::vector<Sample>& set, const ModelParams& params,
                       int threads = 1) {
  if (set.empty()) throw Error("mean_bce: empty set");
  std::vector<double> losses(set.size(), 0.0);
  parallel_for(set.size(), threads, [&](std::size_t i) {
    losses[i] = bce_loss(forward(set[i].video, params), set[i].label);
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(set.size());
}

struct TrainResult {
  ModelParams params;
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  int best_epoch = 0;   // 0 = initial parameters
  int epochs_run = 0;
};

// Optional override for the per-epoch validation metric; used by tests to
// script loss trajectories.
using EvalHook = std::function<double(const ModelParams&, int epoch)>;

// Minimizes mean BCE with Adam. After every epoch the validation loss is
// evaluated; the best parameters are kept and returned, and training stops
// early after `patience` epochs without improvement.
inline TrainResult train(const std::vector<Sample>& train_set,
                         const std::vector<Sample>& val_set, const ModelShape& shape,
                         const TrainConfig& config, const EvalHook& eval_hook = {}) {
  if (train_set.empty() || val_set.empty())
    throw Error("train: training and validation sets must be non-empty");
  if (config.batch_size < 1) throw Error("train: batch_size must be >= 1");

  ModelParams params = ModelParams::he_init(shape, mix_seed(config.seed, 0x1217));
  OptimizerState opt = OptimizerState::for_params(params);
  Rng shuffle_rng(mix_seed(config.seed, 0x51AF));

  auto evaluate = [&](int epoch) {
    return eval_hook ? eval_hook(params, epoch) : mean_bce(val_set, params, config.threads);
  };

  TrainResult result;
  result.params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Fisher-Yates with the shared stream keeps runs bitwise reproducible.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      auto [loss, grads] = loss_and_gradients(batch, params, shape, config.threads);
      adam_step(params, grads, opt, config);
      epoch_loss += loss;
      ++batches;
    }
    result.train_losses.push_back(batches ? epoch_loss / batches : 0.0);

    const double val = evaluate(epoch);
    result.val_losses.push_back(val);
    result.epochs_run = epoch;
    if (val < best_val) {
      best_val = val;
      result.best_epoch = epoch;
      result.params = params;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= config.patience) break;
    }
  }
  return result;
}

}  // namespace uvsd
