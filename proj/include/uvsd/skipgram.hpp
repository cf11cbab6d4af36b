#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "uvsd/rng.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

struct EmbeddingConfig {
  int dim = 64;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;
};

struct SkipgramResult {
  std::vector<std::vector<double>> embeddings;  // input-side vectors
  std::vector<double> epoch_losses;             // mean pair loss per epoch
};

inline double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// One training example: a (center, context) pair plus sampled negatives.
struct SgnsExample {
  std::uint32_t center = 0;
  std::uint32_t context = 0;
  std::vector<std::uint32_t> negatives;
};

namespace detail {

inline double dot(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double log_sigmoid(double x) {
  // log(sigmoid(x)) computed without overflow.
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace detail

// Negative-sampling loss of one example:
//   -log s(u_ctx . v_c) - sum_neg log s(-u_neg . v_c)
// with v from `input` and u from `output`, both node_count x dim row-major.
inline double sgns_loss(const std::vector<double>& input, const std::vector<double>& output,
                        int dim, const SgnsExample& ex) {
  const double* vc = input.data() + static_cast<std::size_t>(ex.center) * dim;
  double loss = -detail::log_sigmoid(
      detail::dot(vc, output.data() + static_cast<std::size_t>(ex.context) * dim, dim));
  for (std::uint32_t neg : ex.negatives)
    loss -= detail::log_sigmoid(
        -detail::dot(vc, output.data() + static_cast<std::size_t>(neg) * dim, dim));
  return loss;
}

// Accumulates the analytic gradients of sgns_loss into grad_input/grad_output
// (same shapes as input/output).
inline void sgns_gradients(const std::vector<double>& input, const std::vector<double>& output,
                           int dim, const SgnsExample& ex, std::vector<double>& grad_input,
                           std::vector<double>& grad_output) {
  const double* vc = input.data() + static_cast<std::size_t>(ex.center) * dim;
  double* gvc = grad_input.data() + static_cast<std::size_t>(ex.center) * dim;
  auto accumulate = [&](std::uint32_t target, double label) {
    const double* u = output.data() + static_cast<std::size_t>(target) * dim;
    double* gu = grad_output.data() + static_cast<std::size_t>(target) * dim;
    const double g = sigmoid(detail::dot(vc, u, dim)) - label;  // dL/d(dot)
    for (int i = 0; i < dim; ++i) {
      gvc[i] += g * u[i];
      gu[i] += g * vc[i];
    }
  };
  accumulate(ex.context, 1.0);
  for (std::uint32_t neg : ex.negatives) accumulate(neg, 0.0);
}

namespace detail {

// Cumulative unigram^0.75 table for negative sampling.
class NegativeSampler {
 public:
  NegativeSampler(const std::vector<std::vector<std::uint32_t>>& walks,
                  std::size_t node_count)
      : cumulative_(node_count, 0.0) {
    std::vector<double> counts(node_count, 0.0);
    for (const auto& walk : walks)
      for (std::uint32_t v : walk) counts[v] += 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < node_count; ++i) {
      acc += std::pow(counts[i], 0.75);
      cumulative_[i] = acc;
    }
    total_ = acc;
  }

  std::uint32_t draw(Rng& rng) const {
    const double u = rng.uniform01() * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace detail

// Skip-gram with negative sampling over random-walk corpora. Single-threaded
// and fully determined by config.seed.
inline SkipgramResult train_skipgram(const std::vector<std::vector<std::uint32_t>>& walks,
                                     std::size_t node_count, const EmbeddingConfig& config) {
  if (config.dim < 2) throw Error("embedding dim must be >= 2");
  if (config.window < 1 || config.negatives < 1)
    throw Error("window and negatives must be >= 1");
  std::vector<bool> covered(node_count, false);
  std::size_t pairs_per_epoch = 0;
  for (const auto& walk : walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (walk[i] >= node_count) throw Error("walk references an unknown node index");
      covered[walk[i]] = true;
      const std::size_t lo = i >= static_cast<std::size_t>(config.window) ? i - config.window : 0;
      const std::size_t hi = std::min(walk.size(), i + config.window + 1);
      pairs_per_epoch += (hi - lo) - 1;
    }
  }
  for (std::size_t v = 0; v < node_count; ++v)
    if (!covered[v]) throw Error("node index " + std::to_string(v) + " is absent from all walks");

  const int dim = config.dim;
  std::vector<double> input(node_count * dim);
  std::vector<double> output(node_count * dim, 0.0);
  Rng rng(mix_seed(config.seed, 0x5347u));  // init + sampling stream
  for (double& v : input) v = (rng.uniform01() - 0.5) / dim;

  SkipgramResult result;
  result.epoch_losses.reserve(config.epochs);
  detail::NegativeSampler sampler(walks, node_count);
  const double total_pairs =
      static_cast<double>(pairs_per_epoch) * std::max(1, config.epochs);

  std::size_t done = 0;
  std::vector<double> grad_center(dim);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i) {
        const std::uint32_t center = walk[i];
        const std::size_t lo = i >= static_cast<std::size_t>(config.window) ? i - config.window : 0;
        const std::size_t hi = std::min(walk.size(), i + config.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          const std::uint32_t context = walk[j];
          const double alpha = config.learning_rate *
                               std::max(1e-4, 1.0 - static_cast<double>(done) / total_pairs);
          double* vc = input.data() + static_cast<std::size_t>(center) * dim;
          std::fill(grad_center.begin(), grad_center.end(), 0.0);
          double pair_loss = 0.0;
          auto update_target = [&](std::uint32_t target, double label) {
            double* u = output.data() + static_cast<std::size_t>(target) * dim;
            const double d = detail::dot(vc, u, dim);
            pair_loss -= label > 0 ? detail::log_sigmoid(d) : detail::log_sigmoid(-d);
            const double g = sigmoid(d) - label;
            for (int k = 0; k < dim; ++k) {
              grad_center[k] += g * u[k];
              u[k] -= alpha * g * vc[k];
            }
          };
          update_target(context, 1.0);
          if (node_count > 1) {
            for (int n = 0; n < config.negatives; ++n) {
              std::uint32_t neg = sampler.draw(rng);
              for (int tries = 0; neg == context && tries < 100; ++tries)
                neg = sampler.draw(rng);
              if (neg == context) continue;
              update_target(neg, 0.0);
            }
          }
          for (int k = 0; k < dim; ++k) vc[k] -= alpha * grad_center[k];
          epoch_loss += pair_loss;
          ++epoch_pairs;
          ++done;
        }
      }
    }
    result.epoch_losses.push_back(epoch_pairs ? epoch_loss / epoch_pairs : 0.0);
  }

  result.embeddings.resize(node_count);
  for (std::size_t v = 0; v < node_count; ++v)
    result.embeddings[v].assign(input.begin() + v * dim, input.begin() + (v + 1) * dim);
  return result;
}

}  // namespace uvsd
