#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "uvsd/rng.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

struct TsneResult {
  std::vector<std::array<double, 2>> coords;
  std::vector<std::pair<int, double>> kl_trace;  // (iteration, KL vs true P)
};

namespace detail {

inline std::vector<double> pairwise_sq_dists(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double diff = x[i][k] - x[j][k];
        s += diff * diff;
      }
      d[i * n + j] = s;
      d[j * n + i] = s;
    }
  }
  return d;
}

// Row entropy (nats) and conditional probabilities for one precision value.
inline double row_probs(const std::vector<double>& sq_dists, std::size_t n, std::size_t i,
                        double beta, std::vector<double>& probs) {
  double sum = 0.0;
  double min_d = std::numeric_limits<double>::max();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) min_d = std::min(min_d, sq_dists[i * n + j]);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      probs[j] = 0.0;
      continue;
    }
    // Shift by the row minimum so large beta stays in range.
    probs[j] = std::exp(-beta * (sq_dists[i * n + j] - min_d));
    sum += probs[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    probs[j] /= sum;
    if (probs[j] > 1e-300) entropy -= probs[j] * std::log(probs[j]);
  }
  return entropy;
}

}  // namespace detail

inline double effective_perplexity(double perplexity, std::size_t n) {
  return std::max(1.0, std::min(perplexity, (static_cast<double>(n) - 1.0) / 3.0));
}

// Per-point Gaussian bandwidths found by binary search so each conditional
// distribution has entropy log(perplexity). Returns the row-stochastic
// conditional matrix (diagonal zero).
inline std::vector<std::vector<double>> tsne_conditional_probs(
    const std::vector<std::vector<double>>& x, double perplexity) {
  const std::size_t n = x.size();
  if (n < 2) throw Error("tsne_conditional_probs: need at least 2 points");
  const double target = std::log(effective_perplexity(perplexity, n));
  const auto d = detail::pairwise_sq_dists(x);
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  std::vector<double> row(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::max();
    double entropy = detail::row_probs(d, n, i, beta, row);
    for (int it = 0; it < 300 && std::abs(entropy - target) > 1e-9; ++it) {
      if (entropy > target) {
        beta_lo = beta;
        beta = beta_hi == std::numeric_limits<double>::max() ? beta * 2.0
                                                             : (beta + beta_hi) / 2.0;
      } else {
        beta_hi = beta;
        beta = beta_lo == 0.0 ? beta / 2.0 : (beta + beta_lo) / 2.0;
      }
      entropy = detail::row_probs(d, n, i, beta, row);
    }
    p[i] = row;
  }
  return p;
}

// Standard t-SNE to 2-D: symmetrized affinities, early exaggeration, adaptive
// gains, momentum switch. Fully determined by config.seed. Fewer than 3
// points fall back to fixed positions on a line.
inline TsneResult tsne_2d(const std::vector<std::vector<double>>& x, const TsneConfig& config) {
  const std::size_t n = x.size();
  TsneResult result;
  if (n < 3) {
    for (std::size_t i = 0; i < n; ++i)
      result.coords.push_back({static_cast<double>(i), 0.0});
    return result;
  }
  if (config.iterations < 250) throw Error("tsne iterations must be >= 250");
  for (const auto& row : x)
    if (row.size() != x[0].size() || row.size() < 2)
      throw Error("tsne_2d: embeddings must share one dimension >= 2");

  const auto cond = tsne_conditional_probs(x, config.perplexity);
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        p[i * n + j] = std::max((cond[i][j] + cond[j][i]) / (2.0 * n), 1e-12);

  Rng rng(mix_seed(config.seed, 0x74534eU));
  std::vector<std::array<double, 2>> y(n), dy(n, {0.0, 0.0}), vel(n, {0.0, 0.0});
  std::vector<std::array<double, 2>> gains(n, {1.0, 1.0});
  for (auto& pt : y) {
    pt[0] = rng.normal() * 1e-4;
    pt[1] = rng.normal() * 1e-4;
  }

  const int exaggeration_until = 250;
  const double exaggeration = 12.0;
  std::vector<double> q(n * n, 0.0);

  auto compute_q = [&]() {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0];
        const double dyv = y[i][1] - y[j][1];
        const double num = 1.0 / (1.0 + dx * dx + dyv * dyv);
        q[i * n + j] = num;
        q[j * n + i] = num;
        sum += 2.0 * num;
      }
      q[i * n + i] = 0.0;
    }
    return sum;
  };

  auto kl_divergence = [&](double qsum) {
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double pij = p[i * n + j];
        const double qij = std::max(q[i * n + j] / qsum, 1e-12);
        kl += pij * std::log(pij / qij);
      }
    return kl;
  };

  for (int iter = 1; iter <= config.iterations; ++iter) {
    const double exag = iter <= exaggeration_until ? exaggeration : 1.0;
    const double momentum = iter <= 250 ? 0.5 : 0.8;
    const double qsum = compute_q();

    for (std::size_t i = 0; i < n; ++i) dy[i] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double num = q[i * n + j];  // unnormalized Student-t kernel
        const double mult = (exag * p[i * n + j] - num / qsum) * num;
        dy[i][0] += 4.0 * mult * (y[i][0] - y[j][0]);
        dy[i][1] += 4.0 * mult * (y[i][1] - y[j][1]);
      }
    }

    double mean0 = 0.0, mean1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 2; ++k) {
        const bool same_sign = (dy[i][k] > 0.0) == (vel[i][k] > 0.0);
        gains[i][k] = same_sign ? std::max(gains[i][k] * 0.8, 0.01) : gains[i][k] + 0.2;
        vel[i][k] = momentum * vel[i][k] - config.learning_rate * gains[i][k] * dy[i][k];
        y[i][k] += vel[i][k];
      }
      mean0 += y[i][0];
      mean1 += y[i][1];
    }
    mean0 /= n;
    mean1 /= n;
    for (std::size_t i = 0; i < n; ++i) {
      y[i][0] -= mean0;
      y[i][1] -= mean1;
    }

    if (iter % 25 == 0 || iter == config.iterations || iter == 50) {
      const double qs = compute_q();
      result.kl_trace.emplace_back(iter, kl_divergence(qs));
    }
  }

  for (const auto& pt : y)
    if (!std::isfinite(pt[0]) || !std::isfinite(pt[1]))
      throw Error("tsne_2d produced non-finite coordinates");
  result.coords = std::move(y);
  return result;
}

}  // namespace uvsd
