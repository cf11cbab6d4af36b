#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "uvsd/graph.hpp"
#include "uvsd/rng.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

struct SynthConfig {
  int num_users = 200;
  double spammer_fraction = 0.5;
  int nodes_per_graph = 60;
  double spammer_pos_rate = 0.65;
  double normal_pos_rate = 0.30;
  double spammer_burstiness = 6.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Stance draw_stance(Rng& rng, double pos_rate) {
  const double u = rng.uniform01();
  if (u < pos_rate) return Stance::Positive;
  return u < pos_rate + (1.0 - pos_rate) / 2.0 ? Stance::Negative : Stance::Neutral;
}

// Spammers: clique-like groups of low-influence accounts posting in bursts.
// Normal users: a sparse interaction tree of organically grown accounts.
inline BehaviorGraph synth_graph(int user_idx, bool spammer, const SynthConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0xD5 + static_cast<std::uint64_t>(user_idx)));
  const int n = cfg.nodes_per_graph;
  const std::string prefix = "u" + std::to_string(user_idx);

  BehaviorGraph g;
  g.root_user = prefix + "_n0";
  g.label = spammer ? 1 : 0;
  g.nodes.reserve(n);

  const std::int64_t t0 = 1600000000LL + static_cast<std::int64_t>(user_idx) * 86400;
  const double base_gap = 3600.0;
  std::int64_t t = t0;
  const double pos_rate = spammer ? cfg.spammer_pos_rate : cfg.normal_pos_rate;
  const int burst_len = std::max(2, n / 8);

  for (int j = 0; j < n; ++j) {
    UserNode node;
    node.id = prefix + "_n" + std::to_string(j);
    node.stance = draw_stance(rng, pos_rate);
    if (spammer) {
      // Throwaway accounts: few fans, essentially never platform-verified.
      node.fans_num = static_cast<std::int64_t>(std::exp(rng.uniform01() * std::log(3000.0)));
      node.offic_lev = rng.uniform01() < 0.02 ? 1 : 0;
    } else {
      node.fans_num = static_cast<std::int64_t>(std::exp(rng.uniform01() * std::log(80000.0)));
      node.offic_lev = rng.uniform01() < 0.20 ? 1 + static_cast<int>(rng.below(3)) : 0;
    }
    node.first_active_at = t;
    // Bursty arrivals for spammers: short gaps inside a burst, long between.
    double gap = base_gap;
    if (spammer)
      gap = (j % burst_len == burst_len - 1) ? base_gap * cfg.spammer_burstiness
                                             : base_gap / cfg.spammer_burstiness;
    t += std::max<std::int64_t>(1, static_cast<std::int64_t>(gap * (0.5 + rng.uniform01())));
    g.nodes.push_back(std::move(node));
  }

  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    Edge e;
    e.src = g.nodes[std::min(a, b)].id;
    e.dst = g.nodes[std::max(a, b)].id;
    if (e.dst < e.src) std::swap(e.src, e.dst);
    e.weight = 0.5 + 1.5 * rng.uniform01();
    e.created_at = std::max(g.nodes[a].first_active_at, g.nodes[b].first_active_at);
    g.edges.push_back(std::move(e));
  };

  std::vector<std::pair<int, int>> pairs;
  auto link = [&](int a, int b) {
    if (a == b) return;
    const auto key = std::minmax(a, b);
    if (std::find(pairs.begin(), pairs.end(), std::make_pair(key.first, key.second)) !=
        pairs.end())
      return;
    pairs.emplace_back(key.first, key.second);
    add_edge(a, b);
  };

  if (spammer) {
    const int group_size = 8;
    for (int j = 1; j < n; ++j) {
      const int group_start = ((j - 1) / group_size) * group_size + 1;
      link(group_start, j);
      for (int k = group_start; k < j; ++k)
        if (rng.uniform01() < 0.40) link(k, j);
      if (rng.uniform01() < 0.50) link(0, j);
    }
    link(0, 1);
  } else {
    for (int j = 1; j < n; ++j) {
      link(static_cast<int>(rng.below(static_cast<std::uint64_t>(j))), j);
      if (rng.uniform01() < 0.10)
        link(static_cast<int>(rng.below(static_cast<std::uint64_t>(j))), j);
    }
  }
  validate_graph(g);
  return g;
}

}  // namespace detail

inline std::vector<BehaviorGraph> generate_synthetic(const SynthConfig& cfg) {
  if (cfg.num_users < 2) throw Error("generate_synthetic: num_users must be >= 2");
  if (!(cfg.spammer_fraction > 0.0 && cfg.spammer_fraction < 1.0))
    throw Error("generate_synthetic: spammer_fraction must be in (0,1)");
  if (cfg.nodes_per_graph < 1) throw Error("generate_synthetic: nodes_per_graph must be >= 1");
  if (cfg.spammer_burstiness < 1.0)
    throw Error("generate_synthetic: spammer_burstiness must be >= 1");
  const int spammers =
      static_cast<int>(std::llround(cfg.num_users * cfg.spammer_fraction));
  std::vector<BehaviorGraph> out;
  out.reserve(cfg.num_users);
  for (int u = 0; u < cfg.num_users; ++u)
    out.push_back(detail::synth_graph(u, u < spammers, cfg));
  return out;
}

// Stratified split. Per-class train counts round to nearest; when a class has
// at least two members, both splits get at least one of them.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<int>& labels, double ratio, std::uint64_t seed) {
  if (labels.size() < 2) throw Error("split: need at least 2 items");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split: ratio must be in (0,1)");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? pos : neg).push_back(i);

  std::vector<std::size_t> train, test;
  Rng rng(mix_seed(seed, 0x5B17));
  auto take = [&](std::vector<std::size_t>& cls) {
    if (cls.empty()) return;
    for (std::size_t i = cls.size(); i > 1; --i)
      std::swap(cls[i - 1], cls[rng.below(i)]);
    auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(cls.size()) * ratio));
    if (cls.size() >= 2) n_train = std::clamp(n_train, std::size_t{1}, cls.size() - 1);
    train.insert(train.end(), cls.begin(), cls.begin() + n_train);
    test.insert(test.end(), cls.begin() + n_train, cls.end());
  };
  take(pos);
  take(neg);
  if (train.empty() || test.empty())
    throw Error("split: dataset too small to stratify into non-empty train and test sets");
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

inline std::pair<std::vector<BehaviorGraph>, std::vector<BehaviorGraph>> split(
    const std::vector<BehaviorGraph>& dataset, double ratio, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& g : dataset) {
    if (!g.label) throw Error("split: graph '" + g.root_user + "' has no label");
    labels.push_back(*g.label);
  }
  auto [train_idx, test_idx] = split_indices(labels, ratio, seed);
  std::pair<std::vector<BehaviorGraph>, std::vector<BehaviorGraph>> out;
  for (std::size_t i : train_idx) out.first.push_back(dataset[i]);
  for (std::size_t i : test_idx) out.second.push_back(dataset[i]);
  return out;
}

}  // namespace uvsd
