#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uvsd/rng.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

struct WalkConfig {
  double p = 0.5;
  double q = 0.5;
  int walk_length = 40;
  int walks_per_node = 10;
  std::uint64_t seed = 0;
};

// CSR adjacency over a normalized subgraph. Node indices follow the sorted
// order of node ids so the layout is independent of input ordering.
class WalkGraph {
 public:
  explicit WalkGraph(const NormalizedSubgraph& g) {
    ids_.reserve(g.nodes.size());
    for (const auto& n : g.nodes) ids_.push_back(n.id);
    std::sort(ids_.begin(), ids_.end());
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < ids_.size(); ++i) index.emplace(ids_[i], i);

    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(ids_.size());
    for (const auto& e : g.edges) {
      auto si = index.find(e.src);
      auto di = index.find(e.dst);
      if (si == index.end() || di == index.end())
        throw Error("edge endpoint missing from subgraph node set");
      adj[si->second].emplace_back(di->second, e.weight);
      adj[di->second].emplace_back(si->second, e.weight);
    }
    offsets_.reserve(ids_.size() + 1);
    offsets_.push_back(0);
    for (auto& list : adj) {
      std::sort(list.begin(), list.end());
      for (const auto& [nbr, w] : list) {
        neighbors_.push_back(nbr);
        weights_.push_back(w);
      }
      offsets_.push_back(static_cast<std::uint32_t>(neighbors_.size()));
    }
  }

  std::size_t node_count() const { return ids_.size(); }
  const std::string& id(std::uint32_t v) const { return ids_[v]; }

  std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }
  const std::uint32_t* neighbors(std::uint32_t v) const { return neighbors_.data() + offsets_[v]; }
  const double* weights(std::uint32_t v) const { return weights_.data() + offsets_[v]; }

  bool has_edge(std::uint32_t a, std::uint32_t b) const {
    const std::uint32_t* begin = neighbors_.data() + offsets_[a];
    const std::uint32_t* end = neighbors_.data() + offsets_[a + 1];
    return std::binary_search(begin, end, b);
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
};

// Eq. 4: bias factor from the hop distance between the previous node t and
// the candidate mu. d=0 iff mu==t, d=1 iff (t,mu) is an edge, else d=2.
inline double walk_bias(std::uint32_t prev, std::uint32_t candidate,
                        const WalkGraph& graph, double p, double q) {
  if (candidate == prev) return 1.0 / p;
  if (graph.has_edge(prev, candidate)) return 1.0;
  return 1.0 / q;
}

// Eq. 3: probabilities over the neighbors of `current`, aligned with
// graph.neighbors(current). Without a previous node the walk is first-order.
inline std::vector<double> transition_distribution(std::optional<std::uint32_t> prev,
                                                   std::uint32_t current,
                                                   const WalkGraph& graph, double p,
                                                   double q) {
  if (!(p > 0) || !(q > 0)) throw Error("walk parameters p and q must be > 0");
  const std::size_t deg = graph.degree(current);
  if (deg == 0)
    throw Error("node '" + graph.id(current) + "' has no neighbors");
  const std::uint32_t* nbrs = graph.neighbors(current);
  const double* w = graph.weights(current);
  std::vector<double> probs(deg);
  double z = 0.0;
  for (std::size_t i = 0; i < deg; ++i) {
    const double bias = prev ? walk_bias(*prev, nbrs[i], graph, p, q) : 1.0;
    probs[i] = bias * w[i];
    z += probs[i];
  }
  for (double& v : probs) v /= z;
  return probs;
}

namespace detail {

// Samples the next step using unnormalized scores; equivalent to drawing from
// transition_distribution.
inline std::optional<std::uint32_t> sample_step(std::optional<std::uint32_t> prev,
                                                std::uint32_t current,
                                                const WalkGraph& graph, double p,
                                                double q, Rng& rng) {
  const std::size_t deg = graph.degree(current);
  if (deg == 0) return std::nullopt;
  const std::uint32_t* nbrs = graph.neighbors(current);
  const double* w = graph.weights(current);
  double z = 0.0;
  std::vector<double> scores(deg);
  for (std::size_t i = 0; i < deg; ++i) {
    const double bias = prev ? walk_bias(*prev, nbrs[i], graph, p, q) : 1.0;
    scores[i] = bias * w[i];
    z += scores[i];
  }
  const double u = rng.uniform01() * z;
  double acc = 0.0;
  for (std::size_t i = 0; i < deg; ++i) {
    acc += scores[i];
    if (u < acc) return nbrs[i];
  }
  return nbrs[deg - 1];
}

}  // namespace detail

// walks_per_node walks from every node. Dead ends truncate the walk. Each walk
// has its own RNG stream derived from (seed, node, walk index), so generation
// may be parallelized per source node without changing the output.
inline std::vector<std::vector<std::uint32_t>> generate_walks(const WalkGraph& graph,
                                                              const WalkConfig& config) {
  if (graph.node_count() == 0) throw Error("generate_walks: empty graph");
  if (config.walk_length < 2) throw Error("walk_length must be >= 2");
  if (config.walks_per_node < 1) throw Error("walks_per_node must be >= 1");
  std::vector<std::vector<std::uint32_t>> walks;
  walks.reserve(graph.node_count() * config.walks_per_node);
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    for (int k = 0; k < config.walks_per_node; ++k) {
      Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(v) << 20 | k));
      std::vector<std::uint32_t> walk{v};
      std::optional<std::uint32_t> prev;
      while (walk.size() < static_cast<std::size_t>(config.walk_length)) {
        auto next = detail::sample_step(prev, walk.back(), graph, config.p, config.q, rng);
        if (!next) break;
        prev = walk.back();
        walk.push_back(*next);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

}  // namespace uvsd
