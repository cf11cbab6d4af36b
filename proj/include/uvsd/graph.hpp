#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvsd/types.hpp"

namespace uvsd {

namespace detail {

inline std::string json_id(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw Error(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw Error(std::string("field '") + field + "' must be a string or integer id");
}

}  // namespace detail

inline void validate_graph(const BehaviorGraph& g) {
  std::unordered_set<std::string> ids;
  for (const auto& n : g.nodes) {
    if (n.fans_num < 0) throw Error("node '" + n.id + "': fansNum must be >= 0");
    if (n.offic_lev < 0) throw Error("node '" + n.id + "': officLev must be >= 0");
    if (!ids.insert(n.id).second) throw Error("duplicate node id '" + n.id + "'");
  }
  if (!ids.count(g.root_user))
    throw Error("root user '" + g.root_user + "' is not among the nodes");
  std::unordered_set<std::string> pairs;
  for (const auto& e : g.edges) {
    if (e.src == e.dst) throw Error("self-loop on node '" + e.src + "'");
    if (!ids.count(e.src)) throw Error("edge endpoint '" + e.src + "' is not a known node");
    if (!ids.count(e.dst)) throw Error("edge endpoint '" + e.dst + "' is not a known node");
    if (!(e.weight > 0)) throw Error("edge (" + e.src + "," + e.dst + ") has non-positive weight");
    const std::string key = e.src < e.dst ? e.src + "\x1f" + e.dst : e.dst + "\x1f" + e.src;
    if (!pairs.insert(key).second)
      throw Error("duplicate edge for pair (" + e.src + "," + e.dst + ")");
  }
}

inline nlohmann::json graph_to_json(const BehaviorGraph& g) {
  nlohmann::json rec;
  rec["root"] = g.root_user;
  if (g.label) rec["label"] = *g.label;
  auto& nodes = rec["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id},
                     {"stance", stance_name(n.stance)},
                     {"fans", n.fans_num},
                     {"officLev", n.offic_lev},
                     {"firstActiveAt", n.first_active_at}});
  }
  auto& edges = rec["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"weight", e.weight},
                     {"createdAt", e.created_at}});
  }
  return rec;
}

inline BehaviorGraph graph_from_json(const nlohmann::json& rec) {
  BehaviorGraph g;
  g.root_user = detail::json_id(rec, "root");
  if (rec.contains("label") && !rec.at("label").is_null()) {
    const int label = rec.at("label").get<int>();
    if (label != 0 && label != 1) throw Error("label must be 0 or 1");
    g.label = label;
  }
  if (!rec.contains("nodes") || !rec.at("nodes").is_array())
    throw Error("missing 'nodes' array");
  for (const auto& jn : rec.at("nodes")) {
    UserNode n;
    n.id = detail::json_id(jn, "id");
    if (!jn.contains("stance")) throw Error("node '" + n.id + "': missing field 'stance'");
    n.stance = stance_from_name(jn.at("stance").get<std::string>());
    n.fans_num = jn.value("fans", std::int64_t{0});
    n.offic_lev = jn.value("officLev", std::int64_t{0});
    n.first_active_at = jn.value("firstActiveAt", std::int64_t{0});
    g.nodes.push_back(std::move(n));
  }
  // Merge duplicate unordered pairs by summing weights; keep earliest createdAt.
  std::unordered_map<std::string, std::size_t> pair_index;
  if (rec.contains("edges")) {
    if (!rec.at("edges").is_array()) throw Error("'edges' must be an array");
    for (const auto& je : rec.at("edges")) {
      Edge e;
      e.src = detail::json_id(je, "src");
      e.dst = detail::json_id(je, "dst");
      if (e.src == e.dst) throw Error("self-loop on node '" + e.src + "'");
      if (e.dst < e.src) std::swap(e.src, e.dst);
      if (!je.contains("weight")) throw Error("edge (" + e.src + "," + e.dst + "): missing field 'weight'");
      e.weight = je.at("weight").get<double>();
      if (!(e.weight > 0))
        throw Error("edge (" + e.src + "," + e.dst + ") has non-positive weight");
      e.created_at = je.value("createdAt", std::int64_t{0});
      const std::string key = e.src + "\x1f" + e.dst;
      auto it = pair_index.find(key);
      if (it == pair_index.end()) {
        pair_index.emplace(key, g.edges.size());
        g.edges.push_back(std::move(e));
      } else {
        Edge& prev = g.edges[it->second];
        prev.weight += e.weight;
        prev.created_at = std::min(prev.created_at, e.created_at);
      }
    }
  }
  validate_graph(g);
  return g;
}

// Reads one JSON record per line. Errors carry the 1-based line number.
inline std::vector<BehaviorGraph> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path + "'");
  std::vector<BehaviorGraph> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      out.push_back(graph_from_json(rec));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void save_dataset(const std::vector<BehaviorGraph>& graphs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file '" + path + "'");
  for (const auto& g : graphs) out << graph_to_json(g).dump() << "\n";
  if (!out) throw Error("I/O failure while writing '" + path + "'");
}

// Node order used for temporal slicing and SBP truncation: firstActiveAt,
// ties broken by id.
inline std::vector<std::size_t> temporal_order(const BehaviorGraph& g) {
  std::vector<std::size_t> order(g.nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = g.nodes[a];
    const auto& nb = g.nodes[b];
    if (na.first_active_at != nb.first_active_at)
      return na.first_active_at < nb.first_active_at;
    return na.id < nb.id;
  });
  return order;
}

// Node-induced subgraph over the given node indices of `g`.
inline BehaviorGraph induced_subgraph(const BehaviorGraph& g,
                                      const std::vector<std::size_t>& node_indices) {
  BehaviorGraph sub;
  sub.root_user = g.root_user;
  sub.label = g.label;
  std::unordered_set<std::string> keep;
  sub.nodes.reserve(node_indices.size());
  for (std::size_t i : node_indices) {
    sub.nodes.push_back(g.nodes[i]);
    keep.insert(g.nodes[i].id);
  }
  for (const auto& e : g.edges)
    if (keep.count(e.src) && keep.count(e.dst)) sub.edges.push_back(e);
  return sub;
}

inline SubgraphSequence time_slice(const BehaviorGraph& g, int delta_n) {
  if (delta_n < 1) throw Error("deltaN must be >= 1");
  if (g.nodes.empty()) throw Error("cannot slice an empty graph");
  const auto order = temporal_order(g);
  SubgraphSequence seq;
  seq.delta_n = delta_n;
  for (std::size_t count = std::min<std::size_t>(delta_n, order.size());;
       count = std::min(count + static_cast<std::size_t>(delta_n), order.size())) {
    std::vector<std::size_t> prefix(order.begin(), order.begin() + count);
    seq.slices.push_back(induced_subgraph(g, prefix));
    if (count == order.size()) break;
  }
  return seq;
}

// Eq. 7: a surviving pair bridged by `deleted_count` removed interior nodes
// gets the chain's weight sum divided by (deleted_count + 1).
inline double recompute_edge_weight(const std::vector<double>& path_weights,
                                    int deleted_count) {
  if (path_weights.empty()) throw Error("recompute_edge_weight: empty path");
  if (deleted_count < 1) throw Error("recompute_edge_weight: deleted_count must be >= 1");
  if (path_weights.size() != static_cast<std::size_t>(deleted_count) + 1)
    throw Error("recompute_edge_weight: need deleted_count+1 path weights");
  double sum = 0.0;
  for (double w : path_weights) sum += w;
  return sum / static_cast<double>(deleted_count + 1);
}

namespace detail {

// Longest deleted-interior chain that still produces a bridge edge.
inline constexpr int kMaxBridgeHops = 3;

struct ChainCandidate {
  int deleted = 0;
  double weight_sum = 0.0;
  std::vector<double> weights;  // ordered from the lexicographically smaller endpoint
  std::int64_t created_at = 0;

  bool better_than(const ChainCandidate& other) const {
    if (deleted != other.deleted) return deleted < other.deleted;
    return weight_sum < other.weight_sum;
  }
};

}  // namespace detail

// Eq. 6: drop nodes already present in `previous`, keep direct edges among the
// survivors, and bridge surviving pairs whose only connection ran through
// deleted nodes (minimum-hop chain, ties by smaller weight sum, at most
// kMaxBridgeHops deleted intermediates).
inline NormalizedSubgraph normalize_subgraph(const BehaviorGraph& current,
                                             const BehaviorGraph* previous) {
  NormalizedSubgraph out;
  std::unordered_set<std::string> deleted;
  if (previous) {
    std::unordered_set<std::string> current_ids;
    for (const auto& n : current.nodes) current_ids.insert(n.id);
    for (const auto& n : previous->nodes) {
      if (!current_ids.count(n.id))
        throw Error("previous slice node '" + n.id + "' is not contained in the current slice");
      deleted.insert(n.id);
    }
  }

  std::unordered_set<std::string> surviving;
  for (const auto& n : current.nodes) {
    if (deleted.count(n.id)) continue;
    out.nodes.push_back(n);
    surviving.insert(n.id);
  }
  if (!previous) {
    out.edges = current.edges;
    return out;
  }

  std::unordered_set<std::string> direct;
  for (const auto& e : current.edges) {
    if (surviving.count(e.src) && surviving.count(e.dst)) {
      out.edges.push_back(e);
      direct.insert(e.src + "\x1f" + e.dst);
    }
  }

  // Adjacency over the full current slice for the chain search.
  std::unordered_map<std::string, std::vector<const Edge*>> adj;
  for (const auto& e : current.edges) {
    adj[e.src].push_back(&e);
    adj[e.dst].push_back(&e);
  }
  for (auto& [id, list] : adj) {
    std::sort(list.begin(), list.end(), [&](const Edge* a, const Edge* b) {
      const std::string& oa = a->src == id ? a->dst : a->src;
      const std::string& ob = b->src == id ? b->dst : b->src;
      return oa < ob;
    });
  }

  std::map<std::pair<std::string, std::string>, detail::ChainCandidate> best;
  std::vector<const Edge*> chain;
  std::unordered_set<std::string> on_path;

  auto consider = [&](const std::string& origin, const std::string& target) {
    const std::string& lo = origin < target ? origin : target;
    const std::string& hi = origin < target ? target : origin;
    if (direct.count(lo + "\x1f" + hi)) return;
    detail::ChainCandidate cand;
    cand.deleted = static_cast<int>(chain.size()) - 1;
    cand.created_at = chain.front()->created_at;
    cand.weights.reserve(chain.size());
    for (const Edge* e : chain) {
      cand.weights.push_back(e->weight);
      cand.created_at = std::min(cand.created_at, e->created_at);
    }
    if (origin != lo) std::reverse(cand.weights.begin(), cand.weights.end());
    for (double w : cand.weights) cand.weight_sum += w;
    auto key = std::make_pair(lo, hi);
    auto it = best.find(key);
    if (it == best.end() || cand.better_than(it->second)) best[key] = std::move(cand);
  };

  auto dfs = [&](auto&& self, const std::string& origin, const std::string& at) -> void {
    auto it = adj.find(at);
    if (it == adj.end()) return;
    for (const Edge* e : it->second) {
      const std::string& next = e->src == at ? e->dst : e->src;
      if (on_path.count(next)) continue;
      chain.push_back(e);
      if (surviving.count(next)) {
        if (next != origin && chain.size() >= 2) consider(origin, next);
      } else if (chain.size() <= detail::kMaxBridgeHops) {
        on_path.insert(next);
        self(self, origin, next);
        on_path.erase(next);
      }
      chain.pop_back();
    }
  };

  for (const auto& n : out.nodes) {
    on_path.insert(n.id);
    dfs(dfs, n.id, n.id);
    on_path.erase(n.id);
  }

  for (const auto& [key, cand] : best) {
    Edge e;
    e.src = key.first;
    e.dst = key.second;
    e.weight = recompute_edge_weight(cand.weights, cand.deleted);
    e.created_at = cand.created_at;
    out.edges.push_back(std::move(e));
  }
  return out;
}

inline std::vector<NormalizedSubgraph> normalize_sequence(const SubgraphSequence& seq) {
  std::vector<NormalizedSubgraph> out;
  out.reserve(seq.slices.size());
  for (std::size_t k = 0; k < seq.slices.size(); ++k)
    out.push_back(normalize_subgraph(seq.slices[k], k == 0 ? nullptr : &seq.slices[k - 1]));
  return out;
}

}  // namespace uvsd
