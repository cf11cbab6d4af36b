#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvsd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stance { Positive, Negative, Neutral };

inline const char* stance_name(Stance s) {
  switch (s) {
    case Stance::Positive: return "pos";
    case Stance::Negative: return "neg";
    case Stance::Neutral: return "neu";
  }
  return "neu";
}

inline Stance stance_from_name(const std::string& s) {
  if (s == "pos") return Stance::Positive;
  if (s == "neg") return Stance::Negative;
  if (s == "neu") return Stance::Neutral;
  throw Error("unknown stance value '" + s + "' (expected pos|neg|neu)");
}

struct UserNode {
  std::string id;
  Stance stance = Stance::Neutral;
  std::int64_t fans_num = 0;
  std::int64_t offic_lev = 0;
  std::int64_t first_active_at = 0;
};

struct Edge {
  std::string src;
  std::string dst;
  double weight = 1.0;
  std::int64_t created_at = 0;
};

// One root user's historical interaction graph. Undirected: edges are stored
// canonically with src < dst and at most one edge per unordered pair.
struct BehaviorGraph {
  std::string root_user;
  std::vector<UserNode> nodes;
  std::vector<Edge> edges;
  std::optional<int> label;  // 1 = spammer
};

// Cumulative temporal prefixes of one BehaviorGraph.
struct SubgraphSequence {
  std::vector<BehaviorGraph> slices;
  int delta_n = 1;
};

// Slice with previously seen nodes removed and bridged weights recomputed.
struct NormalizedSubgraph {
  std::vector<UserNode> nodes;
  std::vector<Edge> edges;
};

}  // namespace uvsd
