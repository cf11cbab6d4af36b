#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "uvsd/types.hpp"

namespace uvsd {

using Rgb = std::array<std::uint8_t, 3>;

struct UserPixel {
  Rgb rgb{0, 0, 0};
  double brightness = 0.0;
};

struct PixelizerConfig {
  std::int64_t fans_threshold = 1000;
  double psi = 0.62;
};

// Eq. 1: stance decides the pixel color.
inline Rgb stance_to_rgb(Stance stance) {
  switch (stance) {
    case Stance::Positive: return Rgb{255, 0, 0};
    case Stance::Negative: return Rgb{0, 255, 0};
    case Stance::Neutral: return Rgb{0, 0, 255};
  }
  return Rgb{0, 0, 255};
}

// Eq. 2: officLev + psi * fansNum/fansThre, with the fan ratio kept real-valued.
inline double influence_to_brightness(std::int64_t offic_lev, std::int64_t fans_num,
                                      const PixelizerConfig& config) {
  if (offic_lev < 0 || fans_num < 0)
    throw Error("influence_to_brightness: negative officLev or fansNum");
  if (config.fans_threshold < 1) throw Error("fans_threshold must be >= 1");
  const double fans_lev =
      static_cast<double>(fans_num) / static_cast<double>(config.fans_threshold);
  return static_cast<double>(offic_lev) + config.psi * fans_lev;
}

inline UserPixel pixelize_user(const UserNode& node, const PixelizerConfig& config) {
  return UserPixel{stance_to_rgb(node.stance),
                   influence_to_brightness(node.offic_lev, node.fans_num, config)};
}

inline std::vector<UserPixel> pixelize_nodes(const std::vector<UserNode>& nodes,
                                             const PixelizerConfig& config) {
  std::vector<UserPixel> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(pixelize_user(n, config));
  return out;
}

}  // namespace uvsd
