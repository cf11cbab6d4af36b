#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "uvsd/rasterizer.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

// Temporally ordered stack of frames for one root user (oldest first).
struct UserVideo {
  std::vector<FrameImage> frames;
  std::string root_user;
  std::optional<int> label;
};

// Eq. 8, with a fixed temporal length: short sequences repeat the last frame,
// long ones keep the most recent frames.
inline UserVideo assemble_video(const std::vector<FrameImage>& frames, int target_length) {
  if (frames.empty()) throw Error("assemble_video: need at least one frame");
  if (target_length < 1) throw Error("assemble_video: target length must be >= 1");
  for (const auto& f : frames)
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw Error("assemble_video: frame dimensions differ");
  UserVideo video;
  if (frames.size() >= static_cast<std::size_t>(target_length)) {
    video.frames.assign(frames.end() - target_length, frames.end());
  } else {
    video.frames = frames;
    while (video.frames.size() < static_cast<std::size_t>(target_length))
      video.frames.push_back(frames.back());
  }
  return video;
}

namespace detail {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

// Video tensor file: little-endian, header {magic "UVSD", u32 n, H, W, C},
// then float32 values in (frame, row, col, channel) order.
inline void save_video(const UserVideo& video, const std::string& path) {
  if (video.frames.empty()) throw Error("save_video: empty video");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write video file '" + path + "'");
  out.write("UVSD", 4);
  detail::write_raw(out, static_cast<std::uint32_t>(video.frames.size()));
  detail::write_raw(out, static_cast<std::uint32_t>(video.frames[0].height));
  detail::write_raw(out, static_cast<std::uint32_t>(video.frames[0].width));
  detail::write_raw(out, static_cast<std::uint32_t>(3));
  for (const auto& f : video.frames)
    out.write(reinterpret_cast<const char*>(f.data.data()),
              static_cast<std::streamsize>(f.data.size() * sizeof(float)));
  if (!out) throw Error("I/O failure while writing '" + path + "'");
}

inline UserVideo load_video(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open video file '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "UVSD", 4) != 0)
    throw Error("'" + path + "' is not a UVSD video file");
  const auto n = detail::read_raw<std::uint32_t>(in);
  const auto h = detail::read_raw<std::uint32_t>(in);
  const auto w = detail::read_raw<std::uint32_t>(in);
  const auto c = detail::read_raw<std::uint32_t>(in);
  if (!in || c != 3 || n == 0 || h == 0 || w == 0)
    throw Error("'" + path + "' has an invalid UVSD header");
  UserVideo video;
  video.frames.resize(n);
  for (auto& f : video.frames) {
    f.width = static_cast<int>(w);
    f.height = static_cast<int>(h);
    f.data.resize(static_cast<std::size_t>(h) * w * 3);
    in.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(float)));
    if (!in) throw Error("'" + path + "' is truncated");
  }
  return video;
}

}  // namespace uvsd
