#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "uvsd/rasterizer.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

inline std::uint8_t channel_to_byte(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

inline std::vector<std::uint8_t> frame_to_bytes(const FrameImage& img) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(img.data.size());
  for (float v : img.data) bytes.push_back(channel_to_byte(v));
  return bytes;
}

// Binary PPM (P6), 8 bits per channel.
inline std::vector<std::uint8_t> encode_ppm(const FrameImage& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto bytes = frame_to_bytes(img);
  out.insert(out.end(), bytes.begin(), bytes.end());
  return out;
}

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  const auto crc = crc32(0L, body.data(), static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

// 8-bit truecolor PNG with filter type 0 on every scanline.
inline std::vector<std::uint8_t> encode_png(const FrameImage& img) {
  static const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<std::uint8_t> out(signature, signature + 8);

  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::put_chunk(out, "IHDR", ihdr);

  const auto bytes = frame_to_bytes(img);
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + img.width * 3));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter none
    const std::uint8_t* row = bytes.data() + static_cast<std::size_t>(y) * img.width * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(img.width) * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw Error("encode_png: zlib compression failed");
  idat.resize(bound);
  detail::put_chunk(out, "IDAT", idat);
  detail::put_chunk(out, "IEND", {});
  return out;
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("I/O failure while writing '" + path + "'");
}

inline void write_ppm(const FrameImage& img, const std::string& path) {
  write_bytes(path, encode_ppm(img));
}

inline void write_png(const FrameImage& img, const std::string& path) {
  write_bytes(path, encode_png(img));
}

}  // namespace uvsd
