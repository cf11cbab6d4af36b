#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "uvsd/rng.hpp"
#include "uvsd/skipgram.hpp"  // sigmoid
#include "uvsd/tensor.hpp"
#include "uvsd/types.hpp"
#include "uvsd/video.hpp"

namespace uvsd {

// Fixed architecture: two 3-D conv blocks (3x3x3 kernels, same padding, ReLU,
// 2x2x2 max-pool with partial edge windows) -> dense(64, ReLU) -> dense(1)
// -> sigmoid.
struct ModelShape {
  int frames = 0, height = 0, width = 0;
  int conv1_out = 8;
  int conv2_out = 16;
  int hidden = 64;

  static constexpr int kInputChannels = 3;

  static int pooled(int n) { return (n + 1) / 2; }

  int flat_size() const {
    const int d = pooled(pooled(frames));
    const int h = pooled(pooled(height));
    const int w = pooled(pooled(width));
    return d * h * w * conv2_out;
  }
};

struct ModelParams {
  Tensor conv1_k, conv1_b;  // {3,3,3,Cin,Cout}, {Cout}
  Tensor conv2_k, conv2_b;
  Tensor dense1_w, dense1_b;  // {flat,hidden}, {hidden}
  Tensor dense2_w, dense2_b;  // {hidden}, {1}

  std::vector<std::pair<std::string, Tensor*>> named() {
    return {{"conv1.kernel", &conv1_k}, {"conv1.bias", &conv1_b},
            {"conv2.kernel", &conv2_k}, {"conv2.bias", &conv2_b},
            {"dense1.weight", &dense1_w}, {"dense1.bias", &dense1_b},
            {"dense2.weight", &dense2_w}, {"dense2.bias", &dense2_b}};
  }
  std::vector<std::pair<std::string, const Tensor*>> named() const {
    return {{"conv1.kernel", &conv1_k}, {"conv1.bias", &conv1_b},
            {"conv2.kernel", &conv2_k}, {"conv2.bias", &conv2_b},
            {"dense1.weight", &dense1_w}, {"dense1.bias", &dense1_b},
            {"dense2.weight", &dense2_w}, {"dense2.bias", &dense2_b}};
  }

  static ModelParams sized(const ModelShape& s) {
    ModelParams p;
    p.conv1_k = Tensor({3, 3, 3, ModelShape::kInputChannels, s.conv1_out});
    p.conv1_b = Tensor({s.conv1_out});
    p.conv2_k = Tensor({3, 3, 3, s.conv1_out, s.conv2_out});
    p.conv2_b = Tensor({s.conv2_out});
    p.dense1_w = Tensor({s.flat_size(), s.hidden});
    p.dense1_b = Tensor({s.hidden});
    p.dense2_w = Tensor({s.hidden});
    p.dense2_b = Tensor({1});
    return p;
  }

  // He-uniform kernels/weights, zero biases, one stream per tensor.
  static ModelParams he_init(const ModelShape& s, std::uint64_t seed) {
    ModelParams p = sized(s);
    int tensor_idx = 0;
    auto init = [&](Tensor& t, int fan_in) {
      Rng rng(mix_seed(seed, 0xC44 + tensor_idx++));
      const double limit = std::sqrt(6.0 / fan_in);
      for (double& x : t.v) x = rng.uniform(-limit, limit);
    };
    init(p.conv1_k, 27 * ModelShape::kInputChannels);
    init(p.conv2_k, 27 * s.conv1_out);
    init(p.dense1_w, s.flat_size());
    init(p.dense2_w, s.hidden);
    return p;
  }
};

using Gradients = ModelParams;  // same tensor layout

namespace nn {

// 3-D convolution, 3x3x3 kernel, stride 1, zero padding 1 ("same").
// in: {D,H,W,Ci}, kernel: {3,3,3,Ci,Co}, out: {D,H,W,Co}.
inline void conv3d_forward(const Tensor& in, const Tensor& kernel, const Tensor& bias,
                           Tensor& out) {
  const int d = in.dims[0], h = in.dims[1], w = in.dims[2], ci = in.dims[3];
  const int co = kernel.dims[4];
  out = Tensor({d, h, w, co});
  const double* kd_ = kernel.v.data();
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double* o = out.v.data() + ((static_cast<std::size_t>(z) * h + y) * w + x) * co;
        for (int c = 0; c < co; ++c) o[c] = bias.v[c];
        for (int kz = 0; kz < 3; ++kz) {
          const int iz = z + kz - 1;
          if (iz < 0 || iz >= d) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= w) continue;
              const double* iv =
                  in.v.data() + ((static_cast<std::size_t>(iz) * h + iy) * w + ix) * ci;
              const double* kv = kd_ + ((static_cast<std::size_t>(kz) * 3 + ky) * 3 + kx) * ci * co;
              for (int c_in = 0; c_in < ci; ++c_in) {
                const double val = iv[c_in];
                const double* krow = kv + static_cast<std::size_t>(c_in) * co;
                for (int c = 0; c < co; ++c) o[c] += val * krow[c];
              }
            }
          }
        }
      }
}

inline void conv3d_backward(const Tensor& in, const Tensor& kernel, const Tensor& d_out,
                            Tensor& d_in, Tensor& d_kernel, Tensor& d_bias) {
  const int d = in.dims[0], h = in.dims[1], w = in.dims[2], ci = in.dims[3];
  const int co = kernel.dims[4];
  d_in = Tensor(in.dims);
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double* dov =
            d_out.v.data() + ((static_cast<std::size_t>(z) * h + y) * w + x) * co;
        for (int c = 0; c < co; ++c) d_bias.v[c] += dov[c];
        for (int kz = 0; kz < 3; ++kz) {
          const int iz = z + kz - 1;
          if (iz < 0 || iz >= d) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= w) continue;
              const std::size_t in_base = ((static_cast<std::size_t>(iz) * h + iy) * w + ix) * ci;
              const std::size_t k_base = ((static_cast<std::size_t>(kz) * 3 + ky) * 3 + kx) * ci * co;
              for (int c_in = 0; c_in < ci; ++c_in) {
                const double in_val = in.v[in_base + c_in];
                const double* krow = kernel.v.data() + k_base + static_cast<std::size_t>(c_in) * co;
                double* dkrow = d_kernel.v.data() + k_base + static_cast<std::size_t>(c_in) * co;
                double acc = 0.0;
                for (int c = 0; c < co; ++c) {
                  dkrow[c] += in_val * dov[c];
                  acc += krow[c] * dov[c];
                }
                d_in.v[in_base + c_in] += acc;
              }
            }
          }
        }
      }
}

inline void relu_forward(Tensor& t) {
  for (double& x : t.v) x = x > 0.0 ? x : 0.0;
}

inline void relu_backward(const Tensor& activated, Tensor& grad) {
  for (std::size_t i = 0; i < grad.v.size(); ++i)
    if (activated.v[i] <= 0.0) grad.v[i] = 0.0;
}

// 2x2x2 max-pool, stride 2; edge windows may be partial.
inline void maxpool_forward(const Tensor& in, Tensor& out, std::vector<std::uint32_t>& argmax) {
  const int d = in.dims[0], h = in.dims[1], w = in.dims[2], c = in.dims[3];
  const int od = ModelShape::pooled(d), oh = ModelShape::pooled(h), ow = ModelShape::pooled(w);
  out = Tensor({od, oh, ow, c});
  argmax.assign(out.size(), 0);
  for (int z = 0; z < od; ++z)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          std::uint32_t best_idx = 0;
          for (int dz = 0; dz < 2; ++dz) {
            const int iz = 2 * z + dz;
            if (iz >= d) continue;
            for (int dy = 0; dy < 2; ++dy) {
              const int iy = 2 * y + dy;
              if (iy >= h) continue;
              for (int dx = 0; dx < 2; ++dx) {
                const int ix = 2 * x + dx;
                if (ix >= w) continue;
                const std::size_t idx =
                    ((static_cast<std::size_t>(iz) * h + iy) * w + ix) * c + ch;
                if (in.v[idx] > best) {
                  best = in.v[idx];
                  best_idx = static_cast<std::uint32_t>(idx);
                }
              }
            }
          }
          const std::size_t oidx = ((static_cast<std::size_t>(z) * oh + y) * ow + x) * c + ch;
          out.v[oidx] = best;
          argmax[oidx] = best_idx;
        }
}

inline void maxpool_backward(const Tensor& d_out, const std::vector<std::uint32_t>& argmax,
                             const std::vector<int>& in_dims, Tensor& d_in) {
  d_in = Tensor(in_dims);
  for (std::size_t i = 0; i < d_out.v.size(); ++i) d_in.v[argmax[i]] += d_out.v[i];
}

}  // namespace nn

struct ForwardCache {
  Tensor conv1, pool1, conv2, pool2;  // conv tensors hold post-ReLU activations
  std::vector<std::uint32_t> argmax1, argmax2;
  std::vector<double> hidden;  // post-ReLU dense(64) activations
  double logit = 0.0;
  double prob = 0.5;
};

inline ModelShape shape_for(const Tensor& video, const ModelParams& params) {
  if (video.dims.size() != 4 || video.dims[3] != ModelShape::kInputChannels)
    throw Error("forward: video tensor must be n x H x W x 3");
  ModelShape s;
  s.frames = video.dims[0];
  s.height = video.dims[1];
  s.width = video.dims[2];
  s.conv1_out = params.conv1_k.dims[4];
  s.conv2_out = params.conv2_k.dims[4];
  s.hidden = params.dense1_w.dims[1];
  if (params.dense1_w.dims[0] != s.flat_size())
    throw Error("forward: video shape does not match model (flatten size " +
                std::to_string(s.flat_size()) + " vs dense1 input " +
                std::to_string(params.dense1_w.dims[0]) + ")");
  return s;
}

// Eq. 9: sigmoid probability that the video's root user is a spammer.
inline double forward(const Tensor& video, const ModelParams& params,
                      ForwardCache* cache = nullptr) {
  const ModelShape s = shape_for(video, params);
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;

  nn::conv3d_forward(video, params.conv1_k, params.conv1_b, cc.conv1);
  nn::relu_forward(cc.conv1);
  check_finite(cc.conv1, "layer conv1");
  nn::maxpool_forward(cc.conv1, cc.pool1, cc.argmax1);
  nn::conv3d_forward(cc.pool1, params.conv2_k, params.conv2_b, cc.conv2);
  nn::relu_forward(cc.conv2);
  check_finite(cc.conv2, "layer conv2");
  nn::maxpool_forward(cc.conv2, cc.pool2, cc.argmax2);

  const int flat = s.flat_size();
  const int hidden = s.hidden;
  cc.hidden.assign(hidden, 0.0);
  for (int j = 0; j < hidden; ++j) cc.hidden[j] = params.dense1_b.v[j];
  for (int i = 0; i < flat; ++i) {
    const double xi = cc.pool2.v[i];
    if (xi == 0.0) continue;
    const double* wrow = params.dense1_w.v.data() + static_cast<std::size_t>(i) * hidden;
    for (int j = 0; j < hidden; ++j) cc.hidden[j] += xi * wrow[j];
  }
  for (double& hj : cc.hidden) hj = hj > 0.0 ? hj : 0.0;

  double logit = params.dense2_b.v[0];
  for (int j = 0; j < hidden; ++j) logit += params.dense2_w.v[j] * cc.hidden[j];
  if (!std::isfinite(logit)) throw Error("non-finite value in layer dense2");
  cc.logit = logit;
  cc.prob = sigmoid(logit);
  return cc.prob;
}

inline constexpr double kProbClamp = 1e-7;

inline double bce_loss(double prob, int label) {
  const double p = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Accumulates gradients of bce_loss(forward(video), label) into `grads`.
// Returns the sample loss.
inline double backward(const Tensor& video, int label, const ModelParams& params,
                       Gradients& grads) {
  ForwardCache cc;
  forward(video, params, &cc);
  const ModelShape s = shape_for(video, params);
  const double loss = bce_loss(cc.prob, label);

  // d(loss)/d(logit); zero when the clamp is active.
  double dlogit = 0.0;
  if (cc.prob > kProbClamp && cc.prob < 1.0 - kProbClamp)
    dlogit = cc.prob - static_cast<double>(label);

  const int hidden = s.hidden;
  const int flat = s.flat_size();
  grads.dense2_b.v[0] += dlogit;
  std::vector<double> d_hidden(hidden);
  for (int j = 0; j < hidden; ++j) {
    grads.dense2_w.v[j] += dlogit * cc.hidden[j];
    d_hidden[j] = cc.hidden[j] > 0.0 ? dlogit * params.dense2_w.v[j] : 0.0;
  }

  Tensor d_pool2(cc.pool2.dims);
  for (int j = 0; j < hidden; ++j) grads.dense1_b.v[j] += d_hidden[j];
  for (int i = 0; i < flat; ++i) {
    const double xi = cc.pool2.v[i];
    double* dwrow = grads.dense1_w.v.data() + static_cast<std::size_t>(i) * hidden;
    const double* wrow = params.dense1_w.v.data() + static_cast<std::size_t>(i) * hidden;
    double acc = 0.0;
    for (int j = 0; j < hidden; ++j) {
      dwrow[j] += xi * d_hidden[j];
      acc += wrow[j] * d_hidden[j];
    }
    d_pool2.v[i] = acc;
  }

  Tensor d_conv2;
  nn::maxpool_backward(d_pool2, cc.argmax2, cc.conv2.dims, d_conv2);
  nn::relu_backward(cc.conv2, d_conv2);
  check_finite(d_conv2, "backward through layer conv2");
  Tensor d_pool1;
  nn::conv3d_backward(cc.pool1, params.conv2_k, d_conv2, d_pool1, grads.conv2_k,
                      grads.conv2_b);
  Tensor d_conv1;
  nn::maxpool_backward(d_pool1, cc.argmax1, cc.conv1.dims, d_conv1);
  nn::relu_backward(cc.conv1, d_conv1);
  check_finite(d_conv1, "backward through layer conv1");
  Tensor d_input;
  nn::conv3d_backward(video, params.conv1_k, d_conv1, d_input, grads.conv1_k,
                      grads.conv1_b);
  return loss;
}

inline Tensor video_to_tensor(const UserVideo& video) {
  if (video.frames.empty()) throw Error("video_to_tensor: empty video");
  const int n = static_cast<int>(video.frames.size());
  const int h = video.frames[0].height;
  const int w = video.frames[0].width;
  Tensor t({n, h, w, 3});
  std::size_t k = 0;
  for (const auto& f : video.frames)
    for (float x : f.data) t.v[k++] = static_cast<double>(x);
  return t;
}

inline std::pair<double, int> predict(const ModelParams& params, const Tensor& video) {
  const double score = forward(video, params);
  return {score, score >= 0.5 ? 1 : 0};
}

// Model checkpoint: header {magic "UVSM", version u32}, then per-tensor
// {u32 name length, name, u32 rank, u32 dims, float64 values}.
inline void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out.write("UVSM", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  for (const auto& [name, tensor] : params.named()) {
    const auto len = static_cast<std::uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(name.data(), len);
    const auto rank = static_cast<std::uint32_t>(tensor->dims.size());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int d : tensor->dims) {
      const auto du = static_cast<std::uint32_t>(d);
      out.write(reinterpret_cast<const char*>(&du), 4);
    }
    out.write(reinterpret_cast<const char*>(tensor->v.data()),
              static_cast<std::streamsize>(tensor->v.size() * sizeof(double)));
  }
  if (!out) throw Error("I/O failure while writing '" + path + "'");
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || std::memcmp(magic, "UVSM", 4) != 0 || version != 1)
    throw Error("'" + path + "' is not a UVSM v1 model file");
  ModelParams params;
  auto slots = params.named();
  for (auto& [name, tensor] : slots) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string got(len, '\0');
    in.read(got.data(), len);
    if (!in || got != name)
      throw Error("'" + path + "': expected tensor '" + name + "', found '" + got + "'");
    std::uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    std::vector<int> dims(rank);
    for (auto& d : dims) {
      std::uint32_t du = 0;
      in.read(reinterpret_cast<char*>(&du), 4);
      d = static_cast<int>(du);
    }
    *tensor = Tensor(dims);
    in.read(reinterpret_cast<char*>(tensor->v.data()),
            static_cast<std::streamsize>(tensor->v.size() * sizeof(double)));
    if (!in) throw Error("'" + path + "' is truncated");
  }
  return params;
}

}  // namespace uvsd
