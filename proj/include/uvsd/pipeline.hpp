#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvsd/cnn.hpp"
#include "uvsd/datasets.hpp"
#include "uvsd/graph.hpp"
#include "uvsd/metrics.hpp"
#include "uvsd/parallel.hpp"
#include "uvsd/pixelizer.hpp"
#include "uvsd/rasterizer.hpp"
#include "uvsd/rng.hpp"
#include "uvsd/skipgram.hpp"
#include "uvsd/train.hpp"
#include "uvsd/tsne.hpp"
#include "uvsd/types.hpp"
#include "uvsd/video.hpp"
#include "uvsd/walks.hpp"

namespace uvsd {

struct PipelineConfig {
  PixelizerConfig pixel;
  WalkConfig walk;
  EmbeddingConfig sg;
  TsneConfig tsne;
  RasterConfig raster;
  TrainConfig train;
  SynthConfig synth;
  int video_length = 8;
  int delta_n = 6400;
  double sbp = 1.0;
  double split_ratio = 0.8;
  double val_fraction = 0.2;  // share of the training pool held out for early stopping
  std::uint64_t seed = 0;
  int threads = 1;
  std::string input;
  std::string output;

  void validate() const {
    if (delta_n < 1) throw Error("config: delta_n must be >= 1");
    if (!(sbp > 0.0 && sbp <= 1.0)) throw Error("config: sbp must be in (0,1]");
    if (video_length < 1) throw Error("config: video.length must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
      throw Error("config: split_ratio must be in (0,1)");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
      throw Error("config: train.val_fraction must be in (0,1)");
    if (pixel.fans_threshold < 1) throw Error("config: fans_threshold must be >= 1");
    if (!(pixel.psi >= 0.0 && pixel.psi <= 1.0)) throw Error("config: psi must be in [0,1]");
    if (!(walk.p > 0) || !(walk.q > 0)) throw Error("config: walk.p and walk.q must be > 0");
    if (walk.walk_length < 2) throw Error("config: walk.length must be >= 2");
    if (walk.walks_per_node < 1) throw Error("config: walk.per_node must be >= 1");
    if (sg.dim < 2) throw Error("config: sg.dim must be >= 2");
    if (sg.window < 1 || sg.negatives < 1)
      throw Error("config: sg.window and sg.negatives must be >= 1");
    if (!(tsne.perplexity >= 2)) throw Error("config: tsne.perplexity must be >= 2");
    if (tsne.iterations < 250) throw Error("config: tsne.iterations must be >= 250");
    if (!(raster.gamma > 0)) throw Error("config: raster.gamma must be > 0");
    if (raster.canvas < 1) throw Error("config: raster.canvas must be >= 1");
    if (!(raster.brightness_cap > 0)) throw Error("config: raster.brightness_cap must be > 0");
    if (!(raster.min_visible > 0.0 && raster.min_visible <= 1.0))
      throw Error("config: raster.min_visible must be in (0,1]");
  }
};

// Flat JSON object with dotted keys, e.g. {"walk.p": 0.5, "sg.dim": 64}.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).template get<std::decay_t<decltype(slot)>>();
  };
  get("seed", c.seed);
  get("threads", c.threads);
  get("delta_n", c.delta_n);
  get("sbp", c.sbp);
  get("split_ratio", c.split_ratio);
  get("input", c.input);
  get("output", c.output);
  get("fans_threshold", c.pixel.fans_threshold);
  get("psi", c.pixel.psi);
  get("walk.p", c.walk.p);
  get("walk.q", c.walk.q);
  get("walk.length", c.walk.walk_length);
  get("walk.per_node", c.walk.walks_per_node);
  get("sg.dim", c.sg.dim);
  get("sg.window", c.sg.window);
  get("sg.negatives", c.sg.negatives);
  get("sg.epochs", c.sg.epochs);
  get("sg.learning_rate", c.sg.learning_rate);
  get("tsne.perplexity", c.tsne.perplexity);
  get("tsne.iterations", c.tsne.iterations);
  get("tsne.learning_rate", c.tsne.learning_rate);
  get("raster.gamma", c.raster.gamma);
  get("raster.canvas", c.raster.canvas);
  get("raster.brightness_cap", c.raster.brightness_cap);
  get("raster.min_visible", c.raster.min_visible);
  get("video.length", c.video_length);
  get("train.learning_rate", c.train.learning_rate);
  get("train.epochs", c.train.epochs);
  get("train.batch_size", c.train.batch_size);
  get("train.patience", c.train.patience);
  get("train.beta1", c.train.adam_beta1);
  get("train.beta2", c.train.adam_beta2);
  get("train.eps", c.train.adam_eps);
  get("train.val_fraction", c.val_fraction);
  get("synth.users", c.synth.num_users);
  get("synth.spammer_fraction", c.synth.spammer_fraction);
  get("synth.nodes_per_graph", c.synth.nodes_per_graph);
  get("synth.spammer_pos_rate", c.synth.spammer_pos_rate);
  get("synth.normal_pos_rate", c.synth.normal_pos_rate);
  get("synth.burstiness", c.synth.spammer_burstiness);
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return config_from_json(j);
}

// Keeps the earliest `sbp` fraction of nodes (by firstActiveAt, ties by id)
// and the edges among them.
inline BehaviorGraph truncate_sbp(const BehaviorGraph& g, double sbp) {
  if (!(sbp > 0.0 && sbp <= 1.0)) throw Error("sbp must be in (0,1]");
  const auto order = temporal_order(g);
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(sbp * static_cast<double>(order.size()))),
      std::size_t{1}, order.size());
  std::vector<std::size_t> prefix(order.begin(), order.begin() + keep);
  return induced_subgraph(g, prefix);
}

// behavior2image for one normalized slice: biased walks, skip-gram, t-SNE,
// grid cutting, clockwise diffusion, then pixel assignment.
inline FrameImage imageize_slice(const NormalizedSubgraph& norm, const PipelineConfig& config,
                                 std::uint64_t slice_seed) {
  WalkGraph graph(norm);
  WalkConfig wc = config.walk;
  wc.seed = mix_seed(slice_seed, 1);
  const auto walks = generate_walks(graph, wc);

  EmbeddingConfig ec = config.sg;
  ec.seed = mix_seed(slice_seed, 2);
  const auto sg = train_skipgram(walks, graph.node_count(), ec);

  TsneConfig tc = config.tsne;
  tc.seed = mix_seed(slice_seed, 3);
  const auto tsne = tsne_2d(sg.embeddings, tc);

  const auto extents = bounding_extents(tsne.coords);
  const double cut = cut_distance(extents[0], extents[1], graph.node_count(),
                                  config.raster.gamma);
  GridLayout grid = assign_grid(tsne.coords, cut);
  grid = diffuse(grid, mix_seed(slice_seed, 4));

  std::unordered_map<std::string, const UserNode*> by_id;
  for (const auto& n : norm.nodes) by_id.emplace(n.id, &n);
  std::vector<UserPixel> pixels(graph.node_count());
  for (std::uint32_t v = 0; v < graph.node_count(); ++v)
    pixels[v] = pixelize_user(*by_id.at(graph.id(v)), config.pixel);
  return render_frame(grid, pixels, config.raster);
}

// Algorithm-1 composition for one root user.
inline UserVideo videoize_graph(const BehaviorGraph& g, const PipelineConfig& config) {
  const std::uint64_t graph_seed = mix_seed(config.seed, hash_str(g.root_user));
  const BehaviorGraph truncated = truncate_sbp(g, config.sbp);
  const SubgraphSequence seq = time_slice(truncated, config.delta_n);
  const auto norms = normalize_sequence(seq);
  std::vector<FrameImage> frames;
  frames.reserve(norms.size());
  for (std::size_t k = 0; k < norms.size(); ++k)
    frames.push_back(imageize_slice(norms[k], config, mix_seed(graph_seed, 0x50 + k)));
  UserVideo video = assemble_video(frames, config.video_length);
  video.root_user = g.root_user;
  video.label = g.label;
  return video;
}

struct PipelineOutput {
  std::vector<UserVideo> videos;
  std::vector<std::pair<std::size_t, std::string>> failures;  // (input index, reason)
};

// Per-graph failures are collected, not fatal; throws only if every graph
// failed or the config is invalid.
inline PipelineOutput run_pipeline(const PipelineConfig& config,
                                   const std::vector<BehaviorGraph>& graphs) {
  config.validate();
  if (graphs.empty()) throw Error("run_pipeline: no input graphs");
  std::vector<UserVideo> slots(graphs.size());
  std::vector<std::string> errors(graphs.size());
  parallel_for(graphs.size(), config.threads, [&](std::size_t i) {
    try {
      slots[i] = videoize_graph(graphs[i], config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });
  PipelineOutput out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (errors[i].empty())
      out.videos.push_back(std::move(slots[i]));
    else
      out.failures.emplace_back(i, errors[i]);
  }
  if (out.videos.empty()) throw Error("run_pipeline: all graphs failed");
  return out;
}

namespace detail {

inline std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

}  // namespace detail

// Videos directory layout: one .uvsd tensor file per root user plus an
// index.json carrying root ids and labels.
inline void save_videos(const std::vector<UserVideo>& videos, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json index;
  auto& list = index["videos"] = nlohmann::json::array();
  for (std::size_t i = 0; i < videos.size(); ++i) {
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "v%05zu_", i);
    const std::string file = prefix + detail::sanitize_filename(videos[i].root_user) + ".uvsd";
    save_video(videos[i], (fs::path(dir) / file).string());
    nlohmann::json entry{{"file", file}, {"root", videos[i].root_user}};
    if (videos[i].label)
      entry["label"] = *videos[i].label;
    else
      entry["label"] = nullptr;
    list.push_back(std::move(entry));
  }
  std::ofstream out(fs::path(dir) / "index.json");
  if (!out) throw Error("cannot write index.json in '" + dir + "'");
  out << index.dump(2) << "\n";
}

inline std::vector<UserVideo> load_videos(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "index.json");
  if (!in) throw Error("cannot open '" + dir + "/index.json'");
  nlohmann::json index;
  try {
    in >> index;
  } catch (const std::exception& e) {
    throw Error(dir + "/index.json: " + e.what());
  }
  std::vector<UserVideo> videos;
  for (const auto& entry : index.at("videos")) {
    UserVideo v = load_video((fs::path(dir) / entry.at("file").get<std::string>()).string());
    v.root_user = entry.at("root").get<std::string>();
    if (entry.contains("label") && !entry.at("label").is_null())
      v.label = entry.at("label").get<int>();
    videos.push_back(std::move(v));
  }
  if (videos.empty()) throw Error("'" + dir + "' contains no videos");
  return videos;
}

inline std::vector<Sample> samples_from_videos(const std::vector<UserVideo>& videos) {
  std::vector<Sample> samples;
  samples.reserve(videos.size());
  for (const auto& v : videos) {
    if (!v.label) throw Error("video for '" + v.root_user + "' has no label");
    samples.push_back(Sample{video_to_tensor(v), *v.label});
  }
  return samples;
}

inline ModelShape shape_of_videos(const std::vector<UserVideo>& videos) {
  ModelShape shape;
  shape.frames = static_cast<int>(videos.at(0).frames.size());
  shape.height = videos.at(0).frames.at(0).height;
  shape.width = videos.at(0).frames.at(0).width;
  for (const auto& v : videos)
    if (static_cast<int>(v.frames.size()) != shape.frames ||
        v.frames.at(0).height != shape.height || v.frames.at(0).width != shape.width)
      throw Error("videos do not share one tensor shape");
  return shape;
}

// Trains on the given videos, holding out a stratified val_fraction share for
// early stopping.
inline TrainResult train_on_videos(const std::vector<UserVideo>& videos,
                                   const PipelineConfig& config) {
  const auto samples = samples_from_videos(videos);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  auto [fit_idx, val_idx] =
      split_indices(labels, 1.0 - config.val_fraction, mix_seed(config.seed, 0xE5));
  std::vector<Sample> fit_set, val_set;
  for (std::size_t i : fit_idx) fit_set.push_back(samples[i]);
  for (std::size_t i : val_idx) val_set.push_back(samples[i]);
  TrainConfig tc = config.train;
  tc.seed = mix_seed(config.seed, 0x7A11);
  tc.threads = config.threads;
  return train(fit_set, val_set, shape_of_videos(videos), tc);
}

inline EvalReport evaluate_model(const ModelParams& params,
                                 const std::vector<UserVideo>& videos, double sbp,
                                 int threads = 1) {
  const auto samples = samples_from_videos(videos);
  std::vector<double> scores(samples.size(), 0.0);
  std::vector<int> labels(samples.size(), 0);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    scores[i] = forward(samples[i].video, params);
  });
  for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
  return evaluate_scores(scores, labels, sbp);
}

// Trains and evaluates once per SBP fraction with shared seeds.
inline std::vector<EvalReport> sweep_sbp(const PipelineConfig& config,
                                         const std::vector<BehaviorGraph>& graphs,
                                         const std::vector<double>& fractions) {
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw Error("sweep: fractions must be in (0,1]");
  std::vector<EvalReport> reports;
  for (double f : fractions) {
    PipelineConfig cfg = config;
    cfg.sbp = f;
    const auto output = run_pipeline(cfg, graphs);
    std::vector<int> labels;
    for (const auto& v : output.videos) {
      if (!v.label) throw Error("sweep: video for '" + v.root_user + "' has no label");
      labels.push_back(*v.label);
    }
    auto [train_idx, test_idx] =
        split_indices(labels, cfg.split_ratio, mix_seed(cfg.seed, 0x3B));
    std::vector<UserVideo> train_videos, test_videos;
    for (std::size_t i : train_idx) train_videos.push_back(output.videos[i]);
    for (std::size_t i : test_idx) test_videos.push_back(output.videos[i]);
    const TrainResult trained = train_on_videos(train_videos, cfg);
    reports.push_back(evaluate_model(trained.params, test_videos, f, cfg.threads));
  }
  return reports;
}

}  // namespace uvsd
