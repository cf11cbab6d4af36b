// uvsd: spammer detection by turning user behavior graphs into videos.
//
// Subcommands: synth, imageize, train, eval, sweep, export-frames.
// Errors are reported as one JSON object on stderr and a nonzero exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uvsd/cnn.hpp"
#include "uvsd/datasets.hpp"
#include "uvsd/graph.hpp"
#include "uvsd/image_io.hpp"
#include "uvsd/metrics.hpp"
#include "uvsd/pipeline.hpp"
#include "uvsd/train.hpp"
#include "uvsd/video.hpp"

namespace {

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool verbose = false;
};

uvsd::PipelineConfig resolve_config(const std::string& path, const GlobalOpts& opts) {
  uvsd::PipelineConfig config = path.empty() ? uvsd::PipelineConfig{} : uvsd::load_config(path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.threads) config.threads = *opts.threads;
  config.validate();
  return config;
}

void log_note(const GlobalOpts& opts, const std::string& msg) {
  if (opts.verbose) std::cerr << "uvsd: " << msg << "\n";
}

void report_failures(const GlobalOpts& opts, const uvsd::PipelineOutput& out) {
  for (const auto& [index, reason] : out.failures)
    std::cerr << "uvsd: graph #" << index << " skipped: " << reason << "\n";
  log_note(opts, std::to_string(out.videos.size()) + " videos produced, " +
                     std::to_string(out.failures.size()) + " graphs skipped");
}

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw uvsd::Error("no fractions given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UVSD: user-videoization spammer detection pipeline"};
  app.require_subcommand(1);

  GlobalOpts opts;
  std::uint64_t seed_arg = 0;
  int threads_arg = 0;
  app.add_option("--seed", seed_arg, "Override the config seed")
      ->each([&](const std::string&) { opts.seed = seed_arg; });
  app.add_option("--threads", threads_arg, "Worker threads for graph-level stages")
      ->each([&](const std::string&) { opts.threads = threads_arg; });
  app.add_flag("--verbose", opts.verbose, "Log progress to stderr");

  std::string config_path, in_path, out_path, videos_dir, model_path, report_path,
      video_path, fractions_csv;

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  synth->add_option("--config", config_path, "Pipeline config JSON");
  synth->add_option("--out", out_path, "Output JSONL path")->required();

  auto* imageize = app.add_subcommand("imageize", "Turn behavior graphs into user videos");
  imageize->add_option("--config", config_path, "Pipeline config JSON");
  imageize->add_option("--in", in_path, "Input dataset JSONL")->required();
  imageize->add_option("--out", videos_dir, "Output videos directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the video classifier");
  train_cmd->add_option("--config", config_path, "Pipeline config JSON");
  train_cmd->add_option("--videos", videos_dir, "Videos directory")->required();
  train_cmd->add_option("--out", model_path, "Output model checkpoint")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on labeled videos");
  eval_cmd->add_option("--config", config_path, "Pipeline config JSON");
  eval_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  eval_cmd->add_option("--videos", videos_dir, "Videos directory")->required();
  eval_cmd->add_option("--report", report_path, "Output report JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "Train/evaluate across SBP fractions");
  sweep->add_option("--config", config_path, "Pipeline config JSON");
  sweep->add_option("--in", in_path, "Input dataset JSONL (default: synthesize)");
  sweep->add_option("--fractions", fractions_csv, "Comma-separated SBP fractions")->required();
  sweep->add_option("--report", report_path, "Output report JSON");

  auto* export_frames = app.add_subcommand("export-frames", "Write a video's frames as PPM+PNG");
  export_frames->add_option("--video", video_path, "A .uvsd video tensor file")->required();
  export_frames->add_option("--out", out_path, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto config = resolve_config(config_path, opts);
      uvsd::SynthConfig sc = config.synth;
      sc.seed = config.seed;
      const auto graphs = uvsd::generate_synthetic(sc);
      uvsd::save_dataset(graphs, out_path);
      log_note(opts, "wrote " + std::to_string(graphs.size()) + " graphs to " + out_path);
    } else if (imageize->parsed()) {
      auto config = resolve_config(config_path, opts);
      const auto graphs = uvsd::load_dataset(in_path);
      const auto output = uvsd::run_pipeline(config, graphs);
      report_failures(opts, output);
      uvsd::save_videos(output.videos, videos_dir);
      log_note(opts, "wrote videos to " + videos_dir);
    } else if (train_cmd->parsed()) {
      auto config = resolve_config(config_path, opts);
      const auto videos = uvsd::load_videos(videos_dir);
      const auto result = uvsd::train_on_videos(videos, config);
      uvsd::save_model(result.params, model_path);
      log_note(opts, "best validation loss " +
                         std::to_string(result.val_losses[result.best_epoch - 1]) +
                         " at epoch " + std::to_string(result.best_epoch) + " of " +
                         std::to_string(result.epochs_run));
    } else if (eval_cmd->parsed()) {
      auto config = resolve_config(config_path, opts);
      const auto videos = uvsd::load_videos(videos_dir);
      const auto params = uvsd::load_model(model_path);
      const auto report =
          uvsd::evaluate_model(params, videos, config.sbp, config.threads);
      std::ofstream out(report_path);
      if (!out) throw uvsd::Error("cannot write report '" + report_path + "'");
      out << uvsd::report_to_json(report).dump(2) << "\n";
      std::cout << uvsd::report_to_json(report).dump() << "\n";
    } else if (sweep->parsed()) {
      auto config = resolve_config(config_path, opts);
      const auto fractions = parse_fractions(fractions_csv);
      std::vector<uvsd::BehaviorGraph> graphs;
      if (!in_path.empty()) {
        graphs = uvsd::load_dataset(in_path);
      } else {
        uvsd::SynthConfig sc = config.synth;
        sc.seed = config.seed;
        graphs = uvsd::generate_synthetic(sc);
      }
      const auto reports = uvsd::sweep_sbp(config, graphs, fractions);
      nlohmann::json out_json = nlohmann::json::array();
      for (const auto& r : reports) out_json.push_back(uvsd::report_to_json(r));
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw uvsd::Error("cannot write report '" + report_path + "'");
        out << out_json.dump(2) << "\n";
      }
      std::cout << out_json.dump() << "\n";
    } else if (export_frames->parsed()) {
      const auto video = uvsd::load_video(video_path);
      std::filesystem::create_directories(out_path);
      for (std::size_t i = 0; i < video.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu", i);
        const auto base = (std::filesystem::path(out_path) / name).string();
        uvsd::write_ppm(video.frames[i], base + ".ppm");
        uvsd::write_png(video.frames[i], base + ".png");
      }
      log_note(opts, "wrote " + std::to_string(video.frames.size()) + " frames to " + out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
