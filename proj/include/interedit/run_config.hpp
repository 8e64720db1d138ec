#pragma once

#include "interedit/data_pipeline.hpp"
#include "interedit/denoiser.hpp"
#include "interedit/diffusion.hpp"
#include "interedit/training.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace interedit {

struct SynthSettings {
  int triplets = 200;
  int length = 200;
  double fps = 30.0;
  int clips_per_label = 4;  // corpus clips per scenario label for mining
  int clip_length = 400;
};

struct PipelineSettings {
  int window = 200;
  double overlap = 0.5;
  int top_k = 2;
  pipeline::SimilarityBand band;
  pipeline::SplitRatios split;
};

struct EncoderSettings {
  std::uint64_t text_seed = 101;
  std::uint64_t teacher_seed = 202;
  int teacher_segments = 4;
  int retrieval_dim = 64;
  std::uint64_t retrieval_seed = 303;
};

struct EvalSettings {
  int runs = 20;
};

/// Every tunable of the tool in one place. Defaults follow the published setup; the desk
/// preset swaps in a CPU-sized model and schedule.
struct RunConfig {
  ModelConfig model;
  SamplerConfig sampler;
  TrainConfig train;
  SynthSettings synth;
  PipelineSettings pipeline;
  EncoderSettings encoders;
  EvalSettings eval;
  std::uint64_t seed = 0;
  std::string preset = "paper";

  static RunConfig paper();
  static RunConfig desk();
  static RunConfig from_preset(const std::string& name);

  /// Applies one `section.key=value` assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Reads a flat key=value file ('#' starts a comment) and applies each line in order.
  std::vector<std::pair<std::string, std::string>> apply_file(const std::string& path);
  /// All keys with their current values, in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string dump() const;
  void validate() const;
};

}  // namespace interedit
