#pragma once

#include "interedit/autograd.hpp"
#include "interedit/denoiser.hpp"
#include "interedit/motion_repr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace interedit {

struct NamedArray {
  std::string name;
  Mat value;
};

/// Everything needed to resume training or to run inference. Arrays are stored as
/// float64, so save/load is bit exact.
struct CheckpointData {
  ModelConfig config;
  motion::DatasetStats stats;
  std::int64_t step = 0;
  std::string meta = "{}";  // free-form JSON object (encoder seeds, run settings)
  std::vector<NamedArray> params;
  std::vector<NamedArray> adam_m;
  std::vector<NamedArray> adam_v;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

std::vector<NamedArray> snapshot(const nn::ParameterStore& store);
/// Copies arrays into parameters by name; throws on a missing name or shape mismatch.
void restore(nn::ParameterStore& store, const std::vector<NamedArray>& arrays);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

}  // namespace interedit
