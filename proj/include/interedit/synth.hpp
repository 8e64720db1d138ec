#pragma once

#include "interedit/motion_repr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace interedit::synth {

/// One catalog entry: a two-person interaction with two mutually exclusive variants.
/// The source of a triplet is always the variant not selected as the edit label.
struct Scenario {
  std::string id;
  std::string first_label;
  std::string second_label;
};

const std::vector<Scenario>& catalog();
const Scenario& find_scenario(const std::string& id);

struct SynthOptions {
  double fps = 30.0;
  motion::ContactParams contact{};
};

/// Deterministic in all arguments. Person B follows the same trajectory in source and target;
/// person A performs the two scenario variants. Both are expressed in B's first-frame frame:
/// B's root starts at the XZ origin facing +z.
motion::EditTriplet synth_generate(const std::string& scenario_id, const std::string& edit_label,
                                   int length, std::uint64_t seed, const SynthOptions& options = {});

/// A single rendered variant, used for corpus clips.
motion::TwoPersonSequence synth_clip(const std::string& scenario_id, const std::string& label,
                                     int length, std::uint64_t seed, const SynthOptions& options = {});

/// Templated edit text for moving to `label`; the template is picked by seed.
std::string instruction(const std::string& scenario_id, const std::string& label, std::uint64_t seed);

/// Joint positions of a standing person with default proportions, facing +z at the origin.
motion::JointPositions rest_pose(double scale = 1.0);

}  // namespace interedit::synth
