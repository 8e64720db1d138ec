#pragma once

#include "interedit/motion_repr.hpp"

#include <string>
#include <vector>

namespace interedit::plot {

enum class View { Front, Top };

/// Writes one SVG per `stride` frames (frame_0000.svg, ...) with both skeletons projected to
/// 2D. Returns the written paths.
std::vector<std::string> write_svg_frames(const motion::TwoPersonSequence& seq, const motion::Skeleton& skeleton,
                                          const std::string& directory, int stride = 1, View view = View::Front);

}  // namespace interedit::plot
