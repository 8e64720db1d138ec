#pragma once

#include "interedit/motion_repr.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace interedit::motion {

/// On-disk layout (all integers u32, all samples f32, little-endian):
///
///   triplet file : "IETR" version count { instruction provenance-json source target }*
///   sequence file: "IESQ" version sequence
///   sequence     : joint_count length fps scenario_id clip_id samples[length * 2(12N+4)]
///   string       : byte_count bytes
///
/// Samples are stored as 32-bit floats, so a save/load round trip rounds to float precision.
inline constexpr std::uint32_t kMotionFormatVersion = 1;

void save_triplets(const std::string& path, const std::vector<EditTriplet>& triplets);
std::vector<EditTriplet> load_triplets(const std::string& path);

void save_sequence(const std::string& path, const TwoPersonSequence& seq);
TwoPersonSequence load_sequence(const std::string& path);

std::string provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const std::string& text);

}  // namespace interedit::motion
