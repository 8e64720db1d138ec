#pragma once

#include "interedit/common.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace interedit::motion {

/// Kinematic tree shared by both persons of a sequence.
struct Skeleton {
  int joint_count = 22;
  std::vector<int> parents;           // parents[0] == -1
  std::array<int, 4> foot_joints{};   // left heel, left toe, right heel, right toe
  int left_hip = 1;
  int right_hip = 2;
  int left_shoulder = 16;
  int right_shoulder = 17;

  /// 22-joint SMPL/InterHuman ordering (pelvis, hips, spine, knees, ... wrists).
  static Skeleton interhuman22();
  /// Simple serial chain 0-1-2-...; hips/feet mapped onto the first joints.
  static Skeleton chain(int joint_count);

  /// Throws Error if the parent graph is not a tree rooted at 0 or an index is out of range.
  void validate() const;
};

/// Channel bookkeeping for one person's per-frame feature vector
/// [positions 3N | velocities 3N | 6D rotations 6N | contacts 4].
struct FeatureLayout {
  int joints = 22;

  int person_width() const { return 12 * joints + 4; }
  int stripped_width() const { return 12 * joints; }
  int position_offset() const { return 0; }
  int velocity_offset() const { return 3 * joints; }
  int rotation_offset() const { return 6 * joints; }
  int contact_offset() const { return 12 * joints; }
  int sequence_width() const { return 2 * person_width(); }
};

struct MotionState {
  Vec positions;    // 3N, meters, world frame
  Vec velocities;   // 3N, meters per frame
  Vec rotations;    // 6N, first two columns of each joint's rotation in the root frame
  std::array<double, 4> contacts{};
};

struct TwoPersonSequence {
  std::vector<MotionState> person_a;
  std::vector<MotionState> person_b;
  double fps = 30.0;
  std::string scenario_id;
  std::string clip_id;

  int length() const { return static_cast<int>(person_a.size()); }
  int joint_count() const;
  /// Throws if the persons differ in length, L < 2, or frame widths disagree.
  void validate() const;
};

/// Identifies a contiguous window [start_frame, end_frame) of a corpus clip.
struct WindowRef {
  std::string clip_id;
  int window_index = 0;
  int start_frame = 0;
  int end_frame = 0;

  bool operator==(const WindowRef&) const = default;
};

struct Provenance {
  std::string kind;          // "synthetic" or "mined"
  std::string scenario_id;
  std::string group;         // interaction identity used for disjoint splits
  WindowRef source;
  WindowRef target;
  double similarity = 0.0;

  /// "synthetic:<scenario_id>" or "mined:<clip>#<win> -> <clip>#<win> (sim)".
  std::string describe() const;
};

struct EditTriplet {
  TwoPersonSequence source;
  TwoPersonSequence target;
  std::string instruction;
  Provenance provenance;

  /// Checks the triplet contract against a window-length cap (instruction must be non-empty).
  void validate(int max_length) const;
};

struct DatasetStats {
  Vec mean;
  Vec std;
  static constexpr double kStdFloor = 1e-6;
};

/// Foot-contact heuristic thresholds. Speed threshold is given for 30 fps and scaled by 30/fps.
struct ContactParams {
  double speed_at_30fps = 0.002;
  double max_height = 0.08;
};

using JointPositions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<MotionState> build_motion_state(std::span<const JointPositions> frames,
                                            const Skeleton& skeleton, double fps,
                                            const ContactParams& contact = {});

Mat flatten(const TwoPersonSequence& seq);
TwoPersonSequence unflatten(const Mat& features, int joint_count, double fps = 30.0);

/// Drops the 4 contact channels of each person: L x 2(12N+4) -> L x 2(12N).
Mat strip_contacts(const Mat& features, int joint_count);
Mat strip_contacts(const TwoPersonSequence& seq);
/// Contact channels of both persons, L x 8 (A's four, then B's four).
Mat extract_contacts(const Mat& features, int joint_count);
Mat reinsert_contacts(const Mat& stripped, const Mat& contacts, int joint_count);

Vec bone_lengths(const Vec& positions, const Skeleton& skeleton);
inline Vec bone_lengths(const MotionState& state, const Skeleton& skeleton) {
  return bone_lengths(state.positions, skeleton);
}

/// Per-channel moments over all frames of the given flattened sequences.
DatasetStats fit_stats(std::span<const Mat> split);
Mat normalize(const Mat& features, const DatasetStats& stats);
Mat denormalize(const Mat& features, const DatasetStats& stats);

/// Gram-Schmidt completion of a 6D rotation block into a 3x3 rotation matrix.
Eigen::Matrix3d rotation_from_6d(const Eigen::Matrix<double, 6, 1>& block);

/// Copies frames [start, end) of a sequence, keeping provenance ids.
TwoPersonSequence slice(const TwoPersonSequence& seq, int start, int end);

}  // namespace interedit::motion
