#include "interedit/motion_repr.hpp"

#include <cmath>
#include <sstream>

namespace interedit::motion {

Skeleton Skeleton::interhuman22() {
  Skeleton s;
  s.joint_count = 22;
  s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  s.foot_joints = {7, 10, 8, 11};
  s.left_hip = 1;
  s.right_hip = 2;
  s.left_shoulder = 16;
  s.right_shoulder = 17;
  return s;
}

Skeleton Skeleton::chain(int joint_count) {
  require(joint_count >= 3, "chain skeleton needs at least 3 joints");
  Skeleton s;
  s.joint_count = joint_count;
  s.parents.resize(joint_count);
  for (int i = 0; i < joint_count; ++i) s.parents[i] = i - 1;
  auto at = [&](int i) { return i % joint_count; };
  s.foot_joints = {at(1), at(2), at(3), at(4)};
  s.left_hip = at(1);
  s.right_hip = at(2);
  s.left_shoulder = at(3);
  s.right_shoulder = at(4);
  return s;
}

void Skeleton::validate() const {
  require(joint_count >= 1, "skeleton needs at least one joint");
  require(static_cast<int>(parents.size()) == joint_count, "parent table size != joint count");
  require(parents[0] == -1, "joint 0 must be the root");
  for (int j = 1; j < joint_count; ++j) {
    // Parents precede children, which rules out cycles and forests.
    require(parents[j] >= 0 && parents[j] < j, "parent of joint " + std::to_string(j) + " invalid");
  }
  for (int f : foot_joints) require(f >= 0 && f < joint_count, "foot joint index out of range");
  for (int h : {left_hip, right_hip, left_shoulder, right_shoulder})
    require(h >= 0 && h < joint_count, "landmark index out of range");
}

int TwoPersonSequence::joint_count() const {
  require(!person_a.empty(), "empty sequence");
  return static_cast<int>(person_a.front().positions.size() / 3);
}

void TwoPersonSequence::validate() const {
  require(person_a.size() == person_b.size(), "persons have different lengths");
  require(person_a.size() >= 2, "sequence must have at least 2 frames");
  const auto n = person_a.front().positions.size();
  require(n % 3 == 0 && n > 0, "position width must be a positive multiple of 3");
  for (const auto* person : {&person_a, &person_b}) {
    for (const auto& s : *person) {
      require_shape(s.positions.size() == static_cast<Eigen::Index>(n) &&
                        s.velocities.size() == static_cast<Eigen::Index>(n) &&
                        s.rotations.size() == static_cast<Eigen::Index>(2 * n),
                    "inconsistent frame width");
    }
  }
}

std::string Provenance::describe() const {
  std::ostringstream os;
  if (kind == "synthetic") {
    os << "synthetic:" << scenario_id;
  } else {
    os << kind << ":" << source.clip_id << "#" << source.window_index << " -> " << target.clip_id
       << "#" << target.window_index << " (" << similarity << ")";
  }
  return os.str();
}

void EditTriplet::validate(int max_length) const {
  source.validate();
  target.validate();
  require(source.length() <= max_length && target.length() <= max_length,
          "triplet longer than the configured window");
  require(instruction.find_first_not_of(" \t\r\n") != std::string::npos,
          "triplet instruction is empty");
}

namespace {

Eigen::Matrix3d root_frame(const JointPositions& p, const Skeleton& sk, const Eigen::Matrix3d& fallback) {
  Eigen::Vector3d across = p.row(sk.left_hip) - p.row(sk.right_hip);
  across.y() = 0.0;
  const double n = across.norm();
  if (n < 1e-9) return fallback;
  Eigen::Matrix3d r;
  const Eigen::Vector3d x = across / n;
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = x.cross(y);
  return r;
}

// Rotation whose second column is the bone direction; first column is the
// root-frame x axis made orthogonal to it.
Eigen::Matrix<double, 6, 1> bone_rotation_6d(const Eigen::Vector3d& dir_local) {
  Eigen::Vector3d d = dir_local;
  const double n = d.norm();
  d = n < 1e-12 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d(d / n);
  Eigen::Vector3d e = Eigen::Vector3d::UnitX();
  if (std::abs(e.dot(d)) > 0.99) e = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d a = (e - e.dot(d) * d).normalized();
  Eigen::Matrix<double, 6, 1> out;
  out << a, d;
  return out;
}

}  // namespace

std::vector<MotionState> build_motion_state(std::span<const JointPositions> frames,
                                            const Skeleton& skeleton, double fps,
                                            const ContactParams& contact) {
  skeleton.validate();
  const int length = static_cast<int>(frames.size());
  require(length >= 2, "build_motion_state needs at least 2 frames");
  require(fps > 0.0, "fps must be positive");
  const int nj = skeleton.joint_count;
  for (int l = 0; l < length; ++l) {
    require_shape(frames[l].rows() == nj, "frame joint count does not match skeleton");
    if (!frames[l].allFinite()) throw NonFiniteError("non-finite joint position", l);
  }

  const double speed_threshold = contact.speed_at_30fps * (30.0 / fps);
  std::vector<MotionState> out(length);
  Eigen::Matrix3d previous_root = Eigen::Matrix3d::Identity();
  for (int l = 0; l < length; ++l) {
    MotionState& s = out[l];
    s.positions = Eigen::Map<const Vec>(frames[l].data(), 3 * nj);

    JointPositions vel;
    if (l == 0) {
      vel = frames[1] - frames[0];
    } else if (l == length - 1) {
      vel = frames[l] - frames[l - 1];
    } else {
      vel = 0.5 * (frames[l + 1] - frames[l - 1]);
    }
    s.velocities = Eigen::Map<const Vec>(vel.data(), 3 * nj);

    const Eigen::Matrix3d root = root_frame(frames[l], skeleton, previous_root);
    previous_root = root;
    s.rotations.resize(6 * nj);
    s.rotations.segment<3>(0) = root.col(0);
    s.rotations.segment<3>(3) = root.col(1);
    for (int j = 1; j < nj; ++j) {
      const Eigen::Vector3d bone = (frames[l].row(j) - frames[l].row(skeleton.parents[j])).transpose();
      s.rotations.segment<6>(6 * j) = bone_rotation_6d(root.transpose() * bone);
    }

    for (int f = 0; f < 4; ++f) {
      const int j = skeleton.foot_joints[f];
      const double speed = vel.row(j).norm();
      const double height = frames[l](j, 1);
      s.contacts[f] = (speed < speed_threshold && height < contact.max_height) ? 1.0 : 0.0;
    }
  }
  return out;
}

namespace {

void write_state(const MotionState& s, const FeatureLayout& lay, double* row) {
  Eigen::Map<Vec> r(row, lay.person_width());
  r.segment(lay.position_offset(), 3 * lay.joints) = s.positions;
  r.segment(lay.velocity_offset(), 3 * lay.joints) = s.velocities;
  r.segment(lay.rotation_offset(), 6 * lay.joints) = s.rotations;
  for (int c = 0; c < 4; ++c) r[lay.contact_offset() + c] = s.contacts[c];
}

MotionState read_state(const double* row, const FeatureLayout& lay) {
  Eigen::Map<const Vec> r(row, lay.person_width());
  MotionState s;
  s.positions = r.segment(lay.position_offset(), 3 * lay.joints);
  s.velocities = r.segment(lay.velocity_offset(), 3 * lay.joints);
  s.rotations = r.segment(lay.rotation_offset(), 6 * lay.joints);
  for (int c = 0; c < 4; ++c) s.contacts[c] = r[lay.contact_offset() + c];
  return s;
}

}  // namespace

Mat flatten(const TwoPersonSequence& seq) {
  seq.validate();
  const FeatureLayout lay{seq.joint_count()};
  const int dm = lay.person_width();
  Mat out(seq.length(), 2 * dm);
  for (int l = 0; l < seq.length(); ++l) {
    write_state(seq.person_a[l], lay, out.row(l).data());
    write_state(seq.person_b[l], lay, out.row(l).data() + dm);
  }
  return out;
}

TwoPersonSequence unflatten(const Mat& features, int joint_count, double fps) {
  const FeatureLayout lay{joint_count};
  const int dm = lay.person_width();
  require_shape(features.cols() == 2 * dm,
                "feature width " + std::to_string(features.cols()) + " != " + std::to_string(2 * dm));
  TwoPersonSequence seq;
  seq.fps = fps;
  seq.person_a.reserve(features.rows());
  seq.person_b.reserve(features.rows());
  for (Eigen::Index l = 0; l < features.rows(); ++l) {
    seq.person_a.push_back(read_state(features.row(l).data(), lay));
    seq.person_b.push_back(read_state(features.row(l).data() + dm, lay));
  }
  return seq;
}

Mat strip_contacts(const Mat& features, int joint_count) {
  const FeatureLayout lay{joint_count};
  const int dm = lay.person_width();
  const int df = lay.stripped_width();
  require_shape(features.cols() == 2 * dm, "strip_contacts: width mismatch");
  Mat out(features.rows(), 2 * df);
  out.leftCols(df) = features.leftCols(df);
  out.rightCols(df) = features.middleCols(dm, df);
  return out;
}

Mat strip_contacts(const TwoPersonSequence& seq) {
  return strip_contacts(flatten(seq), seq.joint_count());
}

Mat extract_contacts(const Mat& features, int joint_count) {
  const FeatureLayout lay{joint_count};
  const int dm = lay.person_width();
  require_shape(features.cols() == 2 * dm, "extract_contacts: width mismatch");
  Mat out(features.rows(), 8);
  out.leftCols(4) = features.middleCols(lay.contact_offset(), 4);
  out.rightCols(4) = features.middleCols(dm + lay.contact_offset(), 4);
  return out;
}

Mat reinsert_contacts(const Mat& stripped, const Mat& contacts, int joint_count) {
  const FeatureLayout lay{joint_count};
  const int dm = lay.person_width();
  const int df = lay.stripped_width();
  require_shape(stripped.cols() == 2 * df && contacts.cols() == 8 && contacts.rows() == stripped.rows(),
                "reinsert_contacts: shape mismatch");
  Mat out(stripped.rows(), 2 * dm);
  out.leftCols(df) = stripped.leftCols(df);
  out.middleCols(df, 4) = contacts.leftCols(4);
  out.middleCols(dm, df) = stripped.rightCols(df);
  out.rightCols(4) = contacts.rightCols(4);
  return out;
}

Vec bone_lengths(const Vec& positions, const Skeleton& skeleton) {
  require_shape(positions.size() == 3 * skeleton.joint_count, "bone_lengths: width mismatch");
  Vec out(skeleton.joint_count - 1);
  for (int j = 1; j < skeleton.joint_count; ++j) {
    const int p = skeleton.parents[j];
    out[j - 1] = (positions.segment<3>(3 * j) - positions.segment<3>(3 * p)).norm();
  }
  return out;
}

DatasetStats fit_stats(std::span<const Mat> split) {
  require(!split.empty(), "fit_stats: empty split");
  const Eigen::Index width = split.front().cols();
  Eigen::Index rows = 0;
  Vec sum = Vec::Zero(width);
  for (const Mat& m : split) {
    require_shape(m.cols() == width, "fit_stats: inconsistent widths");
    sum += m.colwise().sum().transpose();
    rows += m.rows();
  }
  require(rows > 0, "fit_stats: no frames");
  DatasetStats stats;
  stats.mean = sum / static_cast<double>(rows);
  Vec sq = Vec::Zero(width);
  for (const Mat& m : split) {
    sq += (m.rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  stats.std = (sq / static_cast<double>(rows)).array().sqrt().max(DatasetStats::kStdFloor).matrix();
  return stats;
}

Mat normalize(const Mat& features, const DatasetStats& stats) {
  require_shape(features.cols() == stats.mean.size(), "normalize: width mismatch");
  return ((features.rowwise() - stats.mean.transpose()).array().rowwise() /
          stats.std.transpose().array())
      .matrix();
}

Mat denormalize(const Mat& features, const DatasetStats& stats) {
  require_shape(features.cols() == stats.mean.size(), "denormalize: width mismatch");
  return ((features.array().rowwise() * stats.std.transpose().array()).rowwise() +
          stats.mean.transpose().array())
      .matrix();
}

Eigen::Matrix3d rotation_from_6d(const Eigen::Matrix<double, 6, 1>& block) {
  const Eigen::Vector3d c0 = block.head<3>();
  const Eigen::Vector3d c1 = block.tail<3>();
  const Eigen::Vector3d b1 = c0.normalized();
  const Eigen::Vector3d b2 = (c1 - b1.dot(c1) * b1).normalized();
  Eigen::Matrix3d r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

TwoPersonSequence slice(const TwoPersonSequence& seq, int start, int end) {
  require(start >= 0 && end <= seq.length() && start < end, "slice: bad frame range");
  TwoPersonSequence out;
  out.fps = seq.fps;
  out.scenario_id = seq.scenario_id;
  out.clip_id = seq.clip_id;
  out.person_a.assign(seq.person_a.begin() + start, seq.person_a.begin() + end);
  out.person_b.assign(seq.person_b.begin() + start, seq.person_b.begin() + end);
  return out;
}

}  // namespace interedit::motion
