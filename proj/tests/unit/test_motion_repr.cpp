#include "interedit/motion_io.hpp"
#include "interedit/motion_repr.hpp"
#include "interedit/synth.hpp"
#include "interedit/freq_descriptors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace interedit;
using namespace interedit::motion;

namespace {

std::vector<JointPositions> repeat_pose(const JointPositions& p, int n) { return std::vector<JointPositions>(n, p); }

Mat rand_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("interedit_test_" + name)).string();
}

}  // namespace

TEST_CASE("skeleton validation") {
  CHECK_NOTHROW(Skeleton::interhuman22().validate());
  CHECK_NOTHROW(Skeleton::chain(5).validate());
  Skeleton s = Skeleton::chain(4);
  s.parents[2] = 3;
  s.parents[3] = 2;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("static pose has zero velocity and full contact") {
  const Skeleton sk = Skeleton::interhuman22();
  const auto frames = repeat_pose(synth::rest_pose(), 10);
  const auto states = build_motion_state(frames, sk, 30.0);
  REQUIRE(states.size() == 10);
  for (const auto& s : states) {
    CHECK(s.velocities.cwiseAbs().maxCoeff() == 0.0);
    for (double c : s.contacts) CHECK(c == 1.0);
  }
}

TEST_CASE("translation gives constant interior velocity") {
  const Skeleton sk = Skeleton::interhuman22();
  std::vector<JointPositions> frames;
  for (int l = 0; l < 6; ++l) {
    JointPositions p = synth::rest_pose();
    p.col(0).array() += 0.1 * l;
    frames.push_back(p);
  }
  const auto states = build_motion_state(frames, sk, 30.0);
  for (int l = 1; l < 5; ++l)
    for (int j = 0; j < sk.joint_count; ++j) CHECK(states[l].velocities[3 * j] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("central difference matches the analytic derivative of a bounce") {
  const Skeleton sk = Skeleton::interhuman22();
  const double a = 0.05;
  for (int period : {20, 40}) {
    std::vector<JointPositions> frames;
    for (int l = 0; l < 2 * period; ++l) {
      JointPositions p = synth::rest_pose();
      p.col(1).array() += a * std::sin(2 * std::numbers::pi * l / period);
      frames.push_back(p);
    }
    const auto states = build_motion_state(frames, sk, 30.0);
    const double w = 2 * std::numbers::pi / period;
    double worst = 0.0;
    for (int l = 1; l + 1 < 2 * period; ++l)
      worst = std::max(worst, std::abs(states[l].velocities[1] - a * w * std::cos(w * l)));
    // Central-difference truncation error is a w^3 / 6.
    CHECK(worst <= a * w * w * w / 6.0 * 1.01);
  }
}

TEST_CASE("non-finite positions are rejected with the frame index") {
  const Skeleton sk = Skeleton::interhuman22();
  auto frames = repeat_pose(synth::rest_pose(), 5);
  frames[3](4, 1) = std::nan("");
  try {
    build_motion_state(frames, sk, 30.0);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.index() == 3);
  }
}

TEST_CASE("rotations are proper after Gram-Schmidt") {
  const auto trip = synth::synth_generate("rotate_pair", "cw", 20, 3);
  for (const auto& s : trip.target.person_a) {
    for (int j = 0; j < 22; ++j) {
      const Eigen::Matrix<double, 6, 1> b = s.rotations.segment<6>(6 * j);
      const Eigen::Matrix3d r = rotation_from_6d(b);
      CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-9);
    }
  }
}

TEST_CASE("flatten and unflatten are inverse") {
  const auto trip = synth::synth_generate("wave", "sync_wave", 12, 4);
  const Mat f = flatten(trip.source);
  CHECK(f.cols() == 536);
  const Mat back = flatten(unflatten(f, 22, trip.source.fps));
  CHECK(back == f);
  const Mat zero = Mat::Zero(5, 536);
  CHECK(flatten(unflatten(zero, 22)) == zero);
  CHECK_THROWS_AS(unflatten(Mat::Zero(5, 535), 22), ShapeError);
}

TEST_CASE("strip contacts drops exactly four channels per person") {
  const auto trip = synth::synth_generate("bow", "deep", 10, 1);
  Mat f = flatten(trip.source);
  const Mat stripped = strip_contacts(f, 22);
  CHECK(stripped.cols() == 2 * 264);
  Mat ones = f;
  const FeatureLayout lay{22};
  for (int p = 0; p < 2; ++p) ones.middleCols(p * lay.person_width() + lay.contact_offset(), 4).setOnes();
  Mat zeros = f;
  for (int p = 0; p < 2; ++p) zeros.middleCols(p * lay.person_width() + lay.contact_offset(), 4).setZero();
  CHECK(strip_contacts(ones, 22) == strip_contacts(zeros, 22));
  CHECK(reinsert_contacts(stripped, extract_contacts(f, 22), 22) == f);
}

TEST_CASE("bone lengths") {
  const Skeleton chain = Skeleton::chain(4);
  Vec p(12);
  p << 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1;
  const Vec len = bone_lengths(p, chain);
  REQUIRE(len.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(len[i] == doctest::Approx(1.0));

  const Skeleton sk = Skeleton::interhuman22();
  const JointPositions pose = synth::rest_pose();
  Vec flat(66);
  for (int j = 0; j < 22; ++j) flat.segment<3>(3 * j) = pose.row(j).transpose();
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(0.3, 1.0, -0.2).normalized()).toRotationMatrix();
  Vec moved(66);
  for (int j = 0; j < 22; ++j) moved.segment<3>(3 * j) = r * flat.segment<3>(3 * j) + Eigen::Vector3d(2, 0, -1);
  CHECK((bone_lengths(flat, sk) - bone_lengths(moved, sk)).cwiseAbs().maxCoeff() <= 1e-12);
  const Vec lf = bone_lengths(flat, sk);
  for (int j = 1; j < 22; ++j) {
    const int par = sk.parents[static_cast<std::size_t>(j)];
    CHECK(lf[j - 1] == doctest::Approx((pose.row(j) - pose.row(par)).norm()));
  }
}

TEST_CASE("dataset statistics") {
  Mat a = rand_mat(30, 536, 1), b = rand_mat(20, 536, 2);
  a.col(7).setConstant(3.0);
  b.col(7).setConstant(3.0);
  std::vector<Mat> split{a, b};
  const DatasetStats st = fit_stats(split);
  CHECK(st.std[7] == DatasetStats::kStdFloor);
  const Mat na = normalize(a, st), nb = normalize(b, st);
  CHECK(na.col(7).cwiseAbs().maxCoeff() == 0.0);
  Mat all(50, 536);
  all << na, nb;
  CHECK(all.colwise().mean().cwiseAbs().maxCoeff() < 1e-6);
  CHECK((denormalize(na, st) - a).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK_THROWS_AS(fit_stats(std::span<const Mat>{}), Error);
}

TEST_CASE("synthetic generator determinism and catalog") {
  CHECK(synth::catalog().size() >= 8);
  const auto a = synth::synth_generate("rotate_pair", "cw", 200, 7);
  const auto b = synth::synth_generate("rotate_pair", "cw", 200, 7);
  CHECK(flatten(a.source) == flatten(b.source));
  CHECK(flatten(a.target) == flatten(b.target));
  CHECK(a.instruction == b.instruction);
  CHECK(!a.instruction.empty());
  CHECK(a.provenance.kind == "synthetic");
  CHECK_THROWS_AS(synth::synth_generate("rotate_pair", "sideways", 20, 1), Error);
  CHECK_THROWS_AS(synth::synth_generate("juggle", "cw", 20, 1), Error);
}

TEST_CASE("synthetic triplets share a canonical frame anchored on person B") {
  const Skeleton sk = Skeleton::interhuman22();
  for (const auto& sc : synth::catalog()) {
    const auto t = synth::synth_generate(sc.id, sc.second_label, 30, 17);
    const Vec& b0 = t.source.person_b.front().positions;
    CHECK(std::hypot(b0[0], b0[2]) <= 1e-9);
    const Eigen::Vector3d hips = (b0.segment<3>(3 * sk.left_hip) - b0.segment<3>(3 * sk.right_hip));
    CHECK(std::atan2(-hips.z(), hips.x()) == doctest::Approx(0.0).epsilon(1e-9));
    for (int l = 0; l < 30; ++l)
      CHECK(t.source.person_b[static_cast<std::size_t>(l)].positions ==
            t.target.person_b[static_cast<std::size_t>(l)].positions);
  }
}

TEST_CASE("approach and retreat have opposite distance slopes") {
  const auto t = synth::synth_generate("approach", "retreat", 60, 5);
  auto slope = [](const TwoPersonSequence& s) {
    auto dist = [&](int l) {
      const Vec& pa = s.person_a[static_cast<std::size_t>(l)].positions;
      const Vec& pb = s.person_b[static_cast<std::size_t>(l)].positions;
      return std::hypot(pa[0] - pb[0], pa[2] - pb[2]);
    };
    return dist(s.length() - 1) - dist(0);
  };
  CHECK(slope(t.source) * slope(t.target) < 0.0);
  CHECK(slope(t.target) > 0.0);
}

TEST_CASE("alternating wave carries more difference-signal energy") {
  const auto t = synth::synth_generate("wave", "alt_wave", 200, 9);
  const auto src = freq::band_descriptors(strip_contacts(t.source), {});
  const auto tgt = freq::band_descriptors(strip_contacts(t.target), {});
  // Gesture band = mid; D-mid row index 4.
  CHECK(tgt.values.row(4).sum() > src.values.row(4).sum());
}

TEST_CASE("triplet and sequence files round trip") {
  std::vector<EditTriplet> ts{synth::synth_generate("handshake", "long_hold", 16, 2),
                              synth::synth_generate("side_arm", "left", 16, 3)};
  const std::string path = tmp_path("triplets.bin");
  save_triplets(path, ts);
  const auto back = load_triplets(path);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].instruction == ts[i].instruction);
    CHECK(back[i].provenance.group == ts[i].provenance.group);
    CHECK(back[i].source.clip_id == ts[i].source.clip_id);
    CHECK((flatten(back[i].target) - flatten(ts[i].target)).cwiseAbs().maxCoeff() <= 1e-5);
  }
  const std::string sp = tmp_path("seq.bin");
  save_sequence(sp, ts[0].source);
  const auto seq = load_sequence(sp);
  CHECK(seq.length() == 16);
  CHECK(seq.fps == ts[0].source.fps);
  std::filesystem::remove(path);
  std::filesystem::remove(sp);
  CHECK_THROWS_AS(load_triplets(tmp_path("missing.bin")), Error);
}

TEST_CASE("triplet validation") {
  auto t = synth::synth_generate("bow", "shallow", 20, 1);
  CHECK_NOTHROW(t.validate(20));
  CHECK_THROWS_AS(t.validate(19), Error);
  t.instruction = "";
  CHECK_THROWS_AS(t.validate(20), Error);
}
