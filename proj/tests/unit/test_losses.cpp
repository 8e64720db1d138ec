#include "interedit/losses.hpp"
#include "interedit/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace interedit;
using namespace interedit::motion;

namespace {

Mat rand_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Writes the same pose for every frame of person p.
void set_pose(Mat& x, int p, const JointPositions& pose) {
  const int nj = static_cast<int>(pose.rows());
  for (Eigen::Index l = 0; l < x.rows(); ++l)
    for (int j = 0; j < nj; ++j)
      for (int a = 0; a < 3; ++a) x(l, p * (12 * nj + 4) + 3 * j + a) = pose(j, a);
}

JointPositions rotate_y(const JointPositions& p, double angle) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
  return (p * r.transpose()).eval();
}

double fd_rel(const std::function<LossValue(const Mat&)>& f, const Mat& at) {
  const LossValue a = f(at);
  Mat x = at, num(at.rows(), at.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + 1e-5;
    const double up = f(x).value;
    x.data()[i] = keep - 1e-5;
    const double dn = f(x).value;
    x.data()[i] = keep;
    num.data()[i] = (up - dn) / 2e-5;
  }
  return (a.grad - num).norm() / std::max(num.norm(), 1e-12);
}

}  // namespace

TEST_CASE("diffusion reconstruction loss") {
  std::mt19937_64 rng(1);
  const Mat a = rand_mat(4, 6, rng), b = rand_mat(4, 6, rng);
  CHECK(l_diff(a, a).value == 0.0);
  CHECK(l_diff(a, (a.array() + 1.0).matrix()).value == doctest::Approx(1.0));
  double acc = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) acc += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  CHECK(l_diff(a, b).value == doctest::Approx(acc / 24.0).epsilon(1e-12));
}

TEST_CASE("velocity loss") {
  const int nj = 5;
  const int w = 2 * (12 * nj + 4);
  std::mt19937_64 rng(2);
  Mat stat = Mat::Zero(6, w);
  set_pose(stat, 0, rand_mat(nj, 3, rng));
  Mat other = Mat::Zero(6, w);
  set_pose(other, 0, rand_mat(nj, 3, rng));
  CHECK(l_vel(stat, other, nj).value == 0.0);
  // Ramp and an offset copy share slopes.
  Mat ramp = Mat::Zero(6, w);
  for (int l = 0; l < 6; ++l) ramp.row(l).head(3 * nj).setConstant(0.1 * l);
  Mat shifted = ramp;
  shifted.leftCols(3 * nj).array() += 0.7;
  CHECK(l_vel(ramp, shifted, nj).value == doctest::Approx(0.0));
  const Mat x0 = rand_mat(6, w, rng), xh = rand_mat(6, w, rng);
  double acc = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int l = 0; l < 5; ++l)
      for (int c = 0; c < 3 * nj; ++c) {
        const int col = p * (12 * nj + 4) + c;
        const double d = (xh(l + 1, col) - xh(l, col)) - (x0(l + 1, col) - x0(l, col));
        acc += d * d;
      }
  CHECK(l_vel(x0, xh, nj).value == doctest::Approx(acc / (5.0 * 2 * 3 * nj)));
}

TEST_CASE("foot contact loss") {
  const Skeleton sk = Skeleton::chain(5);
  const int nj = 5, pw = 12 * nj + 4, w = 2 * pw;
  std::mt19937_64 rng(3);
  const Mat xh = rand_mat(4, w, rng);
  Mat x0 = Mat::Zero(4, w);
  CHECK(l_foot(x0, xh, sk).value == 0.0);  // no contacts
  x0.col(12 * nj).setOnes();              // person A, first foot joint in contact everywhere
  Mat still = Mat::Zero(4, w);
  CHECK(l_foot(x0, still, sk).value == 0.0);
  // Only that foot moves: 0.2 m per frame along x.
  Mat moving = Mat::Zero(4, w);
  const int j = sk.foot_joints[0];
  for (int l = 0; l < 4; ++l) moving(l, 3 * j) = 0.2 * l;
  CHECK(l_foot(x0, moving, sk).value == doctest::Approx(3 * 0.04 / (3.0 * 2 * 4 * 3)));
}

TEST_CASE("bone length loss") {
  const Skeleton sk = Skeleton::interhuman22();
  const JointPositions pose = synth::rest_pose();
  Mat x0 = Mat::Zero(3, 536);
  set_pose(x0, 0, pose);
  set_pose(x0, 1, pose);
  CHECK(l_bl(x0, x0, sk).value == 0.0);
  Mat doubled = Mat::Zero(3, 536);
  set_pose(doubled, 0, 2.0 * pose);
  set_pose(doubled, 1, 2.0 * pose);
  double acc = 0.0;
  for (int j = 1; j < 22; ++j) acc += (pose.row(j) - pose.row(sk.parents[static_cast<std::size_t>(j)])).squaredNorm();
  CHECK(l_bl(x0, doubled, sk).value == doctest::Approx(acc / 21.0));
  Mat rotated = Mat::Zero(3, 536);
  set_pose(rotated, 0, rotate_y(pose, 1.1));
  set_pose(rotated, 1, rotate_y(pose, -0.4));
  CHECK(l_bl(x0, rotated, sk).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("distance map loss") {
  const int nj = 22;
  const JointPositions pose = synth::rest_pose();
  JointPositions far = pose;
  far.col(0).array() += 5.0;
  Mat x0 = Mat::Zero(2, 536);
  set_pose(x0, 0, pose);
  set_pose(x0, 1, far);
  std::mt19937_64 rng(4);
  const Mat xh = x0 + rand_mat(2, 536, rng, 0.1);
  CHECK(l_dm(x0, xh, nj, 1.0).value == 0.0);  // nobody within 1 m
  CHECK(l_dm(x0, x0, nj, 100.0).value == 0.0);
  // A huge threshold keeps every pair: compare with the unmasked oracle.
  double acc = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < nj; ++i)
      for (int j = 0; j < nj; ++j) {
        const Eigen::Vector3d a = x0.row(l).segment<3>(3 * i).transpose(), b = x0.row(l).segment<3>(268 + 3 * j).transpose();
        const Eigen::Vector3d ah = xh.row(l).segment<3>(3 * i).transpose(), bh = xh.row(l).segment<3>(268 + 3 * j).transpose();
        const double d = (ah - bh).norm() - (a - b).norm();
        acc += d * d;
      }
  CHECK(l_dm(x0, xh, nj, 1e9).value == doctest::Approx(acc / (2.0 * nj * nj)));
}

TEST_CASE("relative orientation loss") {
  const Skeleton sk = Skeleton::interhuman22();
  const JointPositions pose = synth::rest_pose();
  JointPositions partner = rotate_y(pose, std::numbers::pi);
  partner.col(2).array() += 1.5;
  Mat x0 = Mat::Zero(2, 536);
  set_pose(x0, 0, pose);
  set_pose(x0, 1, partner);
  CHECK(l_ro(x0, x0, sk).value == 0.0);
  // Same global yaw on both persons leaves the relative yaw unchanged.
  Mat turned = Mat::Zero(2, 536);
  set_pose(turned, 0, rotate_y(pose, 0.8));
  set_pose(turned, 1, rotate_y(partner, 0.8));
  CHECK(l_ro(x0, turned, sk).value == doctest::Approx(0.0).epsilon(1e-12));
  // 90 degrees of relative yaw error: |(cos d, sin d) - (cos d', sin d')|^2 = 2 - 2 cos(pi/2) = 2.
  Mat off = Mat::Zero(2, 536);
  set_pose(off, 0, rotate_y(pose, std::numbers::pi / 2));
  set_pose(off, 1, partner);
  CHECK(l_ro(x0, off, sk).value == doctest::Approx(2.0 / 2.0));
  CHECK(facing_yaw(x0.row(0).head(66).transpose(), sk) ==
        doctest::Approx(facing_yaw(x0.row(1).head(66).transpose(), sk)));
}

TEST_CASE("plan loss") {
  Mat t1(1, 3);
  t1 << 0.3, -0.2, 0.9;
  Mat z(2, 3);
  z << 1, 2, 3, -1, 0, 2;
  CHECK(l_plan(z, t1, 0, 0.07, PlanLossKind::InfoNCE).value == doctest::Approx(0.0));
  Mat t2(2, 3);
  t2 << 1, 0, 0, 0, 1, 0;
  Mat exact(1, 3);
  exact << 2, 0, 0;
  const double expect = std::log1p(std::exp(-1.0 / 0.07));
  CHECK(std::abs(l_plan(exact, t2, 0, 0.07, PlanLossKind::InfoNCE).value - expect) <= 1e-12);
  CHECK(l_plan(exact, t2, 0, 0.07, PlanLossKind::InfoNCE).value <= 1e-6);
  Mat ortho(1, 3);
  ortho << 0, 0, 4;
  CHECK(l_plan(ortho, t2, 0, 0.07, PlanLossKind::Cosine).value == doctest::Approx(1.0));
  CHECK(l_plan(exact, t2, 0, 0.07, PlanLossKind::MSE).value == doctest::Approx(0.0));
  CHECK_THROWS_AS(l_plan(exact, t2, 0, 0.0, PlanLossKind::InfoNCE), Error);
  CHECK_THROWS_AS(l_plan(exact, Mat(0, 3), 0, 0.07, PlanLossKind::InfoNCE), Error);
  CHECK(plan_loss_kind_from("cosine") == PlanLossKind::Cosine);
  CHECK_THROWS_AS(plan_loss_kind_from("hinge"), Error);
}

TEST_CASE("frequency loss") {
  const std::array<double, 6> w{1, 1, 0.25, 1, 1, 0.25};
  std::mt19937_64 rng(5);
  const Mat g = rand_mat(6, 10, rng);
  CHECK(l_freq(g, g, w).value == 0.0);
  Mat e = g;
  e.row(2).array() += 1.0;  // unit error in S-high only
  CHECK(l_freq(e, g, w).value == doctest::Approx(0.25 * 10 / 6.0));
  CHECK(l_freq(e, g, {0, 0, 0, 0, 0, 0}).value == 0.0);
}

TEST_CASE("total objective bookkeeping") {
  LossWeights w;
  LossBreakdown b;
  CHECK(l_total(b, w).total == 0.0);
  b.diff = 0.5;
  b.vel = 0.1;
  b.foot = 0.2;
  b.bl = 0.3;
  b.dm = 0.4;
  b.ro = 0.6;
  b.plan = 2.0;
  b.freq = 3.0;
  const LossBreakdown t = l_total(b, w);
  const double motion = 0.5 + 30 * 0.1 + 30 * 0.2 + 10 * 0.3 + 3 * 0.4 + 0.01 * 0.6;
  CHECK(t.motion == doctest::Approx(motion).epsilon(1e-12));
  CHECK(std::abs(t.total - (motion + 0.03 * 2.0 + 0.01 * 3.0)) <= 1e-9);
  w.plan = w.freq = 0.0;
  CHECK(l_total(b, w).total == doctest::Approx(l_total(b, w).motion));
}

TEST_CASE("every loss gradient matches central differences") {
  const int nj = 5, len = 8;
  const Skeleton sk = Skeleton::chain(nj);
  std::mt19937_64 rng(6);
  Mat x0 = rand_mat(len, 2 * (12 * nj + 4), rng, 0.6);
  std::bernoulli_distribution coin(0.5);
  for (int p = 0; p < 2; ++p)
    for (int l = 0; l < len; ++l)
      for (int c = 0; c < 4; ++c) x0(l, p * (12 * nj + 4) + 12 * nj + c) = coin(rng);
  const Mat xh = x0 + rand_mat(len, x0.cols(), rng, 0.3);
  CHECK(fd_rel([&](const Mat& y) { return l_diff(x0, y); }, xh) <= 1e-4);
  CHECK(fd_rel([&](const Mat& y) { return l_vel(x0, y, nj); }, xh) <= 1e-4);
  CHECK(fd_rel([&](const Mat& y) { return l_foot(x0, y, sk); }, xh) <= 1e-4);
  CHECK(fd_rel([&](const Mat& y) { return l_bl(x0, y, sk); }, xh) <= 1e-4);
  CHECK(fd_rel([&](const Mat& y) { return l_dm(x0, y, nj, 1.0); }, xh) <= 1e-4);
  CHECK(fd_rel([&](const Mat& y) { return l_ro(x0, y, sk); }, xh) <= 1e-4);
  const Mat z = rand_mat(4, 6, rng), t = rand_mat(3, 6, rng);
  for (auto k : {PlanLossKind::InfoNCE, PlanLossKind::Cosine, PlanLossKind::MSE})
    CHECK(fd_rel([&](const Mat& y) { return l_plan(y, t, 2, 0.07, k); }, z) <= 1e-4);
  const Mat g = rand_mat(6, 7, rng);
  CHECK(fd_rel([&](const Mat& y) { return l_freq(y, g, {1, 1, 0.25, 1, 1, 0.25}); }, g + rand_mat(6, 7, rng)) <= 1e-4);
}
