#include "interedit/losses.hpp"

#include <cmath>

namespace interedit {

namespace {

using V3 = Eigen::Vector3d;

int person_width(int nj) { return 12 * nj + 4; }
int pos_col(int person, int joint, int nj) { return person * person_width(nj) + 3 * joint; }

V3 pos(const Mat& x, Eigen::Index l, int person, int joint, int nj) {
  const int c = pos_col(person, joint, nj);
  return {x(l, c), x(l, c + 1), x(l, c + 2)};
}

void add_pos(Mat& g, Eigen::Index l, int person, int joint, int nj, const V3& v) {
  const int c = pos_col(person, joint, nj);
  g(l, c) += v.x();
  g(l, c + 1) += v.y();
  g(l, c + 2) += v.z();
}

void check_pair(const Mat& x0, const Mat& x0_hat, int nj, const char* name) {
  require_shape(x0.rows() == x0_hat.rows() && x0.cols() == x0_hat.cols(), std::string(name) + ": shape mismatch");
  require_shape(x0.cols() == 2 * person_width(nj), std::string(name) + ": width does not match joint count");
}

Vec unit_rows_grad(const Vec& u_grad, const Vec& raw) {
  const double n = raw.norm();
  const Vec u = raw / n;
  return (u_grad - u * u.dot(u_grad)) / n;
}

}  // namespace

PlanLossKind plan_loss_kind_from(const std::string& name) {
  if (name == "infonce") return PlanLossKind::InfoNCE;
  if (name == "cosine") return PlanLossKind::Cosine;
  if (name == "mse") return PlanLossKind::MSE;
  throw Error("unknown plan loss kind '" + name + "' (expected infonce, cosine or mse)");
}

const char* plan_loss_kind_name(PlanLossKind kind) {
  switch (kind) {
    case PlanLossKind::InfoNCE: return "infonce";
    case PlanLossKind::Cosine: return "cosine";
    case PlanLossKind::MSE: return "mse";
  }
  return "?";
}

void LossWeights::validate() const {
  for (double w : {vel, foot, bl, dm, ro, plan, freq}) require(w >= 0.0, "loss weights must be >= 0");
  require(tau > 0.0, "InfoNCE temperature must be > 0");
  require(dm_threshold > 0.0, "distance-map threshold must be > 0");
}

LossValue l_diff(const Mat& x0, const Mat& x0_hat) {
  require_shape(x0.rows() == x0_hat.rows() && x0.cols() == x0_hat.cols(), "l_diff: shape mismatch");
  const Mat r = x0_hat - x0;
  const double n = static_cast<double>(r.size());
  return {r.squaredNorm() / n, 2.0 * r / n};
}

LossValue l_vel(const Mat& x0, const Mat& x0_hat, int nj) {
  check_pair(x0, x0_hat, nj, "l_vel");
  const Eigen::Index length = x0.rows();
  LossValue out{0.0, Mat::Zero(x0.rows(), x0.cols())};
  if (length < 2) return out;
  const double n = static_cast<double>((length - 1) * 2 * 3 * nj);
  for (int p = 0; p < 2; ++p) {
    const int c0 = pos_col(p, 0, nj);
    const Mat d = (x0_hat.middleCols(c0, 3 * nj).bottomRows(length - 1) - x0_hat.middleCols(c0, 3 * nj).topRows(length - 1)) -
                  (x0.middleCols(c0, 3 * nj).bottomRows(length - 1) - x0.middleCols(c0, 3 * nj).topRows(length - 1));
    out.value += d.squaredNorm() / n;
    const Mat r = 2.0 * d / n;
    out.grad.middleCols(c0, 3 * nj).bottomRows(length - 1) += r;
    out.grad.middleCols(c0, 3 * nj).topRows(length - 1) -= r;
  }
  return out;
}

LossValue l_foot(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& sk) {
  const int nj = sk.joint_count;
  check_pair(x0, x0_hat, nj, "l_foot");
  const Eigen::Index length = x0.rows();
  LossValue out{0.0, Mat::Zero(x0.rows(), x0.cols())};
  if (length < 2) return out;
  const double n = static_cast<double>((length - 1) * 2 * 4 * 3);
  for (int p = 0; p < 2; ++p) {
    const int contact_col = p * person_width(nj) + 12 * nj;
    for (Eigen::Index l = 0; l + 1 < length; ++l) {
      for (int f = 0; f < 4; ++f) {
        if (x0(l, contact_col + f) <= 0.5) continue;
        const int j = sk.foot_joints[static_cast<std::size_t>(f)];
        const V3 v = pos(x0_hat, l + 1, p, j, nj) - pos(x0_hat, l, p, j, nj);
        out.value += v.squaredNorm() / n;
        add_pos(out.grad, l + 1, p, j, nj, 2.0 * v / n);
        add_pos(out.grad, l, p, j, nj, -2.0 * v / n);
      }
    }
  }
  return out;
}

LossValue l_bl(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& sk) {
  const int nj = sk.joint_count;
  check_pair(x0, x0_hat, nj, "l_bl");
  const Eigen::Index length = x0.rows();
  LossValue out{0.0, Mat::Zero(x0.rows(), x0.cols())};
  const double n = static_cast<double>(length * 2 * (nj - 1));
  for (Eigen::Index l = 0; l < length; ++l) {
    for (int p = 0; p < 2; ++p) {
      for (int j = 1; j < nj; ++j) {
        const int par = sk.parents[static_cast<std::size_t>(j)];
        const V3 e_hat = pos(x0_hat, l, p, j, nj) - pos(x0_hat, l, p, par, nj);
        const double b_hat = e_hat.norm();
        const double b = (pos(x0, l, p, j, nj) - pos(x0, l, p, par, nj)).norm();
        const double r = b_hat - b;
        out.value += r * r / n;
        if (b_hat > 1e-12) {
          const V3 g = (2.0 * r / n / b_hat) * e_hat;
          add_pos(out.grad, l, p, j, nj, g);
          add_pos(out.grad, l, p, par, nj, -g);
        }
      }
    }
  }
  return out;
}

LossValue l_dm(const Mat& x0, const Mat& x0_hat, int nj, double threshold) {
  check_pair(x0, x0_hat, nj, "l_dm");
  require(threshold > 0.0, "l_dm: threshold must be > 0");
  const Eigen::Index length = x0.rows();
  LossValue out{0.0, Mat::Zero(x0.rows(), x0.cols())};
  const double n = static_cast<double>(length * nj * nj);
  for (Eigen::Index l = 0; l < length; ++l) {
    for (int i = 0; i < nj; ++i) {
      const V3 a = pos(x0, l, 0, i, nj);
      const V3 a_hat = pos(x0_hat, l, 0, i, nj);
      for (int j = 0; j < nj; ++j) {
        const V3 b = pos(x0, l, 1, j, nj);
        const double xz = std::hypot(a.x() - b.x(), a.z() - b.z());
        if (!(xz < threshold)) continue;
        const V3 e_hat = a_hat - pos(x0_hat, l, 1, j, nj);
        const double m_hat = e_hat.norm();
        const double r = m_hat - (a - b).norm();
        out.value += r * r / n;
        if (m_hat > 1e-12) {
          const V3 g = (2.0 * r / n / m_hat) * e_hat;
          add_pos(out.grad, l, 0, i, nj, g);
          add_pos(out.grad, l, 1, j, nj, -g);
        }
      }
    }
  }
  return out;
}

double facing_yaw(const Vec& positions, const motion::Skeleton& sk) {
  const Eigen::Vector3d a = positions.segment<3>(3 * sk.left_hip) - positions.segment<3>(3 * sk.right_hip);
  return std::atan2(-a.z(), a.x());
}

LossValue l_ro(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& sk) {
  const int nj = sk.joint_count;
  check_pair(x0, x0_hat, nj, "l_ro");
  const Eigen::Index length = x0.rows();
  LossValue out{0.0, Mat::Zero(x0.rows(), x0.cols())};
  const double n = static_cast<double>(length * 2);
  auto hip_axis = [&](const Mat& x, Eigen::Index l, int p) {
    return V3(pos(x, l, p, sk.left_hip, nj) - pos(x, l, p, sk.right_hip, nj));
  };
  auto yaw = [](const V3& a) { return std::atan2(-a.z(), a.x()); };
  for (Eigen::Index l = 0; l < length; ++l) {
    const double delta = yaw(hip_axis(x0, l, 0)) - yaw(hip_axis(x0, l, 1));
    const V3 ah = hip_axis(x0_hat, l, 0), bh = hip_axis(x0_hat, l, 1);
    const double delta_hat = yaw(ah) - yaw(bh);
    const double dc = std::cos(delta_hat) - std::cos(delta);
    const double ds = std::sin(delta_hat) - std::sin(delta);
    out.value += (dc * dc + ds * ds) / n;
    const double g_delta = (2.0 / n) * (-dc * std::sin(delta_hat) + ds * std::cos(delta_hat));
    // d yaw / d a for yaw = atan2(-a_z, a_x): (a_z, 0, -a_x) / (a_x^2 + a_z^2).
    auto dyaw = [](const V3& a) {
      const double r2 = a.x() * a.x() + a.z() * a.z();
      return r2 > 1e-24 ? V3(a.z() / r2, 0.0, -a.x() / r2) : V3::Zero();
    };
    const V3 ga = g_delta * dyaw(ah);
    const V3 gb = -g_delta * dyaw(bh);
    add_pos(out.grad, l, 0, sk.left_hip, nj, ga);
    add_pos(out.grad, l, 0, sk.right_hip, nj, -ga);
    add_pos(out.grad, l, 1, sk.left_hip, nj, gb);
    add_pos(out.grad, l, 1, sk.right_hip, nj, -gb);
  }
  return out;
}

LossValue l_plan(const Mat& z_hat, const Mat& targets, int positive, double tau, PlanLossKind kind) {
  require(tau > 0.0, "l_plan: tau must be > 0");
  require(targets.rows() >= 1, "l_plan: empty batch");
  require(positive >= 0 && positive < targets.rows(), "l_plan: positive index out of range");
  require_shape(z_hat.cols() == targets.cols(), "l_plan: embedding width mismatch");
  const Eigen::Index k_count = z_hat.rows();
  const Eigen::Index width = z_hat.cols();
  require(k_count >= 1, "l_plan: no plan projections");
  Mat t = targets;
  for (Eigen::Index n = 0; n < t.rows(); ++n) t.row(n) /= t.row(n).norm();
  const Vec z_pos = t.row(positive).transpose();

  LossValue out{0.0, Mat::Zero(k_count, width)};
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Vec raw = z_hat.row(k).transpose();
    const Vec u = raw / raw.norm();
    Vec gu;
    if (kind == PlanLossKind::InfoNCE) {
      const Vec logits = t * u / tau;
      const double m = logits.maxCoeff();
      const Vec e = (logits.array() - m).exp().matrix();
      const double z = e.sum();
      out.value += (std::log(z) + m - logits[positive]) / static_cast<double>(k_count);
      Vec p = e / z;
      p[positive] -= 1.0;
      gu = t.transpose() * p / tau / static_cast<double>(k_count);
    } else if (kind == PlanLossKind::Cosine) {
      out.value += (1.0 - u.dot(z_pos)) / static_cast<double>(k_count);
      gu = -z_pos / static_cast<double>(k_count);
    } else {
      const Vec d = u - z_pos;
      const double n = static_cast<double>(k_count * width);
      out.value += d.squaredNorm() / n;
      gu = 2.0 * d / n;
    }
    out.grad.row(k) = unit_rows_grad(gu, raw).transpose();
  }
  return out;
}

LossValue l_freq(const Mat& g_hat, const Mat& g_target, const std::array<double, 6>& weights) {
  require_shape(g_hat.rows() == 6 && g_target.rows() == 6 && g_hat.cols() == g_target.cols(),
                "l_freq: expected two 6 x d_f profiles");
  LossValue out{0.0, Mat::Zero(6, g_hat.cols())};
  for (int i = 0; i < 6; ++i) {
    const RowVec r = g_hat.row(i) - g_target.row(i);
    out.value += weights[static_cast<std::size_t>(i)] * r.squaredNorm() / 6.0;
    out.grad.row(i) = (2.0 * weights[static_cast<std::size_t>(i)] / 6.0) * r;
  }
  return out;
}

const std::vector<std::string>& LossBreakdown::names() {
  static const std::vector<std::string> n = {"diff", "vel", "foot", "bl", "dm", "ro", "plan", "freq", "motion", "total"};
  return n;
}

std::vector<double> LossBreakdown::values() const { return {diff, vel, foot, bl, dm, ro, plan, freq, motion, total}; }

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  diff += o.diff;
  vel += o.vel;
  foot += o.foot;
  bl += o.bl;
  dm += o.dm;
  ro += o.ro;
  plan += o.plan;
  freq += o.freq;
  motion += o.motion;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double s) {
  diff *= s;
  vel *= s;
  foot *= s;
  bl *= s;
  dm *= s;
  ro *= s;
  plan *= s;
  freq *= s;
  motion *= s;
  total *= s;
  return *this;
}

LossBreakdown l_total(LossBreakdown c, const LossWeights& w) {
  w.validate();
  c.motion = c.diff + w.vel * c.vel + w.foot * c.foot + w.bl * c.bl + w.dm * c.dm + w.ro * c.ro;
  c.total = c.motion + w.plan * c.plan + w.freq * c.freq;
  return c;
}

}  // namespace interedit
