#pragma once

#include "interedit/motion_repr.hpp"

#include <array>
#include <string>
#include <vector>

namespace interedit {

enum class PlanLossKind { InfoNCE, Cosine, MSE };

PlanLossKind plan_loss_kind_from(const std::string& name);
const char* plan_loss_kind_name(PlanLossKind kind);

struct LossWeights {
  double vel = 30.0;
  double foot = 30.0;
  double bl = 10.0;
  double dm = 3.0;
  double ro = 0.01;
  double plan = 0.03;
  double freq = 0.01;
  double tau = 0.07;
  double dm_threshold = 1.0;  // meters, XZ plane
  PlanLossKind plan_kind = PlanLossKind::InfoNCE;

  void validate() const;
};

/// Scalar loss and its gradient with respect to the prediction argument.
struct LossValue {
  double value = 0.0;
  Mat grad;
};

// Motion losses take flattened L x 2(12N+4) sequences. L_diff works on whatever space it is
// given (training passes normalized features); the geometric terms expect world units.

LossValue l_diff(const Mat& x0, const Mat& x0_hat);
LossValue l_vel(const Mat& x0, const Mat& x0_hat, int joint_count);
/// Contact flags are read from x0 (> 0.5 counts as contact).
LossValue l_foot(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& skeleton);
LossValue l_bl(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& skeleton);
LossValue l_dm(const Mat& x0, const Mat& x0_hat, int joint_count, double threshold);
LossValue l_ro(const Mat& x0, const Mat& x0_hat, const motion::Skeleton& skeleton);

/// Facing yaw from the hip axis: atan2(-a_z, a_x) with a = left hip - right hip.
double facing_yaw(const Vec& positions, const motion::Skeleton& skeleton);

/// Plan loss of one sample: rows of `z_hat` are its plan projections, `targets` holds the
/// teacher embeddings of the whole batch and `positive` indexes this sample's row. The batch
/// loss is the mean of the per-sample values.
LossValue l_plan(const Mat& z_hat, const Mat& targets, int positive, double tau, PlanLossKind kind);

/// (1/6) sum_i w_i ||g_hat_i - g_i||^2, squared norm summed over channels.
LossValue l_freq(const Mat& g_hat, const Mat& g_target, const std::array<double, 6>& weights);

struct LossBreakdown {
  double diff = 0.0;
  double vel = 0.0;
  double foot = 0.0;
  double bl = 0.0;
  double dm = 0.0;
  double ro = 0.0;
  double plan = 0.0;
  double freq = 0.0;
  double motion = 0.0;  // diff + weighted geometric terms
  double total = 0.0;   // motion + weighted plan + weighted freq

  static const std::vector<std::string>& names();
  std::vector<double> values() const;
  LossBreakdown& operator+=(const LossBreakdown& other);
  LossBreakdown& operator*=(double s);
};

/// Fills `motion` and `total` from the component fields.
LossBreakdown l_total(LossBreakdown components, const LossWeights& weights);

}  // namespace interedit
