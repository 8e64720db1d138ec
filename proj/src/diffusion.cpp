#include "interedit/diffusion.hpp"

#include "interedit/motion_repr.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace interedit {

NoiseSchedule NoiseSchedule::cosine(int steps, double s) {
  require(steps >= 1, "cosine_schedule: T must be >= 1");
  NoiseSchedule ns;
  ns.steps = steps;
  ns.beta = Vec::Zero(steps + 1);
  ns.alpha = Vec::Ones(steps + 1);
  ns.alpha_bar = Vec::Ones(steps + 1);
  auto f = [&](double t) {
    const double c = std::cos((t / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  for (int t = 1; t <= steps; ++t) {
    const double ab_prev = f(t - 1.0) / f0;
    const double ab = f(static_cast<double>(t)) / f0;
    ns.beta[t] = std::min(1.0 - ab / ab_prev, 0.999);
    ns.alpha[t] = 1.0 - ns.beta[t];
    ns.alpha_bar[t] = ns.alpha_bar[t - 1] * ns.alpha[t];
  }
  return ns;
}

Mat q_sample(const NoiseSchedule& schedule, const Mat& x0, int t, const Mat& noise) {
  require(t >= 0 && t <= schedule.steps, "q_sample: t out of range");
  require_shape(x0.rows() == noise.rows() && x0.cols() == noise.cols(), "q_sample: noise shape mismatch");
  const double ab = schedule.alpha_bar[t];
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

void SamplerConfig::validate(int steps) const {
  require(ddim_steps >= 1 && ddim_steps <= steps, "sampler: ddim_steps must lie in [1, T]");
  require(eta >= 0.0 && eta <= 1.0, "sampler: eta must lie in [0, 1]");
  require(guidance >= 0.0 && guidance_text >= 0.0 && guidance_src >= 0.0, "sampler: guidance must be >= 0");
  require(cond_drop >= 0.0 && cond_drop <= 1.0, "sampler: cond_drop must lie in [0, 1]");
}

Mat scfg_predict(const X0Predictor& model, const Mat& x_t, int t, double gamma) {
  // Skip the branch with zero weight so gamma = 0 and 1 return a single branch exactly.
  if (gamma == 1.0) return model.predict(x_t, t, Branch::Joint);
  if (gamma == 0.0) return model.predict(x_t, t, Branch::Unconditional);
  return gamma * model.predict(x_t, t, Branch::Joint) + (1.0 - gamma) * model.predict(x_t, t, Branch::Unconditional);
}

Mat scfg_three_branch(const X0Predictor& model, const Mat& x_t, int t, double gamma_text, double gamma_src,
                      const SamplerConfig& config) {
  require(config.mode == GuidanceMode::ThreeBranch, "scfg_three_branch: three-branch guidance is not enabled");
  const Mat uncond = model.predict(x_t, t, Branch::Unconditional);
  const Mat src = model.predict(x_t, t, Branch::SourceOnly);
  Mat out = uncond + gamma_src * (src - uncond);
  if (gamma_text != 0.0) out += gamma_text * (model.predict(x_t, t, Branch::Joint) - src);
  return out;
}

std::vector<int> ddim_timesteps(int steps, int ddim_steps) {
  require(ddim_steps >= 1 && ddim_steps <= steps, "ddim: sub-schedule length must lie in [1, T]");
  std::vector<int> ts;
  if (ddim_steps == 1) return {steps};
  for (int i = 0; i < ddim_steps; ++i) {
    const double v = steps - static_cast<double>(i) * (steps - 1) / (ddim_steps - 1);
    ts.push_back(static_cast<int>(std::lround(v)));
  }
  return ts;
}

Mat gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Mat ddim_sample(const X0Predictor& model, const NoiseSchedule& schedule, const SamplerConfig& config, Mat x,
                std::uint64_t seed, const DdimObserver& observer) {
  config.validate(schedule.steps);
  const auto ts = ddim_timesteps(schedule.steps, config.ddim_steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    Mat x0 = config.mode == GuidanceMode::TwoBranch
                 ? scfg_predict(model, x, t, config.guidance)
                 : scfg_three_branch(model, x, t, config.guidance_text, config.guidance_src, config);
    if (!x0.allFinite()) throw NonFiniteError("ddim: non-finite prediction at step", static_cast<std::int64_t>(i));
    if (observer) observer(static_cast<int>(i), t, x0);
    const double ab = schedule.alpha_bar[t];
    const double ab_prev = schedule.alpha_bar[t_prev];
    const Mat eps = (x - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
    if (t_prev == 0) {
      x = std::move(x0);
      break;
    }
    double sigma = 0.0;
    if (config.eta > 0.0) sigma = config.eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev));
    x = std::sqrt(ab_prev) * x0 + std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma)) * eps;
    if (sigma > 0.0) {
      for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] += sigma * normal(rng);
    }
    if (!x.allFinite()) throw NonFiniteError("ddim: non-finite state at step", static_cast<std::int64_t>(i));
  }
  return x;
}

DenoiserPredictor::DenoiserPredictor(const Denoiser& model, RowVec c_text, RowVec c_src, freq::BandConfig bands,
                                     bool use_freq_tokens)
    : model_(model), c_text_(std::move(c_text)), c_src_(std::move(c_src)), bands_(bands), use_freq_(use_freq_tokens) {}

Mat DenoiserPredictor::predict(const Mat& x_t, int t, Branch branch) const {
  ConditionBundle cond;
  cond.t = t;
  cond.c_text = c_text_;
  cond.c_src = c_src_;
  if (branch == Branch::Unconditional) cond.drop = true;
  if (branch == Branch::SourceOnly) cond.c_text = RowVec::Zero(c_text_.size());
  freq::BandEnergyProfile g;
  if (use_freq_)
    g = freq::band_descriptors(motion::strip_contacts(x_t, model_.config().joint_count), bands_);
  return model_.forward(x_t, cond, g, {use_freq_}).x0_hat;
}

}  // namespace interedit
