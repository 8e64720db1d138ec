#pragma once

#include "interedit/denoiser.hpp"
#include "interedit/freq_descriptors.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace interedit {

/// Tables are indexed by t = 0..T; entry 0 is the clean limit (alpha_bar = 1).
struct NoiseSchedule {
  int steps = 0;
  Vec beta;
  Vec alpha;
  Vec alpha_bar;

  /// alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) pi/2); beta clipped at 0.999 and
  /// alpha_bar rebuilt as the running product so both views agree exactly.
  static NoiseSchedule cosine(int steps, double s = 0.008);
};

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, for t in 0..T.
Mat q_sample(const NoiseSchedule& schedule, const Mat& x0, int t, const Mat& noise);

enum class GuidanceMode { TwoBranch, ThreeBranch };

struct SamplerConfig {
  int ddim_steps = 50;
  double eta = 0.0;
  double guidance = 3.5;        // two-branch gamma
  double guidance_text = 3.5;   // three-branch weights
  double guidance_src = 1.0;
  double cond_drop = 0.1;       // training-time synchronized drop probability
  GuidanceMode mode = GuidanceMode::TwoBranch;

  void validate(int steps) const;
};

enum class Branch { Joint, Unconditional, SourceOnly };

/// Anything that maps (x_t, t, branch) to a clean-motion estimate.
class X0Predictor {
 public:
  virtual ~X0Predictor() = default;
  virtual Mat predict(const Mat& x_t, int t, Branch branch) const = 0;
};

/// gamma * D(c_text, c_src) + (1 - gamma) * D(0, 0).
Mat scfg_predict(const X0Predictor& model, const Mat& x_t, int t, double gamma);

/// uncond + g_src (src_only - uncond) + g_text (joint - src_only). Throws unless the sampler
/// is configured for three-branch guidance.
Mat scfg_three_branch(const X0Predictor& model, const Mat& x_t, int t, double gamma_text, double gamma_src,
                      const SamplerConfig& config);

/// Evenly spaced, strictly decreasing, first entry T, last entry 1.
std::vector<int> ddim_timesteps(int steps, int ddim_steps);

/// Per-step observer: (step index, t, x0_hat).
using DdimObserver = std::function<void(int, int, const Mat&)>;

/// Runs the guided DDIM chain from x_T. `seed` only matters for eta > 0.
Mat ddim_sample(const X0Predictor& model, const NoiseSchedule& schedule, const SamplerConfig& config, Mat x_T,
                std::uint64_t seed, const DdimObserver& observer = {});

/// Draws x_T ~ N(0, I) of the given shape from `seed`.
Mat gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// Wraps a Denoiser with fixed conditions. Frequency tokens are recomputed from every x_t.
class DenoiserPredictor final : public X0Predictor {
 public:
  DenoiserPredictor(const Denoiser& model, RowVec c_text, RowVec c_src, freq::BandConfig bands = {},
                    bool use_freq_tokens = true);
  Mat predict(const Mat& x_t, int t, Branch branch) const override;

 private:
  const Denoiser& model_;
  RowVec c_text_;
  RowVec c_src_;
  freq::BandConfig bands_;
  bool use_freq_;
};

}  // namespace interedit
