#pragma once

#include "interedit/denoiser.hpp"
#include "interedit/diffusion.hpp"
#include "interedit/encoders.hpp"
#include "interedit/freq_descriptors.hpp"
#include "interedit/motion_repr.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace interedit::eval {

/// Percentage of queries whose true candidate is within the top K by cosine. Rows must be unit
/// norm. Equal scores rank the lower candidate index first.
double recall_at_k(const Mat& queries, const Mat& candidates, const std::vector<int>& truth, int k);

struct RetrievalScores {
  std::array<double, 3> g2t{};  // R@1, R@2, R@3 in percent
  std::array<double, 3> g2s{};
};

/// Row i of each matrix belongs to test triplet i.
RetrievalScores g2t_g2s(const Mat& generated, const Mat& sources, const Mat& targets);

/// Frechet distance between Gaussian fits of two embedding sets (rows are samples).
double fid(const Mat& generated, const Mat& real);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Mean and two-sided t-interval half-width t_{1-a/2, n-1} * std / sqrt(n). n = 1 gives 0.
Interval confidence_interval(const std::vector<double>& values, double level = 0.95);

struct EvalReport {
  std::array<Interval, 3> g2t{};
  std::array<Interval, 3> g2s{};
  Interval fid;
  int runs = 0;
  std::string checkpoint_id;
  std::vector<std::uint64_t> seeds;
  std::vector<RetrievalScores> per_run;
  std::vector<double> per_run_fid;
  std::vector<std::string> warnings;

  /// Fixed-width table: g2t R@1..3, g2s R@1..3, FID as mean +- half-width.
  std::string table() const;
  std::string to_json() const;
};

/// Everything needed to turn (source, instruction) into an edited motion.
struct Editor {
  const Denoiser& model;
  const NoiseSchedule& schedule;
  SamplerConfig sampler;
  motion::DatasetStats stats;
  const TextEncoder& text;
  freq::BandConfig bands;
  bool use_freq_tokens = true;

  /// Edited motion in world units, same shape as `source_world`.
  Mat edit(const Mat& source_world, const std::string& instruction, std::uint64_t seed) const;
};

/// Per-item sampling seed derived from a run seed.
std::uint64_t item_seed(std::uint64_t run_seed, std::size_t item);

struct EvalRun {
  std::vector<Mat> generated;  // world units, one per test triplet
  RetrievalScores scores;
  double fid = 0.0;
};

EvalRun evaluate_run(const Editor& editor, const MotionEmbedder& embedder,
                     const std::vector<motion::EditTriplet>& test, std::uint64_t seed);

/// Repeats evaluate_run over `seeds` and aggregates confidence intervals.
EvalReport run_eval(const Editor& editor, const MotionEmbedder& embedder, const std::vector<motion::EditTriplet>& test,
                    const std::vector<std::uint64_t>& seeds, const std::string& checkpoint_id);

}  // namespace interedit::eval
