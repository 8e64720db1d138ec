#pragma once

#include "interedit/checkpoint.hpp"
#include "interedit/denoiser.hpp"
#include "interedit/diffusion.hpp"
#include "interedit/encoders.hpp"
#include "interedit/freq_descriptors.hpp"
#include "interedit/losses.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace interedit {

struct TrainConfig {
  int epochs = 1500;
  int batch_size = 32;
  double lr = 1e-4;
  int warmup_epochs = 10;
  double weight_decay = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  double cond_drop = 0.1;  // synchronized condition drop probability
  LossWeights losses;
  freq::BandConfig bands;

  void validate() const;
};

/// Decoupled weight decay Adam. Moments are keyed by parameter order in the store.
class AdamW {
 public:
  void step(nn::ParameterStore& store, double lr, const TrainConfig& config);
  std::int64_t steps() const { return t_; }
  void export_state(std::vector<NamedArray>& m, std::vector<NamedArray>& v, const nn::ParameterStore& store) const;
  void import_state(const std::vector<NamedArray>& m, const std::vector<NamedArray>& v, std::int64_t t);

 private:
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  std::int64_t t_ = 0;
};

/// A triplet with everything the loss needs precomputed once.
struct PreparedItem {
  Mat x0;           // normalized target
  Mat x0_world;     // target in world units
  Mat source;       // normalized source
  RowVec c_text;
  RowVec teacher;   // frozen teacher embedding of the target
  Mat g_target;     // band descriptors of the normalized target
};

struct StepInstrumentation {
  int items = 0;
  int cond_dropped = 0;
  int freq_dropped = 0;
  std::vector<int> timesteps;
};

struct StepResult {
  std::int64_t step = 0;
  LossBreakdown losses;
  double lr = 0.0;
  double grad_norm = 0.0;
  StepInstrumentation instrumentation;
};

class Trainer {
 public:
  Trainer(Denoiser& model, NoiseSchedule schedule, TrainConfig config, motion::DatasetStats stats,
          motion::Skeleton skeleton, std::uint64_t seed);

  PreparedItem prepare(const motion::EditTriplet& triplet, const TextEncoder& text,
                       const MotionEmbedder& teacher) const;

  /// Sets the step budget used by the learning-rate schedule.
  void set_schedule(std::int64_t steps_per_epoch);
  double lr_at(std::int64_t step) const;

  /// One optimizer update on the batch. Throws NonFiniteError naming the loss component.
  StepResult train_step(const std::vector<const PreparedItem*>& batch);

  /// Shuffles `items` with the trainer's generator and runs one step per batch.
  void train_epoch(const std::vector<PreparedItem>& items, const std::function<void(const StepResult&)>& on_step = {});

  /// Loss of one item at a fixed t and noise, without an update. `targets` holds the teacher
  /// rows of the scoring batch; `positive` is the item's row.
  LossBreakdown evaluate(const PreparedItem& item, int t, const Mat& noise, bool drop, bool use_freq,
                         const Mat& targets, int positive) const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }
  AdamW& optimizer() { return adam_; }
  const TrainConfig& config() const { return config_; }
  const motion::DatasetStats& stats() const { return stats_; }
  std::string rng_state() const;
  void set_rng_state(const std::string& state);

 private:
  LossBreakdown item_loss(nn::Tape& tape, const PreparedItem& item, int t, const Mat& noise, bool drop, bool use_freq,
                          const Mat& targets, int positive, double scale) const;

  Denoiser& model_;
  NoiseSchedule schedule_;
  TrainConfig config_;
  motion::DatasetStats stats_;
  motion::Skeleton skeleton_;
  std::mt19937_64 rng_;
  AdamW adam_;
  std::int64_t step_ = 0;
  std::int64_t steps_per_epoch_ = 1;
};

/// One JSON object per line: step, lr, grad_norm and every breakdown field.
void write_loss_record(std::ostream& os, const StepResult& r);
std::vector<StepResult> read_loss_log(const std::string& path);

}  // namespace interedit
