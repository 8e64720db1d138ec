#pragma once

#include "interedit/autograd.hpp"
#include "interedit/freq_descriptors.hpp"
#include "interedit/nn.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace interedit {

struct ModelConfig {
  int joint_count = 22;
  int blocks = 5;
  int heads = 16;
  int embed_dim = 512;      // C; motion tokens are 2C wide
  int plan_tokens = 16;     // N_M
  int freq_tokens = 6;      // N_f, fixed by the descriptor layout
  int plan_tap = 3;         // L_p, 1-based block index
  int freq_tap = 5;         // L_f, 1-based block index
  double freq_dropout = 0.04;
  int max_length = 200;
  int ffn_mult = 4;
  int source_layers = 2;
  int timesteps = 1000;     // valid t is 1..timesteps

  int person_width() const { return 12 * joint_count + 4; }
  int stripped_width() const { return 12 * joint_count; }
  int token_width() const { return 2 * embed_dim; }
  void validate() const;
};

/// Conditions for one denoiser call. With `drop` set both embeddings are replaced by zeros.
struct ConditionBundle {
  RowVec c_text;  // 1 x C
  RowVec c_src;   // 1 x C
  int t = 1;
  bool drop = false;
};

struct DenoiserOutput {
  Mat x0_hat;            // L x 2d_m
  Mat plan_projections;  // N_M x C
  Mat freq_decodes;      // 6 x d_f; empty when frequency tokens were removed
};

struct ForwardOptions {
  bool use_freq_tokens = true;
};

/// Tape handles for training. `freq_decodes` is invalid when frequency tokens were removed.
struct TapeOutputs {
  nn::Var x0_hat;
  nn::Var plan_projections;
  nn::Var freq_decodes;
};

class Denoiser {
 public:
  Denoiser(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  /// Source embedding from a normalized flattened sequence (L x 2d_m).
  RowVec encode_source(const Mat& source) const;
  nn::Var encode_source(nn::Tape& tape, const Mat& source) const;

  /// e_t = MLP(sinusoid(t)) + W_text c_text + W_src c_src.
  RowVec condition_embedding(int t, const RowVec& c_text, const RowVec& c_src) const;
  nn::Var condition_embedding(nn::Tape& tape, int t, nn::Var c_text, nn::Var c_src) const;

  /// Inference pass with precomputed source embedding.
  DenoiserOutput forward(const Mat& x_t, const ConditionBundle& cond, const freq::BandEnergyProfile& g_xt,
                         const ForwardOptions& options = {}) const;

  /// Training pass. The source encoder runs on the tape unless `drop` is set.
  TapeOutputs forward_tape(nn::Tape& tape, const Mat& x_t, int t, const RowVec& c_text, const Mat& source,
                           bool drop, const freq::BandEnergyProfile& g_xt, const ForwardOptions& options) const;

  /// LPA branch of one block, exposed for locality checks.
  Mat lpa(int block, const Mat& x, const RowVec& e_t) const;
  /// Learned merge of the global (transformer) and local (LPA) streams of one block.
  Mat fuse(int block, const Mat& global, const Mat& local) const;

 private:
  struct Block {
    nn::Linear ada;   // C -> 6 * 2C
    nn::Linear qkv;   // 2C -> 3 * 2C
    nn::Linear proj;  // 2C -> 2C
    nn::Linear ff1;
    nn::Linear ff2;
    nn::Linear lpa_ada1;  // C -> 2C
    nn::Conv1d lpa_conv3;
    nn::Linear lpa_ada2;
    nn::Conv1d lpa_conv1;
    nn::Linear fuse;      // 2C -> C
  };
  struct SourceLayer {
    nn::Linear qkv, proj, ff1, ff2;
  };

  nn::Var core(nn::Tape& tape, const Mat& x_t, nn::Var e_t, const freq::BandEnergyProfile& g_xt,
               const ForwardOptions& options, nn::Var* plan_out, nn::Var* freq_out) const;
  nn::Var block_forward(nn::Tape& tape, const Block& b, nn::Var x, nn::Var e_t) const;
  nn::Var lpa_tape(nn::Tape& tape, const Block& b, nn::Var x, nn::Var e_t) const;

  ModelConfig config_;
  nn::ParameterStore store_;

  nn::Linear in_proj_;
  nn::Linear time1_, time2_, w_text_, w_src_;
  nn::Linear src_in_;
  nn::Parameter* src_cls_ = nullptr;
  std::vector<SourceLayer> src_layers_;
  nn::Parameter* plan_tokens_ = nullptr;
  nn::Parameter* freq_pos_ = nullptr;
  std::vector<nn::Linear> freq_in_;
  std::vector<Block> blocks_;
  nn::Linear plan_head_;
  std::vector<nn::Linear> freq_heads_;
  nn::Linear final_ada_;
  nn::Linear out_proj_;
};

// Interleaved token layout; rows 2l / 2l+1 hold frame l.
nn::Var interleave(nn::Var a, nn::Var b);
std::pair<nn::Var, nn::Var> deinterleave_merge(nn::Var y);
Mat interleave(const Mat& a, const Mat& b);
std::pair<Mat, Mat> deinterleave_merge(const Mat& y);

}  // namespace interedit
