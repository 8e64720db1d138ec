#include "interedit/denoiser.hpp"

#include "interedit/motion_repr.hpp"

namespace interedit {

using nn::Init;
using nn::Linear;
using nn::Tape;
using nn::Var;

void ModelConfig::validate() const {
  require(joint_count >= 2, "model: joint_count must be >= 2");
  require(blocks >= 1, "model: blocks must be >= 1");
  require(heads >= 1 && embed_dim % heads == 0, "model: embed_dim must be divisible by heads");
  require(embed_dim % 2 == 0, "model: embed_dim must be even");
  require(plan_tokens >= 1, "model: plan_tokens must be >= 1");
  require(freq_tokens == freq::kDescriptorCount, "model: freq_tokens must be 6");
  require(plan_tap >= 1 && plan_tap <= blocks, "model: plan_tap must lie in [1, blocks]");
  require(freq_tap >= 1 && freq_tap <= blocks, "model: freq_tap must lie in [1, blocks]");
  require(freq_dropout >= 0.0 && freq_dropout <= 1.0, "model: freq_dropout must lie in [0, 1]");
  require(max_length >= 2, "model: max_length must be >= 2");
  require(ffn_mult >= 1 && source_layers >= 0, "model: bad ffn_mult or source_layers");
  require(timesteps >= 1, "model: timesteps must be >= 1");
}

namespace {

Var self_attention(Tape& tape, const Linear& qkv, const Linear& proj, Var x, int heads) {
  const Eigen::Index w = x.cols();
  Var h = qkv(tape, x);
  Var a = nn::attention(nn::slice_cols(h, 0, w), nn::slice_cols(h, w, w), nn::slice_cols(h, 2 * w, w), heads);
  return proj(tape, a);
}

Mat fuse_init(int c) {
  Mat w = Mat::Zero(2 * c, c);
  // Global stream carries each person twice (two role views), local stream once.
  w.topRows(c).diagonal().setConstant(0.25);
  w.bottomRows(c).diagonal().setConstant(0.5);
  return w;
}

}  // namespace

Denoiser::Denoiser(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng rng(seed);
  const int c = config_.embed_dim;
  const int d = config_.token_width();
  const int dm = config_.person_width();
  const int df = config_.stripped_width();
  auto& s = store_;

  in_proj_ = Linear::create(s, "in_proj", dm, c, rng);
  time1_ = Linear::create(s, "time.fc1", c, c, rng);
  time2_ = Linear::create(s, "time.fc2", c, c, rng);
  w_text_ = Linear::create(s, "cond.text", c, c, rng, Init::Xavier, false);
  w_src_ = Linear::create(s, "cond.src", c, c, rng, Init::Xavier, false);

  src_in_ = Linear::create(s, "src.in", 2 * df, c, rng);
  src_cls_ = &s.add("src.cls", nn::init_matrix(1, c, Init::Small, rng));
  for (int i = 0; i < config_.source_layers; ++i) {
    const std::string p = "src.layer" + std::to_string(i);
    src_layers_.push_back({Linear::create(s, p + ".qkv", c, 3 * c, rng), Linear::create(s, p + ".proj", c, c, rng),
                           Linear::create(s, p + ".ff1", c, config_.ffn_mult * c, rng),
                           Linear::create(s, p + ".ff2", config_.ffn_mult * c, c, rng)});
  }

  plan_tokens_ = &s.add("plan.tokens", nn::init_matrix(config_.plan_tokens, d, Init::Small, rng));
  freq_pos_ = &s.add("freq.pos", nn::init_matrix(config_.freq_tokens, d, Init::Small, rng));
  for (int i = 0; i < config_.freq_tokens; ++i)
    freq_in_.push_back(Linear::create(s, "freq.in" + std::to_string(i), df, d, rng));

  for (int b = 0; b < config_.blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    Block blk;
    blk.ada = Linear::create(s, p + ".ada", c, 6 * d, rng, Init::Zero);
    blk.qkv = Linear::create(s, p + ".qkv", d, 3 * d, rng);
    blk.proj = Linear::create(s, p + ".proj", d, d, rng);
    blk.ff1 = Linear::create(s, p + ".ff1", d, config_.ffn_mult * d, rng);
    blk.ff2 = Linear::create(s, p + ".ff2", config_.ffn_mult * d, d, rng);
    blk.lpa_ada1 = Linear::create(s, p + ".lpa.ada1", c, 2 * c, rng, Init::Zero);
    blk.lpa_conv3 = nn::Conv1d::create(s, p + ".lpa.conv3", c, c, 3, rng);
    blk.lpa_ada2 = Linear::create(s, p + ".lpa.ada2", c, 2 * c, rng, Init::Zero);
    blk.lpa_conv1 = nn::Conv1d::create(s, p + ".lpa.conv1", c, c, 1, rng, Init::Zero);
    blk.fuse = Linear::create(s, p + ".fuse", 2 * c, c, rng, Init::Zero);
    blk.fuse.weight->value = fuse_init(c);
    blocks_.push_back(blk);
  }

  plan_head_ = Linear::create(s, "plan.head", d, c, rng);
  for (int i = 0; i < config_.freq_tokens; ++i)
    freq_heads_.push_back(Linear::create(s, "freq.head" + std::to_string(i), d, df, rng));
  final_ada_ = Linear::create(s, "final.ada", c, 2 * c, rng, Init::Zero);
  out_proj_ = Linear::create(s, "out_proj", c, dm, rng, Init::Zero);
}

Var Denoiser::encode_source(Tape& tape, const Mat& source) const {
  const int c = config_.embed_dim;
  require_shape(source.cols() == 2 * config_.person_width(), "encode_source: feature width mismatch");
  require(source.rows() >= 1 && source.rows() <= config_.max_length, "encode_source: length exceeds max_length");
  const Mat stripped = motion::strip_contacts(source, config_.joint_count);
  Var x = src_in_(tape, tape.constant(stripped));
  Var seq = nn::concat_rows({tape.param(*src_cls_), x});
  seq = nn::add(seq, tape.constant(nn::sinusoidal(static_cast<int>(seq.rows()), c)));
  for (const auto& l : src_layers_) {
    seq = nn::add(seq, self_attention(tape, l.qkv, l.proj, nn::layer_norm(seq), config_.heads));
    seq = nn::add(seq, l.ff2(tape, nn::gelu(l.ff1(tape, nn::layer_norm(seq)))));
  }
  return nn::layer_norm(nn::slice_rows(seq, 0, 1));
}

RowVec Denoiser::encode_source(const Mat& source) const {
  Tape tape(false);
  return encode_source(tape, source).value();
}

Var Denoiser::condition_embedding(Tape& tape, int t, Var c_text, Var c_src) const {
  require(t >= 1 && t <= config_.timesteps, "condition_embedding: t=" + std::to_string(t) + " out of range");
  const int c = config_.embed_dim;
  require_shape(c_text.cols() == c && c_src.cols() == c && c_text.rows() == 1 && c_src.rows() == 1,
                "condition_embedding: condition width must equal embed_dim");
  Var ts = tape.constant(nn::sinusoidal(std::vector<double>{static_cast<double>(t)}, c));
  Var e = time2_(tape, nn::silu(time1_(tape, ts)));
  e = nn::add(e, w_text_(tape, c_text));
  return nn::add(e, w_src_(tape, c_src));
}

RowVec Denoiser::condition_embedding(int t, const RowVec& c_text, const RowVec& c_src) const {
  Tape tape(false);
  return condition_embedding(tape, t, tape.constant(c_text), tape.constant(c_src)).value();
}

Var Denoiser::lpa_tape(Tape& tape, const Block& b, Var x, Var e_t) const {
  const int c = config_.embed_dim;
  Var se = nn::silu(e_t);
  Var m1 = b.lpa_ada1(tape, se);
  Var m2 = b.lpa_ada2(tape, se);
  Var h = nn::modulate(nn::layer_norm(x), nn::slice_cols(m1, 0, c), nn::slice_cols(m1, c, c));
  h = b.lpa_conv3(tape, h);
  h = nn::modulate(nn::layer_norm(h), nn::slice_cols(m2, 0, c), nn::slice_cols(m2, c, c));
  return nn::add(x, b.lpa_conv1(tape, h));
}

Mat Denoiser::lpa(int block, const Mat& x, const RowVec& e_t) const {
  require(block >= 0 && block < config_.blocks, "lpa: block index out of range");
  require_shape(x.cols() == config_.embed_dim, "lpa: width must equal embed_dim");
  Tape tape(false);
  return lpa_tape(tape, blocks_[static_cast<std::size_t>(block)], tape.constant(x), tape.constant(e_t)).value();
}

Mat Denoiser::fuse(int block, const Mat& global, const Mat& local) const {
  require(block >= 0 && block < config_.blocks, "fuse: block index out of range");
  Tape tape(false);
  const auto& b = blocks_[static_cast<std::size_t>(block)];
  return b.fuse(tape, nn::concat_cols({tape.constant(global), tape.constant(local)})).value();
}

Var Denoiser::block_forward(Tape& tape, const Block& b, Var x, Var e_t) const {
  const int d = config_.token_width();
  Var mod = b.ada(tape, nn::silu(e_t));
  auto part = [&](int i) { return nn::slice_cols(mod, i * d, d); };
  Var h = nn::modulate(nn::layer_norm(x), part(0), part(1));
  x = nn::add(x, nn::mul_row(self_attention(tape, b.qkv, b.proj, h, config_.heads), part(2)));
  h = nn::modulate(nn::layer_norm(x), part(3), part(4));
  h = b.ff2(tape, nn::gelu(b.ff1(tape, h)));
  return nn::add(x, nn::mul_row(h, part(5)));
}

Var Denoiser::core(Tape& tape, const Mat& x_t, Var e_t, const freq::BandEnergyProfile& g_xt,
                   const ForwardOptions& options, Var* plan_out, Var* freq_out) const {
  const int c = config_.embed_dim;
  const int d = config_.token_width();
  const int dm = config_.person_width();
  const Eigen::Index length = x_t.rows();
  require_shape(x_t.cols() == 2 * dm, "denoiser: x_t width mismatch");
  require(length >= 1 && length <= config_.max_length, "denoiser: sequence length exceeds max_length");

  Var h_a = in_proj_(tape, tape.constant(x_t.leftCols(dm)));
  Var h_b = in_proj_(tape, tape.constant(x_t.rightCols(dm)));

  std::vector<Var> extra_parts{tape.param(*plan_tokens_)};
  if (options.use_freq_tokens) {
    require_shape(g_xt.values.rows() == freq::kDescriptorCount && g_xt.values.cols() == config_.stripped_width(),
                  "denoiser: band profile shape mismatch");
    std::vector<Var> f;
    for (int i = 0; i < config_.freq_tokens; ++i)
      f.push_back(freq_in_[static_cast<std::size_t>(i)](tape, tape.constant(g_xt.values.row(i))));
    extra_parts.push_back(nn::add(nn::concat_rows(f), tape.param(*freq_pos_)));
  }
  Var extras = nn::concat_rows(extra_parts);
  const Eigen::Index motion_rows = 2 * length;

  for (int bi = 0; bi < config_.blocks; ++bi) {
    const Block& b = blocks_[static_cast<std::size_t>(bi)];
    Var inter = interleave(h_a, h_b);
    if (bi == 0) inter = nn::add(inter, tape.constant(nn::sinusoidal(static_cast<int>(motion_rows), d)));
    Var y = block_forward(tape, b, nn::concat_rows({inter, extras}), e_t);
    extras = nn::slice_rows(y, motion_rows, y.rows() - motion_rows);
    auto [g_a, g_b] = deinterleave_merge(nn::slice_rows(y, 0, motion_rows));
    Var l_a = lpa_tape(tape, b, h_a, e_t);
    Var l_b = lpa_tape(tape, b, h_b, e_t);
    h_a = b.fuse(tape, nn::concat_cols({g_a, l_a}));
    h_b = b.fuse(tape, nn::concat_cols({g_b, l_b}));

    if (bi + 1 == config_.plan_tap && plan_out)
      *plan_out = plan_head_(tape, nn::layer_norm(nn::slice_rows(extras, 0, config_.plan_tokens)));
    if (bi + 1 == config_.freq_tap && options.use_freq_tokens && freq_out) {
      std::vector<Var> rows;
      for (int i = 0; i < config_.freq_tokens; ++i) {
        Var tok = nn::layer_norm(nn::slice_rows(extras, config_.plan_tokens + i, 1));
        rows.push_back(freq_heads_[static_cast<std::size_t>(i)](tape, tok));
      }
      *freq_out = nn::concat_rows(rows);
    }
  }

  Var m = final_ada_(tape, nn::silu(e_t));
  Var shift = nn::slice_cols(m, 0, c), scale = nn::slice_cols(m, c, c);
  Var out_a = out_proj_(tape, nn::modulate(nn::layer_norm(h_a), shift, scale));
  Var out_b = out_proj_(tape, nn::modulate(nn::layer_norm(h_b), shift, scale));
  return nn::concat_cols({out_a, out_b});
}

DenoiserOutput Denoiser::forward(const Mat& x_t, const ConditionBundle& cond, const freq::BandEnergyProfile& g_xt,
                                 const ForwardOptions& options) const {
  const int c = config_.embed_dim;
  Tape tape(false);
  const RowVec zero = RowVec::Zero(c);
  Var c_text = tape.constant(cond.drop ? zero : cond.c_text);
  Var c_src = tape.constant(cond.drop ? zero : cond.c_src);
  Var e = condition_embedding(tape, cond.t, c_text, c_src);
  Var plan, fr;
  Var x0 = core(tape, x_t, e, g_xt, options, &plan, &fr);
  DenoiserOutput out;
  out.x0_hat = x0.value();
  out.plan_projections = plan.value();
  if (fr.valid()) out.freq_decodes = fr.value();
  return out;
}

TapeOutputs Denoiser::forward_tape(Tape& tape, const Mat& x_t, int t, const RowVec& c_text, const Mat& source,
                                   bool drop, const freq::BandEnergyProfile& g_xt,
                                   const ForwardOptions& options) const {
  const int c = config_.embed_dim;
  Var ct = tape.constant(drop ? RowVec(RowVec::Zero(c)) : c_text);
  Var cs = drop ? tape.constant(RowVec::Zero(c)) : encode_source(tape, source);
  Var e = condition_embedding(tape, t, ct, cs);
  TapeOutputs out;
  out.x0_hat = core(tape, x_t, e, g_xt, options, &out.plan_projections, &out.freq_decodes);
  return out;
}

// ---- interleaving ------------------------------------------------------------

namespace {

std::vector<int> interleave_index(int length, bool swap) {
  std::vector<int> idx(static_cast<std::size_t>(2 * length));
  for (int l = 0; l < length; ++l) {
    idx[static_cast<std::size_t>(2 * l)] = swap ? length + l : l;
    idx[static_cast<std::size_t>(2 * l + 1)] = swap ? l : length + l;
  }
  return idx;
}

std::vector<int> parity_index(int length, int parity) {
  std::vector<int> idx(static_cast<std::size_t>(length));
  for (int l = 0; l < length; ++l) idx[static_cast<std::size_t>(l)] = 2 * l + parity;
  return idx;
}

}  // namespace

Var interleave(Var a, Var b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "interleave: person streams differ in shape");
  const int length = static_cast<int>(a.rows());
  Var both = nn::concat_rows({a, b});
  Var cii = nn::gather_rows(both, interleave_index(length, false));
  Var sym = nn::gather_rows(both, interleave_index(length, true));
  return nn::concat_cols({cii, sym});
}

std::pair<Var, Var> deinterleave_merge(Var y) {
  require_shape(y.rows() % 2 == 0, "deinterleave_merge: odd row count");
  require_shape(y.cols() % 2 == 0, "deinterleave_merge: odd channel count");
  const int length = static_cast<int>(y.rows() / 2);
  const Eigen::Index c = y.cols() / 2;
  Var v1 = nn::slice_cols(y, 0, c);
  Var v2 = nn::slice_cols(y, c, c);
  const auto even = parity_index(length, 0);
  const auto odd = parity_index(length, 1);
  Var a = nn::add(nn::gather_rows(v1, even), nn::gather_rows(v2, odd));
  Var b = nn::add(nn::gather_rows(v1, odd), nn::gather_rows(v2, even));
  return {a, b};
}

Mat interleave(const Mat& a, const Mat& b) {
  Tape tape(false);
  return interleave(tape.constant(a), tape.constant(b)).value();
}

std::pair<Mat, Mat> deinterleave_merge(const Mat& y) {
  Tape tape(false);
  auto [a, b] = deinterleave_merge(tape.constant(y));
  return {a.value(), b.value()};
}

}  // namespace interedit
