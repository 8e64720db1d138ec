// Acceptance harness: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to
// run a subset (e.g. `acceptance 1 2 3`).

#include "interedit/checkpoint.hpp"
#include "interedit/data_pipeline.hpp"
#include "interedit/denoiser.hpp"
#include "interedit/diffusion.hpp"
#include "interedit/encoders.hpp"
#include "interedit/eval.hpp"
#include "interedit/freq_descriptors.hpp"
#include "interedit/losses.hpp"
#include "interedit/run_config.hpp"
#include "interedit/synth.hpp"
#include "interedit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace interedit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Random small weights everywhere so zero-initialized output layers stop hiding the conditions.
void perturb(Denoiser& model, std::uint64_t seed, double sd = 0.05) {
  std::mt19937_64 rng(seed);
  for (auto& p : model.params().all()) p->value += random_mat(p->value.rows(), p->value.cols(), rng, sd);
}

// ---- 1 -------------------------------------------------------------------

Outcome dct_oracle() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int len : {8, 16, 200}) {
    const Mat x = random_mat(len, 100, rng);
    Mat naive(len, 100);
    for (int k = 0; k < len; ++k) {
      const double s = k == 0 ? std::sqrt(1.0 / len) : std::sqrt(2.0 / len);
      for (int c = 0; c < 100; ++c) {
        double acc = 0.0;
        for (int n = 0; n < len; ++n) acc += x(n, c) * std::cos(std::numbers::pi / len * (n + 0.5) * k);
        naive(k, c) = s * acc;
      }
    }
    worst = std::max(worst, (freq::dct(x) - naive).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-9, fmt("max |dct - naive| = %.3g over L in {8,16,200}", worst)};
}

// ---- 2 -------------------------------------------------------------------

Outcome band_bookkeeping() {
  std::mt19937_64 rng(2);
  freq::BandConfig cfg;
  double worst = 0.0;
  bool sizes_ok = true;
  std::string sizes;
  for (int len : {16, 40, 200}) {
    const auto bands = freq::band_partition(len, cfg);
    const double cut[4] = {0.0, cfg.r_low, cfg.r_mid, cfg.r_high};
    for (int b = 0; b < 3; ++b) {
      int expect_begin = -1, expect_size = 0;
      for (int k = 0; k < len; ++k) {
        const double r = static_cast<double>(k) / len;
        if (r >= cut[b] && r < cut[b + 1]) {
          if (expect_begin < 0) expect_begin = k;
          ++expect_size;
        }
      }
      if (bands[b].size() != expect_size || (expect_size > 0 && bands[b].begin != expect_begin)) sizes_ok = false;
      const Mat c = random_mat(len, 30, rng);
      const RowVec e = freq::band_energy(c, bands[b], 0.0);
      const RowVec lhs = bands[b].size() * e.array().square();
      const RowVec rhs = c.middleRows(bands[b].begin, bands[b].size()).array().square().colwise().sum();
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    if (len == 200) {
      sizes = fmt("%d/%d/%d", bands[0].size(), bands[1].size(), bands[2].size());
      sizes_ok = sizes_ok && bands[0].size() == 16 && bands[1].size() == 34 && bands[2].size() == 20;
    }
  }
  return {sizes_ok && worst <= 1e-9, fmt("energy identity err %.3g, L=200 sizes %s", worst, sizes.c_str())};
}

// ---- 3 -------------------------------------------------------------------

Outcome interleave_contract() {
  // Hand-computed L=2, C=1 case.
  Mat a(2, 1), b(2, 1);
  a << 1, 2;
  b << 10, 20;
  Mat expect_y(4, 2);
  expect_y << 1, 10, 10, 1, 2, 20, 20, 2;
  const Mat y = interleave(a, b);
  bool ok = y == expect_y;
  const auto [ra, rb] = deinterleave_merge(y);
  ok = ok && ra == 2.0 * a && rb == 2.0 * b;

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 16), width(1, 8);
  int trials = 0;
  for (int i = 0; i < 200; ++i) {
    const int l = len(rng), c = width(rng);
    const Mat xa = random_mat(l, c, rng), xb = random_mat(l, c, rng);
    const Mat yy = interleave(xa, xb);
    bool layout = yy.rows() == 2 * l && yy.cols() == 2 * c;
    for (int f = 0; f < l && layout; ++f) {
      layout = yy.row(2 * f).leftCols(c) == xa.row(f) && yy.row(2 * f + 1).leftCols(c) == xb.row(f) &&
               yy.row(2 * f).rightCols(c) == xb.row(f) && yy.row(2 * f + 1).rightCols(c) == xa.row(f);
    }
    const auto [ma, mb] = deinterleave_merge(yy);
    // Tape path must agree with the plain one.
    nn::Tape tape(false);
    const auto [va, vb] = deinterleave_merge(interleave(tape.constant(xa), tape.constant(xb)));
    ok = ok && layout && ma == 2.0 * xa && mb == 2.0 * xb && va.value() == ma && vb.value() == mb;
    ++trials;
  }
  return {ok, fmt("L=2 pinned case and %d random round trips (L in 1..16) exact", trials)};
}

// ---- 4 -------------------------------------------------------------------

ModelConfig desk_model() { return RunConfig::desk().model; }

Outcome scfg_algebra() {
  ModelConfig mc = desk_model();
  mc.joint_count = 5;
  mc.max_length = 16;
  Denoiser model(mc, 4);
  perturb(model, 44);
  std::mt19937_64 rng(4);
  const int width = 2 * mc.person_width();
  const Mat x_t = random_mat(12, width, rng);
  const RowVec c_text = random_mat(1, mc.embed_dim, rng).row(0);
  const Mat source = random_mat(12, width, rng);
  const RowVec c_src = model.encode_source(source);
  DenoiserPredictor pred(model, c_text, c_src);
  const int t = 57;
  const Mat cond = pred.predict(x_t, t, Branch::Joint);
  const Mat uncond = pred.predict(x_t, t, Branch::Unconditional);
  double worst = 0.0;
  for (double g : {0.0, 1.0, 3.5}) {
    const Mat expect = uncond + g * (cond - uncond);
    worst = std::max(worst, (scfg_predict(pred, x_t, t, g) - expect).cwiseAbs().maxCoeff());
  }
  const double gap = (cond - uncond).cwiseAbs().maxCoeff();

  // Synchronized drop: the conditional call with drop set is the unconditional call.
  freq::BandEnergyProfile g = freq::band_descriptors(motion::strip_contacts(x_t, mc.joint_count), {});
  const Mat dropped = model.forward(x_t, {c_text, c_src, t, true}, g).x0_hat;
  const Mat zeros = model.forward(x_t, {RowVec::Zero(mc.embed_dim), RowVec::Zero(mc.embed_dim), t, false}, g).x0_hat;
  nn::Tape tape(false);
  const Mat taped = model.forward_tape(tape, x_t, t, c_text, source, true, g, {}).x0_hat.value();
  const bool exact = dropped == uncond && zeros == uncond && taped == uncond;
  return {worst <= 1e-6 && exact && gap > 1e-6,
          fmt("max blend err %.3g (branch gap %.3g), dropped == uncond exactly: %s", worst, gap,
              exact ? "yes" : "no")};
}

// ---- 5 -------------------------------------------------------------------

double fd_rel_error(const std::function<LossValue(const Mat&)>& f, const Mat& at) {
  const LossValue a = f(at);
  Mat num(at.rows(), at.cols());
  const double h = 1e-6;
  Mat x = at;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f(x).value;
    x.data()[i] = keep - h;
    const double dn = f(x).value;
    x.data()[i] = keep;
    num.data()[i] = (up - dn) / (2 * h);
  }
  const double denom = std::max(num.norm(), 1e-12);
  return (a.grad - num).norm() / denom;
}

Outcome gradient_check() {
  const int nj = 5, len = 8;
  const motion::Skeleton sk = motion::Skeleton::chain(nj);
  const motion::FeatureLayout lay{nj};
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coin(0, 1);
  Mat x0 = random_mat(len, lay.sequence_width(), rng, 0.6);
  for (int p = 0; p < 2; ++p)
    for (int l = 0; l < len; ++l)
      for (int c = 0; c < 4; ++c) x0(l, p * lay.person_width() + lay.contact_offset() + c) = coin(rng);
  const Mat x_hat = x0 + random_mat(len, lay.sequence_width(), rng, 0.3);

  std::vector<std::pair<std::string, double>> errs;
  errs.emplace_back("diff", fd_rel_error([&](const Mat& y) { return l_diff(x0, y); }, x_hat));
  errs.emplace_back("vel", fd_rel_error([&](const Mat& y) { return l_vel(x0, y, nj); }, x_hat));
  errs.emplace_back("foot", fd_rel_error([&](const Mat& y) { return l_foot(x0, y, sk); }, x_hat));
  errs.emplace_back("bl", fd_rel_error([&](const Mat& y) { return l_bl(x0, y, sk); }, x_hat));
  errs.emplace_back("dm", fd_rel_error([&](const Mat& y) { return l_dm(x0, y, nj, 1.0); }, x_hat));
  errs.emplace_back("ro", fd_rel_error([&](const Mat& y) { return l_ro(x0, y, sk); }, x_hat));
  const Mat z = random_mat(4, 16, rng);
  const Mat targets = random_mat(3, 16, rng);
  for (auto kind : {PlanLossKind::InfoNCE, PlanLossKind::Cosine, PlanLossKind::MSE}) {
    errs.emplace_back(std::string("plan/") + plan_loss_kind_name(kind),
                      fd_rel_error([&](const Mat& y) { return l_plan(y, targets, 1, 0.07, kind); }, z));
  }
  const Mat g = random_mat(6, 12 * nj, rng).cwiseAbs();
  const Mat g_hat = g + random_mat(6, 12 * nj, rng, 0.2);
  errs.emplace_back("freq",
                    fd_rel_error([&](const Mat& y) { return l_freq(y, g, {1.0, 1.0, 0.25, 1.0, 1.0, 0.25}); }, g_hat));
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [n, e] : errs) {
    if (!(e <= worst)) {
      worst = e;
      worst_name = n;
    }
  }
  return {worst <= 1e-4, fmt("%zu losses, worst relative error %.3g (%s)", errs.size(), worst, worst_name.c_str())};
}

// ---- 6 -------------------------------------------------------------------

Outcome diffusion_stats() {
  const int T = 1000;
  const NoiseSchedule s = NoiseSchedule::cosine(T);
  const int n = 100000;
  const double values[3] = {-1.5, 0.3, 2.0};
  Mat x0(n, 3);
  for (int c = 0; c < 3; ++c) x0.col(c).setConstant(values[c]);
  double worst_z = 0.0;
  for (int t : {1, T / 2, T}) {
    const Mat noise = gaussian(n, 3, 600 + static_cast<std::uint64_t>(t));
    const Mat xt = q_sample(s, x0, t, noise);
    const double ab = s.alpha_bar[t];
    const double var = 1.0 - ab;
    for (int c = 0; c < 3; ++c) {
      const double mean = xt.col(c).mean();
      const double emp_var = (xt.col(c).array() - mean).square().sum() / (n - 1);
      const double z_mean = std::abs(mean - std::sqrt(ab) * values[c]) / std::sqrt(var / n);
      const double z_var = std::abs(emp_var - var) / (var * std::sqrt(2.0 / (n - 1)));
      worst_z = std::max({worst_z, z_mean, z_var});
    }
  }
  return {worst_z <= 4.0, fmt("worst deviation %.2f standard errors at t in {1, %d, %d}", worst_z, T / 2, T)};
}

// ---- 7 -------------------------------------------------------------------

struct ConstantModel final : X0Predictor {
  Mat value;
  Mat predict(const Mat&, int, Branch) const override { return value; }
};

Outcome ddim_checks() {
  ModelConfig mc = desk_model();
  mc.joint_count = 5;
  mc.max_length = 16;
  Denoiser model(mc, 7);
  perturb(model, 77);
  std::mt19937_64 rng(7);
  const int width = 2 * mc.person_width();
  const RowVec c_text = random_mat(1, mc.embed_dim, rng).row(0);
  const RowVec c_src = model.encode_source(random_mat(10, width, rng));
  DenoiserPredictor pred(model, c_text, c_src);
  const NoiseSchedule sched = NoiseSchedule::cosine(mc.timesteps);
  double det = 0.0;
  for (double eta : {0.0, 0.5}) {
    SamplerConfig sc;
    sc.ddim_steps = 20;
    sc.eta = eta;
    const Mat a = ddim_sample(pred, sched, sc, gaussian(10, width, 70), 71);
    const Mat b = ddim_sample(pred, sched, sc, gaussian(10, width, 70), 71);
    det = std::max(det, (a - b).cwiseAbs().maxCoeff());
  }

  ConstantModel stub;
  stub.value = random_mat(10, width, rng);
  double stub_err = 0.0;
  bool first_step_ok = true;
  for (int steps : {1, 2, 50}) {
    SamplerConfig sc;
    sc.ddim_steps = steps;
    int seen = 0;
    const Mat out = ddim_sample(stub, sched, sc, gaussian(10, width, 72), 73, [&](int i, int, const Mat& x0) {
      if (i == 0) first_step_ok = first_step_ok && (x0 - stub.value).cwiseAbs().maxCoeff() <= 1e-12;
      ++seen;
    });
    stub_err = std::max(stub_err, (out - stub.value).cwiseAbs().maxCoeff());
  }
  return {det <= 1e-6 && stub_err <= 1e-12 && first_step_ok,
          fmt("same-seed diff %.3g; stub output err %.3g", det, stub_err)};
}

// ---- shared training helpers ----------------------------------------------

std::vector<motion::EditTriplet> synth_set(int count, const RunConfig& rc, std::uint64_t seed_base) {
  std::vector<motion::EditTriplet> out;
  const auto& cat = synth::catalog();
  synth::SynthOptions so;
  so.fps = rc.synth.fps;
  for (int i = 0; i < count; ++i) {
    const auto& sc = cat[static_cast<std::size_t>(i) % cat.size()];
    const bool second = (i / static_cast<int>(cat.size())) % 2 == 1;
    out.push_back(synth::synth_generate(sc.id, second ? sc.second_label : sc.first_label, rc.synth.length,
                                        seed_base + static_cast<std::uint64_t>(i), so));
  }
  return out;
}

motion::DatasetStats stats_of(const std::vector<motion::EditTriplet>& ts) {
  std::vector<Mat> all;
  for (const auto& t : ts) {
    all.push_back(motion::flatten(t.source));
    all.push_back(motion::flatten(t.target));
  }
  return motion::fit_stats(all);
}

// ---- 8 -------------------------------------------------------------------

Outcome overfit() {
  RunConfig rc = RunConfig::desk();
  const int steps = 2000;
  const auto triplets = synth_set(4, rc, 800);
  const auto stats = stats_of(triplets);
  const motion::Skeleton sk = motion::Skeleton::interhuman22();
  Denoiser model(rc.model, 8);
  TrainConfig tc = rc.train;
  tc.batch_size = 4;
  tc.epochs = steps;
  Trainer trainer(model, NoiseSchedule::cosine(rc.model.timesteps), tc, stats, sk, 81);
  trainer.set_schedule(1);
  HashedTextEncoder text(rc.model.embed_dim, rc.encoders.text_seed);
  PooledProjectionEmbedder teacher(stats, sk.joint_count, rc.model.embed_dim, rc.encoders.teacher_seed);
  std::vector<PreparedItem> items;
  for (const auto& t : triplets) items.push_back(trainer.prepare(t, text, teacher));
  Mat targets(4, rc.model.embed_dim);
  for (int i = 0; i < 4; ++i) targets.row(i) = items[static_cast<std::size_t>(i)].teacher;

  // Fixed probe: conditional loss averaged over every t in 1..T (the training distribution of t)
  // with fixed noise per (item, t).
  std::vector<int> probe_t;
  for (int t = 1; t <= rc.model.timesteps; ++t) probe_t.push_back(t);
  auto probe = [&](double& diff, double& fr) {
    diff = fr = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (int t : probe_t) {
        const Mat noise = gaussian(items[i].x0.rows(), items[i].x0.cols(), 9000 + 31 * i + static_cast<std::size_t>(t));
        const LossBreakdown b = trainer.evaluate(items[i], t, noise, false, true, targets, static_cast<int>(i));
        diff += b.diff;
        fr += b.freq;
        ++n;
      }
    }
    diff /= n;
    fr /= n;
  };
  double d0, f0, d1, f1;
  probe(d0, f0);
  for (int s = 0; s < steps; ++s) trainer.train_epoch(items);
  probe(d1, f1);
  const double drop = 1.0 - f1 / f0;
  return {d1 < 0.01 && drop >= 0.9,
          fmt("L_diff %.4g -> %.4g, L_freq %.4g -> %.4g (%.1f%% reduction) after %d steps", d0, d1, f0, f1,
              100.0 * drop, steps)};
}

// ---- 9 -------------------------------------------------------------------

struct BenchResult {
  double r1 = 0.0;
  double closer = 0.0;
  double chance = 0.0;
  double train_seconds = 0.0;
};

BenchResult toy_bench(const LossWeights& weights, const pipeline::Split& split, const RunConfig& rc) {
  const auto stats = stats_of(split.train);
  const motion::Skeleton sk = motion::Skeleton::interhuman22();
  Denoiser model(rc.model, rc.seed + 9);
  TrainConfig tc = rc.train;
  tc.losses = weights;
  const NoiseSchedule sched = NoiseSchedule::cosine(rc.model.timesteps);
  Trainer trainer(model, sched, tc, stats, sk, rc.seed + 91);
  const auto n_train = static_cast<std::int64_t>(split.train.size());
  trainer.set_schedule((n_train + tc.batch_size - 1) / tc.batch_size);
  HashedTextEncoder text(rc.model.embed_dim, rc.encoders.text_seed);
  PooledProjectionEmbedder teacher(stats, sk.joint_count, rc.model.embed_dim, rc.encoders.teacher_seed,
                                   rc.encoders.teacher_segments);
  std::vector<PreparedItem> items;
  for (const auto& t : split.train) items.push_back(trainer.prepare(t, text, teacher));
  const auto t0 = std::chrono::steady_clock::now();
  for (int e = 0; e < tc.epochs; ++e) trainer.train_epoch(items);
  BenchResult r;
  r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  PooledProjectionEmbedder retrieval(stats, sk.joint_count, rc.encoders.retrieval_dim, rc.encoders.retrieval_seed,
                                     rc.encoders.teacher_segments);
  eval::Editor editor{model, sched, rc.sampler, stats, text, tc.bands, true};
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < rc.eval.runs; ++i) seeds.push_back(1000 + static_cast<std::uint64_t>(i));
  int closer = 0, total = 0;
  double r1 = 0.0;
  for (std::uint64_t s : seeds) {
    const eval::EvalRun run = eval::evaluate_run(editor, retrieval, split.test, s);
    r1 += run.scores.g2t[0];
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      const RowVec tgt = retrieval.embed(motion::flatten(split.test[i].target));
      const RowVec src = retrieval.embed(motion::flatten(split.test[i].source));
      const RowVec gen = retrieval.embed(run.generated[i]);
      closer += gen.dot(tgt) > src.dot(tgt) ? 1 : 0;
      ++total;
    }
  }
  r.r1 = r1 / static_cast<double>(seeds.size());
  r.closer = static_cast<double>(closer) / total;
  r.chance = 100.0 / static_cast<double>(split.test.size());
  return r;
}

Outcome toy_benchmark() {
  RunConfig rc = RunConfig::desk();
  const auto triplets = synth_set(200, rc, 0);
  std::set<std::string> scenarios;
  for (const auto& t : triplets) scenarios.insert(t.provenance.scenario_id);
  const pipeline::Split split = pipeline::split_triplets(triplets, rc.pipeline.split, rc.seed);

  const BenchResult full = toy_bench(rc.train.losses, split, rc);
  LossWeights ablated = rc.train.losses;
  ablated.plan = 0.0;
  ablated.freq = 0.0;
  const BenchResult abl = toy_bench(ablated, split, rc);
  const bool ok = scenarios.size() >= 8 && full.r1 >= 3.0 * full.chance && full.closer >= 0.7 &&
                  full.train_seconds <= 1800.0 && abl.r1 < full.r1;
  return {ok, fmt("%zu scenarios, test %zu: g2t R@1 %.1f%% (chance %.1f%%), closer-than-source %.1f%%, "
                  "ablation R@1 %.1f%% (closer %.1f%%), train %.0f s",
                  scenarios.size(), split.test.size(), full.r1, full.chance, 100.0 * full.closer, abl.r1,
                  100.0 * abl.closer, full.train_seconds)};
}

// ---- 10 ------------------------------------------------------------------

Outcome mining_fidelity() {
  const int clips = 100, len = 120, win = 40, nj = 22;
  const motion::FeatureLayout lay{nj};
  std::mt19937_64 rng(10);
  std::vector<Mat> feats;
  for (int c = 0; c < clips; ++c) {
    // Smooth random walk per channel.
    Mat m(len, lay.sequence_width());
    m.row(0) = random_mat(1, m.cols(), rng).row(0);
    for (int l = 1; l < len; ++l) m.row(l) = 0.9 * m.row(l - 1) + 0.45 * random_mat(1, m.cols(), rng).row(0);
    feats.push_back(m);
  }
  // Plant 50 cross-clip pairs: window w of clip 2p is copied, lightly perturbed, into window w of
  // clip 2p+1. Only non-overlapping window slots (0, 2, 4) are used.
  std::set<std::pair<std::string, std::string>> planted;
  auto cid = [](int c) { return "clip" + std::to_string(1000 + c); };
  std::uniform_int_distribution<int> slot(0, 2);
  for (int p = 0; p < 50; ++p) {
    const int a = 2 * p, b = 2 * p + 1, w = 2 * slot(rng);
    const int start = w * win / 2;
    feats[static_cast<std::size_t>(b)].middleRows(start, win) =
        feats[static_cast<std::size_t>(a)].middleRows(start, win) + random_mat(win, lay.sequence_width(), rng, 0.7);
    const std::string ka = cid(a) + "#" + std::to_string(w), kb = cid(b) + "#" + std::to_string(w);
    planted.insert({std::min(ka, kb), std::max(ka, kb)});
  }
  std::vector<pipeline::Window> windows;
  for (int c = 0; c < clips; ++c) {
    motion::TwoPersonSequence seq = motion::unflatten(feats[static_cast<std::size_t>(c)], nj, 30.0);
    seq.clip_id = cid(c);
    seq.scenario_id = "noise";
    auto seg = pipeline::window_segment(seq, win, 0.5);
    for (auto& w : seg.windows) windows.push_back(std::move(w));
  }
  const motion::DatasetStats stats = motion::fit_stats(feats);
  PooledProjectionEmbedder emb(stats, nj, 64, 303);
  const Mat e = pipeline::embed_windows(windows, emb);
  std::vector<motion::WindowRef> refs;
  for (const auto& w : windows) refs.push_back(w.ref);
  const int k = 2;
  const auto matches = pipeline::retrieve_topk(e, refs, e, refs, k);

  // Exhaustive oracle: full sort of every other-clip window.
  bool oracle_ok = matches.size() == windows.size() * static_cast<std::size_t>(k);
  for (std::size_t q = 0; q < windows.size() && oracle_ok; ++q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t d = 0; d < windows.size(); ++d) {
      if (refs[d].clip_id == refs[q].clip_id) continue;
      all.emplace_back(e.row(static_cast<Eigen::Index>(q)).dot(e.row(static_cast<Eigen::Index>(d))), d);
    }
    std::sort(all.begin(), all.end(), [&](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      const auto& rx = refs[x.second];
      const auto& ry = refs[y.second];
      return std::tie(rx.clip_id, rx.window_index) < std::tie(ry.clip_id, ry.window_index);
    });
    for (int r = 0; r < k; ++r) {
      const auto& m = matches[q * k + static_cast<std::size_t>(r)];
      oracle_ok = oracle_ok && m.query == refs[q] && m.rank == r + 1 &&
                  m.neighbor == refs[all[static_cast<std::size_t>(r)].second] &&
                  std::abs(m.similarity - all[static_cast<std::size_t>(r)].first) <= 1e-12;
    }
  }
  const auto mined = pipeline::mine_candidates(matches, windows, {});
  int hits = 0;
  std::set<std::pair<std::string, std::string>> found;
  for (const auto& t : mined) {
    const std::string ka = t.provenance.source.clip_id + "#" + std::to_string(t.provenance.source.window_index);
    const std::string kb = t.provenance.target.clip_id + "#" + std::to_string(t.provenance.target.window_index);
    const auto key = std::make_pair(std::min(ka, kb), std::max(ka, kb));
    if (planted.count(key)) {
      ++hits;
      found.insert(key);
    }
  }
  const double precision = mined.empty() ? 0.0 : static_cast<double>(hits) / mined.size();
  const double recall = static_cast<double>(found.size()) / planted.size();
  return {oracle_ok && precision >= 0.95,
          fmt("%zu windows, %zu mined, precision %.3f, recall %.3f, oracle match on every rank: %s", windows.size(),
              mined.size(), precision, recall, oracle_ok ? "yes" : "no")};
}

// ---- 11 ------------------------------------------------------------------

Outcome metric_sanity() {
  std::mt19937_64 rng(11);
  const Mat a = random_mat(300, 8, rng);
  const double self = eval::fid(a, a);

  const int n = 200000;
  const Mat g1 = gaussian(n, 1, 111);
  const Mat g2 = (gaussian(n, 1, 112).array() + 1.0).matrix();
  const double fid1 = eval::fid(g1, g2);  // closed form (mu1 - mu2)^2 + (s1 - s2)^2 = 1

  bool nested = true;
  std::uniform_int_distribution<int> size(2, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = size(rng);
    Mat q = random_mat(m, 6, rng), c = random_mat(m, 6, rng);
    q.rowwise().normalize();
    c.rowwise().normalize();
    const auto s = eval::g2t_g2s(q, c, c);
    nested = nested && s.g2t[0] <= s.g2t[1] && s.g2t[1] <= s.g2t[2];
  }

  std::vector<double> v;
  for (int i = 0; i < 20; ++i) v.push_back(std::normal_distribution<double>(5.0, 2.0)(rng));
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= 20.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double hand = 2.093 * std::sqrt(ss / 19.0) / std::sqrt(20.0);
  const eval::Interval ci = eval::confidence_interval(v);
  const double ci_rel = std::abs(ci.half_width - hand) / hand;
  const bool ok = std::abs(self) <= 1e-6 && std::abs(fid1 - 1.0) <= 0.05 && nested && ci_rel <= 1e-4 &&
                  std::abs(ci.mean - mean) <= 1e-12;
  return {ok, fmt("FID(A,A) %.2g, 1-D FID %.4f, R@K nesting %s, CI half-width rel err %.2g", self, fid1,
                  nested ? "holds" : "violated", ci_rel)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double limit_seconds;  // 0 means no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"DCT oracle equivalence", dct_oracle, 10.0},
      {"band bookkeeping", band_bookkeeping, 0.0},
      {"interleave contract", interleave_contract, 0.0},
      {"SCFG algebra", scfg_algebra, 0.0},
      {"gradient verification", gradient_check, 120.0},
      {"diffusion statistics", diffusion_stats, 0.0},
      {"DDIM determinism and oracle", ddim_checks, 0.0},
      {"overfit recipe", overfit, 600.0},
      {"toy end-to-end benchmark", toy_benchmark, 0.0},  // training time is bounded inside
      {"mining fidelity", mining_fidelity, 0.0},
      {"metric sanity", metric_sanity, 0.0},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].limit_seconds > 0.0 && sec > criteria[i].limit_seconds) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s limit]", criteria[i].limit_seconds);
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].name.c_str(),
                o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
