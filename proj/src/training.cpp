#include "interedit/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace interedit {

void TrainConfig::validate() const {
  require(epochs >= 1 && batch_size >= 1, "train: epochs and batch_size must be >= 1");
  require(lr > 0.0 && warmup_epochs >= 0, "train: lr must be > 0 and warmup_epochs >= 0");
  require(weight_decay >= 0.0, "train: weight_decay must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "train: Adam betas must lie in [0, 1)");
  require(grad_clip >= 0.0, "train: grad_clip must be >= 0");
  require(cond_drop >= 0.0 && cond_drop <= 1.0, "train: cond_drop must lie in [0, 1]");
  losses.validate();
  bands.validate();
}

void AdamW::step(nn::ParameterStore& store, double lr, const TrainConfig& c) {
  auto& ps = store.all();
  if (m_.empty()) {
    for (const auto& p : ps) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  require(m_.size() == ps.size(), "AdamW: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i];
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * p.grad;
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    p.value *= 1.0 - lr * c.weight_decay;
    p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + c.adam_eps);
  }
}

void AdamW::export_state(std::vector<NamedArray>& m, std::vector<NamedArray>& v,
                         const nn::ParameterStore& store) const {
  m.clear();
  v.clear();
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m.push_back({store.all()[i]->name, m_[i]});
    v.push_back({store.all()[i]->name, v_[i]});
  }
}

void AdamW::import_state(const std::vector<NamedArray>& m, const std::vector<NamedArray>& v, std::int64_t t) {
  require(m.size() == v.size(), "AdamW: moment arrays differ in count");
  m_.clear();
  v_.clear();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m_.push_back(m[i].value);
    v_.push_back(v[i].value);
  }
  t_ = t;
}

Trainer::Trainer(Denoiser& model, NoiseSchedule schedule, TrainConfig config, motion::DatasetStats stats,
                 motion::Skeleton skeleton, std::uint64_t seed)
    : model_(model),
      schedule_(std::move(schedule)),
      config_(std::move(config)),
      stats_(std::move(stats)),
      skeleton_(std::move(skeleton)),
      rng_(seed) {
  config_.validate();
  require(schedule_.steps == model_.config().timesteps, "trainer: schedule length differs from model timesteps");
  require(skeleton_.joint_count == model_.config().joint_count, "trainer: skeleton joint count differs from model");
}

PreparedItem Trainer::prepare(const motion::EditTriplet& triplet, const TextEncoder& text,
                              const MotionEmbedder& teacher) const {
  PreparedItem it;
  it.x0_world = motion::flatten(triplet.target);
  it.x0 = motion::normalize(it.x0_world, stats_);
  it.source = motion::normalize(motion::flatten(triplet.source), stats_);
  it.c_text = text.encode(triplet.instruction);
  it.teacher = teacher.embed(it.x0_world);
  it.g_target = freq::band_descriptors(motion::strip_contacts(it.x0, skeleton_.joint_count), config_.bands).values;
  return it;
}

void Trainer::set_schedule(std::int64_t steps_per_epoch) { steps_per_epoch_ = std::max<std::int64_t>(1, steps_per_epoch); }

double Trainer::lr_at(std::int64_t s) const {
  const std::int64_t total = steps_per_epoch_ * config_.epochs;
  const std::int64_t warm = std::min(total, steps_per_epoch_ * config_.warmup_epochs);
  if (s < warm) return config_.lr * static_cast<double>(s + 1) / static_cast<double>(warm);
  if (total <= warm) return config_.lr;
  const double progress = std::min(1.0, static_cast<double>(s - warm) / static_cast<double>(total - warm));
  return config_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

LossBreakdown Trainer::item_loss(nn::Tape& tape, const PreparedItem& it, int t, const Mat& noise, bool drop,
                                 bool use_freq, const Mat& targets, int positive, double scale) const {
  const int nj = skeleton_.joint_count;
  const LossWeights& w = config_.losses;
  const Mat x_t = q_sample(schedule_, it.x0, t, noise);
  freq::BandEnergyProfile g;
  if (use_freq) g = freq::band_descriptors(motion::strip_contacts(x_t, nj), config_.bands);
  const TapeOutputs out = model_.forward_tape(tape, x_t, t, it.c_text, it.source, drop, g, {use_freq});

  const Mat& x_hat = out.x0_hat.value();
  const Mat x_hat_world = motion::denormalize(x_hat, stats_);
  LossBreakdown b;
  const LossValue diff = l_diff(it.x0, x_hat);
  const LossValue vel = l_vel(it.x0_world, x_hat_world, nj);
  const LossValue foot = l_foot(it.x0_world, x_hat_world, skeleton_);
  const LossValue bl = l_bl(it.x0_world, x_hat_world, skeleton_);
  const LossValue dm = l_dm(it.x0_world, x_hat_world, nj, w.dm_threshold);
  const LossValue ro = l_ro(it.x0_world, x_hat_world, skeleton_);
  const LossValue plan = l_plan(out.plan_projections.value(), targets, positive, w.tau, w.plan_kind);
  b.diff = diff.value;
  b.vel = vel.value;
  b.foot = foot.value;
  b.bl = bl.value;
  b.dm = dm.value;
  b.ro = ro.value;
  b.plan = plan.value;
  LossValue fr{0.0, Mat()};
  if (out.freq_decodes.valid()) {
    fr = l_freq(out.freq_decodes.value(), it.g_target, config_.bands.weights);
    b.freq = fr.value;
  }
  b = l_total(b, w);

  const double vals[] = {b.diff, b.vel, b.foot, b.bl, b.dm, b.ro, b.plan, b.freq};
  for (int i = 0; i < 8; ++i) {
    if (!std::isfinite(vals[i]))
      throw NonFiniteError("non-finite loss component '" + LossBreakdown::names()[static_cast<std::size_t>(i)] + "'",
                           step_);
  }

  if (tape.grad_enabled()) {
    Mat g_world = w.vel * vel.grad + w.foot * foot.grad + w.bl * bl.grad + w.dm * dm.grad + w.ro * ro.grad;
    Mat g_x = diff.grad + (g_world.array().rowwise() * stats_.std.transpose().array()).matrix();
    std::vector<std::pair<nn::Var, Mat>> seeds;
    seeds.emplace_back(out.x0_hat, scale * g_x);
    seeds.emplace_back(out.plan_projections, scale * w.plan * plan.grad);
    if (out.freq_decodes.valid()) seeds.emplace_back(out.freq_decodes, scale * w.freq * fr.grad);
    tape.backward(seeds);
  }
  return b;
}

StepResult Trainer::train_step(const std::vector<const PreparedItem*>& batch) {
  require(!batch.empty(), "train_step: empty batch");
  Mat targets(static_cast<Eigen::Index>(batch.size()), batch.front()->teacher.size());
  for (std::size_t i = 0; i < batch.size(); ++i) targets.row(static_cast<Eigen::Index>(i)) = batch[i]->teacher;

  StepResult r;
  r.step = step_;
  r.instrumentation.items = static_cast<int>(batch.size());
  model_.params().zero_grad();
  std::uniform_int_distribution<int> pick_t(1, schedule_.steps);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PreparedItem& it = *batch[i];
    const int t = pick_t(rng_);
    Mat noise(it.x0.rows(), it.x0.cols());
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = normal(rng_);
    const bool drop = u01(rng_) < config_.cond_drop;
    const bool use_freq = !(u01(rng_) < model_.config().freq_dropout);
    r.instrumentation.timesteps.push_back(t);
    r.instrumentation.cond_dropped += drop ? 1 : 0;
    r.instrumentation.freq_dropped += use_freq ? 0 : 1;
    nn::Tape tape(true);
    LossBreakdown b = item_loss(tape, it, t, noise, drop, use_freq, targets, static_cast<int>(i), scale);
    b *= scale;
    r.losses += b;
  }

  double sq = 0.0;
  for (const auto& p : model_.params().all()) sq += p->grad.squaredNorm();
  r.grad_norm = std::sqrt(sq);
  if (!std::isfinite(r.grad_norm)) throw NonFiniteError("non-finite gradient norm", step_);
  if (config_.grad_clip > 0.0 && r.grad_norm > config_.grad_clip) {
    const double s = config_.grad_clip / r.grad_norm;
    for (auto& p : model_.params().all()) p->grad *= s;
  }
  r.lr = lr_at(step_);
  adam_.step(model_.params(), r.lr, config_);
  ++step_;
  return r;
}

void Trainer::train_epoch(const std::vector<PreparedItem>& items, const std::function<void(const StepResult&)>& on_step) {
  require(!items.empty(), "train_epoch: no training items");
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng_);
  const std::size_t bs = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    std::vector<const PreparedItem*> batch;
    for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) batch.push_back(&items[order[i]]);
    const StepResult r = train_step(batch);
    if (on_step) on_step(r);
  }
}

LossBreakdown Trainer::evaluate(const PreparedItem& item, int t, const Mat& noise, bool drop, bool use_freq,
                                const Mat& targets, int positive) const {
  nn::Tape tape(false);
  return item_loss(tape, item, t, noise, drop, use_freq, targets, positive, 1.0);
}

std::string Trainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void Trainer::set_rng_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  require(!is.fail(), "trainer: malformed rng state");
}

void write_loss_record(std::ostream& os, const StepResult& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["grad_norm"] = r.grad_norm;
  const auto& names = LossBreakdown::names();
  const auto vals = r.losses.values();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = vals[i];
  j["cond_dropped"] = r.instrumentation.cond_dropped;
  j["freq_dropped"] = r.instrumentation.freq_dropped;
  os << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
}

std::vector<StepResult> read_loss_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open loss log '" + path + "'");
  std::vector<StepResult> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    StepResult r;
    r.step = j.at("step");
    r.lr = j.at("lr");
    r.grad_norm = j.at("grad_norm");
    LossBreakdown& b = r.losses;
    double* fields[] = {&b.diff, &b.vel, &b.foot, &b.bl, &b.dm, &b.ro, &b.plan, &b.freq, &b.motion, &b.total};
    const auto& names = LossBreakdown::names();
    for (std::size_t i = 0; i < names.size(); ++i) *fields[i] = j.at(names[i]).get<double>();
    r.instrumentation.cond_dropped = j.value("cond_dropped", 0);
    r.instrumentation.freq_dropped = j.value("freq_dropped", 0);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace interedit
