#include "interedit/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace interedit {

namespace {

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw Error("config: bad value '" + text + "' for '" + key + "'");
  return v;
}

template <class T>
std::string fmt(T v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
Field num(const std::string& key, T& ref) {
  return {key, [&ref] { return fmt(ref); }, [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); }};
}

std::vector<Field> registry(RunConfig& c) {
  std::vector<Field> f;
  auto& m = c.model;
  f.push_back(num("model.joint_count", m.joint_count));
  f.push_back(num("model.blocks", m.blocks));
  f.push_back(num("model.heads", m.heads));
  f.push_back(num("model.embed_dim", m.embed_dim));
  f.push_back(num("model.plan_tokens", m.plan_tokens));
  f.push_back(num("model.freq_tokens", m.freq_tokens));
  f.push_back(num("model.plan_tap", m.plan_tap));
  f.push_back(num("model.freq_tap", m.freq_tap));
  f.push_back(num("model.freq_dropout", m.freq_dropout));
  f.push_back(num("model.max_length", m.max_length));
  f.push_back(num("model.ffn_mult", m.ffn_mult));
  f.push_back(num("model.source_layers", m.source_layers));
  f.push_back(num("model.timesteps", m.timesteps));

  auto& s = c.sampler;
  f.push_back(num("sampler.ddim_steps", s.ddim_steps));
  f.push_back(num("sampler.eta", s.eta));
  f.push_back(num("sampler.guidance", s.guidance));
  f.push_back(num("sampler.guidance_text", s.guidance_text));
  f.push_back(num("sampler.guidance_src", s.guidance_src));
  f.push_back({"sampler.mode", [&s] { return std::string(s.mode == GuidanceMode::TwoBranch ? "two-branch" : "three-branch"); },
               [&s](const std::string& v) {
                 if (v == "two-branch") s.mode = GuidanceMode::TwoBranch;
                 else if (v == "three-branch") s.mode = GuidanceMode::ThreeBranch;
                 else throw Error("config: sampler.mode must be two-branch or three-branch");
               }});

  auto& t = c.train;
  f.push_back(num("train.epochs", t.epochs));
  f.push_back(num("train.batch_size", t.batch_size));
  f.push_back(num("train.lr", t.lr));
  f.push_back(num("train.warmup_epochs", t.warmup_epochs));
  f.push_back(num("train.weight_decay", t.weight_decay));
  f.push_back(num("train.beta1", t.beta1));
  f.push_back(num("train.beta2", t.beta2));
  f.push_back(num("train.grad_clip", t.grad_clip));
  f.push_back(num("train.cond_drop", t.cond_drop));

  auto& l = t.losses;
  f.push_back(num("loss.vel", l.vel));
  f.push_back(num("loss.foot", l.foot));
  f.push_back(num("loss.bl", l.bl));
  f.push_back(num("loss.dm", l.dm));
  f.push_back(num("loss.ro", l.ro));
  f.push_back(num("loss.plan", l.plan));
  f.push_back(num("loss.freq", l.freq));
  f.push_back(num("loss.tau", l.tau));
  f.push_back(num("loss.dm_threshold", l.dm_threshold));
  f.push_back({"loss.plan_kind", [&l] { return std::string(plan_loss_kind_name(l.plan_kind)); },
               [&l](const std::string& v) { l.plan_kind = plan_loss_kind_from(v); }});

  auto& b = t.bands;
  f.push_back(num("freq.r_low", b.r_low));
  f.push_back(num("freq.r_mid", b.r_mid));
  f.push_back(num("freq.r_high", b.r_high));
  f.push_back(num("freq.epsilon", b.epsilon));
  for (int i = 0; i < 6; ++i) f.push_back(num("freq.weight" + std::to_string(i), b.weights[static_cast<std::size_t>(i)]));

  f.push_back(num("synth.triplets", c.synth.triplets));
  f.push_back(num("synth.length", c.synth.length));
  f.push_back(num("synth.fps", c.synth.fps));
  f.push_back(num("synth.clips_per_label", c.synth.clips_per_label));
  f.push_back(num("synth.clip_length", c.synth.clip_length));

  auto& p = c.pipeline;
  f.push_back(num("pipeline.window", p.window));
  f.push_back(num("pipeline.overlap", p.overlap));
  f.push_back(num("pipeline.top_k", p.top_k));
  f.push_back(num("pipeline.sim_min", p.band.min));
  f.push_back(num("pipeline.sim_max", p.band.max));
  f.push_back(num("pipeline.split_train", p.split.train));
  f.push_back(num("pipeline.split_val", p.split.val));
  f.push_back(num("pipeline.split_test", p.split.test));

  auto& e = c.encoders;
  f.push_back(num("encoders.text_seed", e.text_seed));
  f.push_back(num("encoders.teacher_seed", e.teacher_seed));
  f.push_back(num("encoders.teacher_segments", e.teacher_segments));
  f.push_back(num("encoders.retrieval_dim", e.retrieval_dim));
  f.push_back(num("encoders.retrieval_seed", e.retrieval_seed));

  f.push_back(num("eval.runs", c.eval.runs));
  f.push_back(num("run.seed", c.seed));
  return f;
}

}  // namespace

RunConfig RunConfig::paper() { return RunConfig{}; }

RunConfig RunConfig::desk() {
  RunConfig c;
  c.preset = "desk";
  c.model.blocks = 2;
  c.model.embed_dim = 64;
  c.model.heads = 4;
  c.model.plan_tap = 1;
  c.model.freq_tap = 2;
  c.model.max_length = 40;
  c.model.ffn_mult = 2;
  c.model.source_layers = 1;
  c.model.timesteps = 200;
  c.train.epochs = 200;
  c.train.batch_size = 8;
  c.train.lr = 1e-3;
  c.train.warmup_epochs = 10;
  c.train.grad_clip = 1.0;
  c.synth.length = 40;
  c.synth.fps = 10.0;
  c.synth.clip_length = 80;
  c.pipeline.window = 40;
  c.eval.runs = 5;
  return c;
}

RunConfig RunConfig::from_preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw Error("unknown preset '" + name + "' (expected paper or desk)");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& f : registry(*this)) {
    if (f.key == key) {
      f.set(trim(value));
      return;
    }
  }
  throw Error("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::apply_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  std::vector<std::pair<std::string, std::string>> applied;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set(key, value);
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    applied.emplace_back(key, value);
  }
  return applied;
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : registry(const_cast<RunConfig&>(*this))) out.emplace_back(f.key, f.get());
  return out;
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  os << "# preset: " << preset << "\n";
  for (const auto& [k, v] : entries()) os << k << " = " << v << "\n";
  return os.str();
}

void RunConfig::validate() const {
  model.validate();
  sampler.validate(model.timesteps);
  train.validate();
  require(synth.triplets >= 0 && synth.length >= 2 && synth.fps > 0.0, "config: bad synth settings");
  require(synth.clips_per_label >= 0 && synth.clip_length >= 2, "config: bad synth corpus settings");
  require(pipeline.window >= 2 && pipeline.top_k >= 1, "config: bad pipeline settings");
  require(encoders.teacher_segments >= 1 && encoders.retrieval_dim >= 1, "config: bad encoder settings");
  require(eval.runs >= 1, "config: eval.runs must be >= 1");
}

}  // namespace interedit
