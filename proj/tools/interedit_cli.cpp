// interedit: offline jobs for synthesizing data, mining pairs, training, editing and evaluation.

#include "interedit/checkpoint.hpp"
#include "interedit/data_pipeline.hpp"
#include "interedit/eval.hpp"
#include "interedit/freq_descriptors.hpp"
#include "interedit/motion_io.hpp"
#include "interedit/plot.hpp"
#include "interedit/run_config.hpp"
#include "interedit/synth.hpp"
#include "interedit/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace interedit;
using nlohmann::json;

namespace {

// Mirrors every line to stderr and <out>/run.log.
class RunLog {
 public:
  void open(const fs::path& dir) {
    fs::create_directories(dir);
    file_.open(dir / "run.log", std::ios::app);
  }
  void operator()(const std::string& line) {
    std::cerr << line << "\n";
    if (file_) file_ << line << "\n" << std::flush;
  }

 private:
  std::ofstream file_;
};

struct Globals {
  std::string config_file;
  std::string preset = "paper";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::vector<std::string> sets;
};

RunConfig build_config(const Globals& g, RunLog& log) {
  RunConfig rc = RunConfig::from_preset(g.preset);
  if (!g.config_file.empty()) rc.apply_file(g.config_file);
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed_given) rc.seed = g.seed;
  rc.validate();
  log("preset " + rc.preset + ", seed " + std::to_string(rc.seed));
  const auto defaults = RunConfig::paper().entries();
  const auto now = rc.entries();
  for (std::size_t i = 0; i < now.size(); ++i)
    if (i >= defaults.size() || now[i].second != defaults[i].second)
      log("override " + now[i].first + " = " + now[i].second);
  return rc;
}

fs::path out_root(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("INTEREDIT_DATA_ROOT"); env && *env) return env;
  return ".";
}

std::string or_default(const std::string& v, const fs::path& fallback) { return v.empty() ? fallback.string() : v; }

motion::DatasetStats stats_of(const std::vector<motion::EditTriplet>& ts) {
  std::vector<Mat> all;
  for (const auto& t : ts) {
    all.push_back(motion::flatten(t.source));
    all.push_back(motion::flatten(t.target));
  }
  return motion::fit_stats(all);
}

// Scenario and label of a synthetic clip id "<scenario>_<label>_<seed>".
bool parse_clip_label(const std::string& clip_id, std::string& scenario, std::string& label) {
  for (const auto& sc : synth::catalog()) {
    for (const auto& l : {sc.first_label, sc.second_label}) {
      const std::string prefix = sc.id + "_" + l + "_";
      if (clip_id.rfind(prefix, 0) == 0) {
        scenario = sc.id;
        label = l;
        return true;
      }
    }
  }
  return false;
}

struct Encoders {
  HashedTextEncoder text;
  PooledProjectionEmbedder teacher;
  PooledProjectionEmbedder retrieval;
};

Encoders make_encoders(const RunConfig& rc, const motion::DatasetStats& stats, int joints, int embed_dim) {
  const auto& e = rc.encoders;
  return {HashedTextEncoder(embed_dim, e.text_seed),
          PooledProjectionEmbedder(stats, joints, embed_dim, e.teacher_seed, e.teacher_segments),
          PooledProjectionEmbedder(stats, joints, e.retrieval_dim, e.retrieval_seed, e.teacher_segments)};
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  int count = -1;
};

void cmd_synth(const RunConfig& rc, const fs::path& root, const SynthArgs& a, RunLog& log) {
  const int count = a.count >= 0 ? a.count : rc.synth.triplets;
  synth::SynthOptions so;
  so.fps = rc.synth.fps;
  const auto& cat = synth::catalog();

  // Corpus clips for mining.
  const fs::path corpus = root / "corpus";
  fs::create_directories(corpus / "clips");
  std::vector<pipeline::ManifestEntry> manifest;
  std::uint64_t clip_seed = rc.seed * 1000003ULL;
  for (const auto& sc : cat) {
    for (const auto& label : {sc.first_label, sc.second_label}) {
      for (int i = 0; i < rc.synth.clips_per_label; ++i) {
        const auto clip = synth::synth_clip(sc.id, label, rc.synth.clip_length, clip_seed++, so);
        const std::string rel = "clips/" + clip.clip_id + ".iesq";
        motion::save_sequence((corpus / rel).string(), clip);
        manifest.push_back({clip.clip_id, rel, sc.id, clip.length()});
      }
    }
  }
  pipeline::write_manifest((corpus / "manifest.jsonl").string(), manifest);
  log("wrote " + std::to_string(manifest.size()) + " corpus clips to " + corpus.string());

  // Triplets cycle through the catalog, alternating which variant is the edit target.
  std::vector<motion::EditTriplet> triplets;
  for (int i = 0; i < count; ++i) {
    const auto& sc = cat[static_cast<std::size_t>(i) % cat.size()];
    const bool second = (i / static_cast<int>(cat.size())) % 2 == 1;
    triplets.push_back(synth::synth_generate(sc.id, second ? sc.second_label : sc.first_label, rc.synth.length,
                                             rc.seed * 1000003ULL + 500000ULL + static_cast<std::uint64_t>(i), so));
  }
  const fs::path tdir = root / "triplets";
  fs::create_directories(tdir);
  motion::save_triplets((tdir / "synthetic.ietr").string(), triplets);
  const auto split = pipeline::split_triplets(triplets, rc.pipeline.split, rc.seed);
  motion::save_triplets((tdir / "train.ietr").string(), split.train);
  motion::save_triplets((tdir / "val.ietr").string(), split.val);
  motion::save_triplets((tdir / "test.ietr").string(), split.test);
  log("wrote " + std::to_string(triplets.size()) + " triplets (train " + std::to_string(split.train.size()) +
      ", val " + std::to_string(split.val.size()) + ", test " + std::to_string(split.test.size()) + ") to " +
      tdir.string());
}

// ---- mine --------------------------------------------------------------------

struct MineArgs {
  std::string manifest;
};

void cmd_mine(const RunConfig& rc, const fs::path& root, const MineArgs& a, RunLog& log) {
  const fs::path manifest_path = or_default(a.manifest, root / "corpus" / "manifest.jsonl");
  const auto entries = pipeline::read_manifest(manifest_path.string());
  const fs::path base = manifest_path.parent_path();
  const fs::path tdir = root / "triplets";
  fs::create_directories(tdir);

  std::vector<pipeline::Window> windows;
  std::vector<Mat> clips;
  int joints = 0;
  for (const auto& e : entries) {
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : base / e.path;
    auto seq = motion::load_sequence(p.string());
    joints = seq.joint_count();
    clips.push_back(motion::flatten(seq));
    auto seg = pipeline::window_segment(seq, rc.pipeline.window, rc.pipeline.overlap);
    for (const auto& w : seg.warnings) log("warning: " + w);
    for (auto& w : seg.windows) windows.push_back(std::move(w));
  }
  std::vector<pipeline::MatchRecord> matches;
  std::vector<motion::EditTriplet> mined;
  if (windows.empty()) {
    log("no windows in corpus; nothing to mine");
  } else {
    const auto stats = motion::fit_stats(clips);
    PooledProjectionEmbedder emb(stats, joints, rc.encoders.retrieval_dim, rc.encoders.retrieval_seed,
                                 rc.encoders.teacher_segments);
    const Mat e = pipeline::embed_windows(windows, emb);
    std::vector<motion::WindowRef> refs;
    for (const auto& w : windows) refs.push_back(w.ref);
    matches = pipeline::retrieve_topk(e, refs, e, refs, rc.pipeline.top_k);
    mined = pipeline::mine_candidates(matches, windows, rc.pipeline.band);
    std::size_t idx = 0;
    for (auto& t : mined) {
      std::string sc, label;
      if (parse_clip_label(t.target.clip_id, sc, label))
        t.instruction = synth::instruction(sc, label, rc.seed + idx);
      else
        t.instruction = "change the interaction to match the reference";
      ++idx;
    }
  }
  pipeline::write_matches((tdir / "matches.jsonl").string(), matches, rc.pipeline.band);
  motion::save_triplets((tdir / "mined.ietr").string(), mined);
  log("windows " + std::to_string(windows.size()) + ", matches " + std::to_string(matches.size()) + ", mined " +
      std::to_string(mined.size()) + " -> " + (tdir / "mined.ietr").string());
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string triplets;
  std::string resume;
};

void cmd_train(const RunConfig& rc, const fs::path& root, const TrainArgs& a, RunLog& log) {
  const auto train = motion::load_triplets(or_default(a.triplets, root / "triplets" / "train.ietr"));
  if (train.empty()) throw Error("train: no training triplets");
  const motion::Skeleton sk = motion::Skeleton::interhuman22();
  ModelConfig mc = rc.model;
  mc.joint_count = train.front().source.joint_count();
  motion::DatasetStats stats = stats_of(train);
  CheckpointData resume;
  std::string rng_state;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    mc = resume.config;
    stats = resume.stats;
    rng_state = json::parse(resume.meta).value("rng", std::string{});
  }
  Denoiser model(mc, rc.seed + 9);
  const NoiseSchedule sched = NoiseSchedule::cosine(mc.timesteps);
  Trainer trainer(model, sched, rc.train, stats, sk, rc.seed + 91);
  const auto spe = static_cast<std::int64_t>((train.size() + static_cast<std::size_t>(rc.train.batch_size) - 1) /
                                             static_cast<std::size_t>(rc.train.batch_size));
  trainer.set_schedule(spe);
  if (!a.resume.empty()) {
    restore(model.params(), resume.params);
    trainer.optimizer().import_state(resume.adam_m, resume.adam_v, resume.step);
    trainer.set_step(resume.step);
    if (!rng_state.empty()) trainer.set_rng_state(rng_state);
    log("resumed from " + a.resume + " at step " + std::to_string(resume.step));
  }
  const Encoders enc = make_encoders(rc, stats, mc.joint_count, mc.embed_dim);
  std::vector<PreparedItem> items;
  for (const auto& t : train) items.push_back(trainer.prepare(t, enc.text, enc.teacher));

  const fs::path cdir = root / "checkpoints";
  const fs::path ldir = root / "logs";
  fs::create_directories(cdir);
  fs::create_directories(ldir);
  std::ofstream loss_log(ldir / "loss.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  const std::int64_t total = spe * rc.train.epochs;
  const int first_epoch = static_cast<int>(trainer.step() / spe);
  log("training " + std::to_string(items.size()) + " triplets, " + std::to_string(spe) + " steps/epoch, epochs " +
      std::to_string(first_epoch) + ".." + std::to_string(rc.train.epochs));

  auto save = [&](const fs::path& path) {
    CheckpointData d;
    d.config = mc;
    d.stats = stats;
    d.step = trainer.step();
    json meta;
    meta["rng"] = trainer.rng_state();
    meta["preset"] = rc.preset;
    meta["seed"] = rc.seed;
    meta["text_seed"] = rc.encoders.text_seed;
    meta["teacher_seed"] = rc.encoders.teacher_seed;
    d.meta = meta.dump();
    d.params = snapshot(model.params());
    trainer.optimizer().export_state(d.adam_m, d.adam_v, model.params());
    save_checkpoint(path.string(), d);
  };

  const auto t0 = std::chrono::steady_clock::now();
  for (int e = first_epoch; e < rc.train.epochs; ++e) {
    LossBreakdown sum;
    int n = 0;
    trainer.train_epoch(items, [&](const StepResult& r) {
      write_loss_record(loss_log, r);
      sum += r.losses;
      ++n;
    });
    loss_log.flush();
    if (n > 0 && (e % 10 == 0 || e + 1 == rc.train.epochs)) {
      sum *= 1.0 / n;
      std::ostringstream os;
      os << std::setprecision(4) << "epoch " << e << " step " << trainer.step() << "/" << total << " total "
         << sum.total << " diff " << sum.diff << " plan " << sum.plan << " freq " << sum.freq;
      log(os.str());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path ckpt = cdir / ("step_" + std::to_string(trainer.step()) + ".ckpt");
  save(ckpt);
  save(cdir / "latest.ckpt");
  std::ostringstream os;
  os << "saved " << ckpt.string() << " after " << std::fixed << std::setprecision(1) << secs << " s";
  log(os.str());
}

// ---- edit / eval -------------------------------------------------------------

struct Loaded {
  CheckpointData data;
  std::unique_ptr<Denoiser> model;
  NoiseSchedule schedule;
};

Loaded load_model(const std::string& path) {
  Loaded l;
  l.data = load_checkpoint(path);
  l.model = std::make_unique<Denoiser>(l.data.config, 0);
  restore(l.model->params(), l.data.params);
  l.schedule = NoiseSchedule::cosine(l.data.config.timesteps);
  return l;
}

struct EditArgs {
  std::string checkpoint;
  std::string source;
  std::string instruction;
  std::string output;
  int index = 0;
};

void cmd_edit(const RunConfig& rc, const fs::path& root, const EditArgs& a, RunLog& log) {
  const Loaded l = load_model(or_default(a.checkpoint, root / "checkpoints" / "latest.ckpt"));
  motion::TwoPersonSequence src;
  if (fs::path(a.source).extension() == ".ietr") {
    const auto ts = motion::load_triplets(a.source);
    if (a.index < 0 || static_cast<std::size_t>(a.index) >= ts.size())
      throw Error("edit: triplet index " + std::to_string(a.index) + " out of range (" + std::to_string(ts.size()) + ")");
    src = ts[static_cast<std::size_t>(a.index)].source;
  } else {
    src = motion::load_sequence(a.source);
  }
  if (src.joint_count() != l.data.config.joint_count) throw ShapeError("edit: source joint count does not match model");
  if (src.length() > l.data.config.max_length)
    throw Error("edit: source has " + std::to_string(src.length()) + " frames, model max is " +
                std::to_string(l.data.config.max_length));
  const HashedTextEncoder text(l.data.config.embed_dim, rc.encoders.text_seed);
  eval::Editor editor{*l.model, l.schedule, rc.sampler, l.data.stats, text, rc.train.bands, true};
  const Mat out = editor.edit(motion::flatten(src), a.instruction, rc.seed);
  if (!out.allFinite()) throw NonFiniteError("edited motion", 0);
  auto seq = motion::unflatten(out, src.joint_count(), src.fps);
  seq.scenario_id = src.scenario_id;
  seq.clip_id = src.clip_id + "_edit";
  const fs::path dest = or_default(a.output, root / "edits" / ("edit_seed" + std::to_string(rc.seed) + ".iesq"));
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  motion::save_sequence(dest.string(), seq);
  log("edited " + std::to_string(seq.length()) + " frames -> " + dest.string());
}

struct EvalArgs {
  std::string checkpoint;
  std::string split;
  int runs = -1;
};

void cmd_eval(const RunConfig& rc, const fs::path& root, const EvalArgs& a, RunLog& log) {
  const std::string ckpt = or_default(a.checkpoint, root / "checkpoints" / "latest.ckpt");
  const Loaded l = load_model(ckpt);
  const auto test = motion::load_triplets(or_default(a.split, root / "triplets" / "test.ietr"));
  const int runs = a.runs > 0 ? a.runs : rc.eval.runs;
  const Encoders enc = make_encoders(rc, l.data.stats, l.data.config.joint_count, l.data.config.embed_dim);
  eval::Editor editor{*l.model, l.schedule, rc.sampler, l.data.stats, enc.text, rc.train.bands, true};
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < runs; ++i) seeds.push_back(rc.seed + static_cast<std::uint64_t>(i));
  const eval::EvalReport rep = eval::run_eval(editor, enc.retrieval, test, seeds, fs::path(ckpt).filename().string());
  const fs::path rdir = root / "reports";
  fs::create_directories(rdir);
  std::ofstream(rdir / "eval.json") << rep.to_json() << "\n";
  std::ofstream(rdir / "eval.txt") << rep.table();
  std::cout << rep.table();
  for (const auto& w : rep.warnings) log("warning: " + w);
  log("report written to " + (rdir / "eval.json").string());
}

// ---- freq-report / plot ------------------------------------------------------

struct FreqArgs {
  std::string input;
};

void cmd_freq_report(const RunConfig& rc, const FreqArgs& a) {
  std::vector<std::pair<std::string, Mat>> seqs;
  if (fs::path(a.input).extension() == ".ietr") {
    const auto ts = motion::load_triplets(a.input);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      seqs.emplace_back("triplet " + std::to_string(i) + " source", motion::flatten(ts[i].source));
      seqs.emplace_back("triplet " + std::to_string(i) + " target", motion::flatten(ts[i].target));
    }
  } else {
    const auto s = motion::load_sequence(a.input);
    seqs.emplace_back(s.clip_id, motion::flatten(s));
  }
  static const char* kNames[6] = {"S-low", "S-mid", "S-high", "D-low", "D-mid", "D-high"};
  for (const auto& [name, x] : seqs) {
    const int nj = static_cast<int>((x.cols() / 2 - 4) / 12);
    const auto bands = freq::band_partition(static_cast<int>(x.rows()), rc.train.bands);
    const auto p = freq::band_descriptors(motion::strip_contacts(x, nj), rc.train.bands);
    std::cout << name << "  (L=" << x.rows() << ", bands [" << bands[0].begin << "," << bands[0].end << ") ["
              << bands[1].begin << "," << bands[1].end << ") [" << bands[2].begin << "," << bands[2].end << "))\n";
    for (int i = 0; i < 6; ++i)
      std::cout << "  " << std::left << std::setw(7) << kNames[i] << std::right << " mean " << std::setw(10)
                << std::setprecision(5) << p.values.row(i).mean() << "  max " << std::setw(10)
                << p.values.row(i).maxCoeff() << "\n";
  }
}

struct PlotArgs {
  std::string input;
  std::string dir;
  int stride = 1;
  std::string view = "front";
};

void cmd_plot(const fs::path& root, const PlotArgs& a, RunLog& log) {
  const auto seq = motion::load_sequence(a.input);
  if (a.view != "front" && a.view != "top") throw Error("plot: view must be front or top");
  const fs::path dir = or_default(a.dir, root / "plots" / fs::path(a.input).stem());
  const auto files = plot::write_svg_frames(seq, motion::Skeleton::interhuman22(), dir.string(), a.stride,
                                            a.view == "top" ? plot::View::Top : plot::View::Front);
  log("wrote " + std::to_string(files.size()) + " frames to " + dir.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-guided two-person motion editing: data, training, sampling and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "key=value config file applied after the preset")->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { g.seed = s; g.seed_given = true; },
                                         "master seed");
  app.add_option("--out", g.out, "output root (default: $INTEREDIT_DATA_ROOT or .)");
  app.add_option("--set", g.sets, "override one key, e.g. --set train.lr=2e-4 (repeatable)");

  SynthArgs synth_a;
  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus and triplet splits");
  synth->add_option("--count", synth_a.count, "number of triplets (default synth.triplets)");

  MineArgs mine_a;
  auto* mine = app.add_subcommand("mine", "window, embed and mine near-duplicate pairs from a corpus");
  mine->add_option("--manifest", mine_a.manifest, "corpus manifest (default <out>/corpus/manifest.jsonl)");

  TrainArgs train_a;
  auto* train = app.add_subcommand("train", "train the denoiser");
  train->add_option("--triplets", train_a.triplets, "training triplets (default <out>/triplets/train.ietr)");
  train->add_option("--resume", train_a.resume, "checkpoint to resume from")->check(CLI::ExistingFile);

  EditArgs edit_a;
  auto* edit = app.add_subcommand("edit", "edit one source motion with an instruction");
  edit->add_option("--checkpoint", edit_a.checkpoint, "model checkpoint (default <out>/checkpoints/latest.ckpt)");
  edit->add_option("--source", edit_a.source, "source sequence (.iesq) or triplet file (.ietr, see --index)")->required()->check(CLI::ExistingFile);
  edit->add_option("--instruction,-i", edit_a.instruction, "edit text")->required();
  edit->add_option("--output,-o", edit_a.output, "output sequence file");
  edit->add_option("--index", edit_a.index, "triplet whose source is edited when --source is a triplet file");

  EvalArgs eval_a;
  auto* ev = app.add_subcommand("eval", "g2t/g2s recall and FID over repeated sampling runs");
  ev->add_option("--checkpoint", eval_a.checkpoint, "model checkpoint (default <out>/checkpoints/latest.ckpt)");
  ev->add_option("--split", eval_a.split, "test triplets (default <out>/triplets/test.ietr)");
  ev->add_option("--runs", eval_a.runs, "number of runs (default eval.runs)");

  FreqArgs freq_a;
  auto* fr = app.add_subcommand("freq-report", "print band-energy descriptors of a sequence or triplet file");
  fr->add_option("input", freq_a.input, "sequence (.iesq) or triplet (.ietr) file")->required()->check(CLI::ExistingFile);

  PlotArgs plot_a;
  auto* pl = app.add_subcommand("plot", "export per-frame SVG projections of a sequence");
  pl->add_option("input", plot_a.input, "sequence file")->required()->check(CLI::ExistingFile);
  pl->add_option("--dir", plot_a.dir, "output directory");
  pl->add_option("--stride", plot_a.stride, "frame stride")->check(CLI::PositiveNumber);
  pl->add_option("--view", plot_a.view, "front or top");

  CLI11_PARSE(app, argc, argv);

  RunLog log;
  try {
    const fs::path root = out_root(g);
    log.open(root);
    log("interedit " + app.get_subcommands().front()->get_name());
    const RunConfig rc = build_config(g, log);
    if (*synth) cmd_synth(rc, root, synth_a, log);
    else if (*mine) cmd_mine(rc, root, mine_a, log);
    else if (*train) cmd_train(rc, root, train_a, log);
    else if (*edit) cmd_edit(rc, root, edit_a, log);
    else if (*ev) cmd_eval(rc, root, eval_a, log);
    else if (*fr) cmd_freq_report(rc, freq_a);
    else if (*pl) cmd_plot(root, plot_a, log);
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
