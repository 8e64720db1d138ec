#include "interedit/eval.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace interedit::eval {

double recall_at_k(const Mat& queries, const Mat& candidates, const std::vector<int>& truth, int k) {
  require(k >= 1, "recall_at_k: K must be >= 1");
  require_shape(queries.rows() == static_cast<Eigen::Index>(truth.size()), "recall_at_k: one truth index per query");
  require_shape(queries.cols() == candidates.cols(), "recall_at_k: embedding width mismatch");
  require(queries.rows() > 0, "recall_at_k: no queries");
  const Mat s = queries * candidates.transpose();
  int hits = 0;
  for (Eigen::Index q = 0; q < s.rows(); ++q) {
    const int tr = truth[static_cast<std::size_t>(q)];
    require(tr >= 0 && tr < candidates.rows(), "recall_at_k: truth index out of range");
    const double st = s(q, tr);
    int rank = 0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (s(q, c) > st || (s(q, c) == st && c < tr)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return 100.0 * hits / static_cast<double>(s.rows());
}

RetrievalScores g2t_g2s(const Mat& generated, const Mat& sources, const Mat& targets) {
  require_shape(generated.rows() == sources.rows() && generated.rows() == targets.rows(),
                "g2t_g2s: generated, sources and targets must align");
  std::vector<int> truth(static_cast<std::size_t>(generated.rows()));
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<int>(i);
  RetrievalScores r;
  for (int k = 1; k <= 3; ++k) {
    r.g2t[static_cast<std::size_t>(k - 1)] = recall_at_k(generated, targets, truth, k);
    r.g2s[static_cast<std::size_t>(k - 1)] = recall_at_k(generated, sources, truth, k);
  }
  return r;
}

namespace {

void moments(const Mat& x, Vec& mu, Mat& cov) {
  mu = x.colwise().mean().transpose();
  const Mat c = x.rowwise() - mu.transpose();
  cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
  cov.diagonal().array() += 1e-6;
}

}  // namespace

double fid(const Mat& generated, const Mat& real) {
  require(generated.rows() >= 2 && real.rows() >= 2, "fid: need at least 2 samples per set");
  require_shape(generated.cols() == real.cols(), "fid: embedding width mismatch");
  Vec mg, mr;
  Mat sg, sr;
  moments(generated, mg, sg);
  moments(real, mr, sr);
  const Eigen::MatrixXd sg_col = sg;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(sg_col);
  const Eigen::VectorXd lam = eg.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd root = eg.eigenvectors() * lam.cwiseSqrt().asDiagonal() * eg.eigenvectors().transpose();
  Eigen::MatrixXd prod = root * Eigen::MatrixXd(sr) * root;
  prod = 0.5 * (prod + prod.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(prod, Eigen::EigenvaluesOnly);
  const double tr_sqrt = ep.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mg - mr).squaredNorm() + sg.trace() + sr.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

Interval confidence_interval(const std::vector<double>& values, double level) {
  require(!values.empty(), "confidence_interval: no values");
  require(level > 0.0 && level < 1.0, "confidence_interval: level must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  Interval out{mean, 0.0};
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  out.half_width = t * sd / std::sqrt(n);
  return out;
}

namespace {

std::string cell(const Interval& iv, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f±%.*f", precision, iv.mean, precision, iv.half_width);
  return buf;
}

nlohmann::json interval_json(const Interval& iv) { return {{"mean", iv.mean}, {"half_width", iv.half_width}}; }

}  // namespace

std::string EvalReport::table() const {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-14s | %-14s %-14s %-14s | %-14s %-14s %-14s | %-14s\n", "", "g2t R@1", "g2t R@2",
                "g2t R@3", "g2s R@1", "g2s R@2", "g2s R@3", "FID");
  os << line;
  std::snprintf(line, sizeof line, "%-14s | %-14s %-14s %-14s | %-14s %-14s %-14s | %-14s\n",
                checkpoint_id.substr(0, 14).c_str(), cell(g2t[0], 2).c_str(), cell(g2t[1], 2).c_str(),
                cell(g2t[2], 2).c_str(), cell(g2s[0], 2).c_str(), cell(g2s[1], 2).c_str(), cell(g2s[2], 2).c_str(),
                cell(fid, 4).c_str());
  os << line;
  os << "runs: " << runs << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["checkpoint"] = checkpoint_id;
  j["runs"] = runs;
  j["seeds"] = seeds;
  for (int k = 0; k < 3; ++k) {
    j["g2t"]["R@" + std::to_string(k + 1)] = interval_json(g2t[static_cast<std::size_t>(k)]);
    j["g2s"]["R@" + std::to_string(k + 1)] = interval_json(g2s[static_cast<std::size_t>(k)]);
  }
  j["fid"] = interval_json(fid);
  nlohmann::json runs_json = nlohmann::json::array();
  for (std::size_t r = 0; r < per_run.size(); ++r) {
    runs_json.push_back({{"seed", r < seeds.size() ? seeds[r] : 0},
                         {"g2t", per_run[r].g2t},
                         {"g2s", per_run[r].g2s},
                         {"fid", r < per_run_fid.size() ? per_run_fid[r] : 0.0}});
  }
  j["per_run"] = runs_json;
  j["warnings"] = warnings;
  return j.dump(2);
}

Mat Editor::edit(const Mat& source_world, const std::string& instruction, std::uint64_t seed) const {
  const Mat source = motion::normalize(source_world, stats);
  DenoiserPredictor predictor(model, text.encode(instruction), model.encode_source(source), bands, use_freq_tokens);
  Mat x_T = gaussian(source.rows(), source.cols(), seed);
  Mat x0 = ddim_sample(predictor, schedule, sampler, std::move(x_T), seed ^ 0x9e3779b97f4a7c15ULL);
  return motion::denormalize(x0, stats);
}

std::uint64_t item_seed(std::uint64_t run_seed, std::size_t item) {
  std::uint64_t z = run_seed * 0x9e3779b97f4a7c15ULL + item + 1;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EvalRun evaluate_run(const Editor& editor, const MotionEmbedder& embedder, const std::vector<motion::EditTriplet>& test,
                     std::uint64_t seed) {
  require(!test.empty(), "evaluate_run: empty test split");
  EvalRun run;
  const Eigen::Index n = static_cast<Eigen::Index>(test.size());
  Mat gen(n, embedder.dim()), src(n, embedder.dim()), tgt(n, embedder.dim());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Mat source = motion::flatten(test[i].source);
    run.generated.push_back(editor.edit(source, test[i].instruction, item_seed(seed, i)));
    const auto r = static_cast<Eigen::Index>(i);
    gen.row(r) = embedder.embed(run.generated.back());
    src.row(r) = embedder.embed(source);
    tgt.row(r) = embedder.embed(motion::flatten(test[i].target));
  }
  run.scores = g2t_g2s(gen, src, tgt);
  run.fid = n >= 2 ? fid(gen, tgt) : 0.0;
  return run;
}

EvalReport run_eval(const Editor& editor, const MotionEmbedder& embedder, const std::vector<motion::EditTriplet>& test,
                    const std::vector<std::uint64_t>& seeds, const std::string& checkpoint_id) {
  require(!seeds.empty(), "run_eval: at least one run is required");
  EvalReport rep;
  rep.runs = static_cast<int>(seeds.size());
  rep.seeds = seeds;
  rep.checkpoint_id = checkpoint_id;
  if (seeds.size() == 1) rep.warnings.push_back("runs=1: confidence half-widths are reported as 0");
  if (test.size() < 2) rep.warnings.push_back("fewer than 2 test triplets: FID reported as 0");
  std::array<std::vector<double>, 3> g2t, g2s;
  for (std::uint64_t s : seeds) {
    const EvalRun run = evaluate_run(editor, embedder, test, s);
    rep.per_run.push_back(run.scores);
    rep.per_run_fid.push_back(run.fid);
    for (int k = 0; k < 3; ++k) {
      g2t[static_cast<std::size_t>(k)].push_back(run.scores.g2t[static_cast<std::size_t>(k)]);
      g2s[static_cast<std::size_t>(k)].push_back(run.scores.g2s[static_cast<std::size_t>(k)]);
    }
  }
  for (int k = 0; k < 3; ++k) {
    rep.g2t[static_cast<std::size_t>(k)] = confidence_interval(g2t[static_cast<std::size_t>(k)]);
    rep.g2s[static_cast<std::size_t>(k)] = confidence_interval(g2s[static_cast<std::size_t>(k)]);
  }
  rep.fid = confidence_interval(rep.per_run_fid);
  return rep;
}

}  // namespace interedit::eval
