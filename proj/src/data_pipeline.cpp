#include "interedit/data_pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace interedit::pipeline {

using motion::WindowRef;
using nlohmann::json;

SegmentResult window_segment(const motion::TwoPersonSequence& clip, int win, double overlap) {
  require(win >= 2, "window_segment: window must be >= 2 frames");
  require(overlap >= 0.0 && overlap < 1.0, "window_segment: overlap must lie in [0, 1)");
  const int stride = std::max(1, static_cast<int>(std::lround(win * (1.0 - overlap))));
  SegmentResult out;
  if (clip.length() < win) {
    out.warnings.push_back("clip '" + clip.clip_id + "' has " + std::to_string(clip.length()) +
                           " frames, shorter than the " + std::to_string(win) + "-frame window");
    return out;
  }
  int index = 0;
  for (int start = 0; start + win <= clip.length(); start += stride) {
    Window w;
    w.ref = {clip.clip_id, index++, start, start + win};
    w.sequence = motion::slice(clip, start, start + win);
    out.windows.push_back(std::move(w));
  }
  return out;
}

Mat embed_windows(const std::vector<Window>& windows, const MotionEmbedder& encoder) {
  Mat out(static_cast<Eigen::Index>(windows.size()), encoder.dim());
  for (std::size_t i = 0; i < windows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = encoder.embed(motion::flatten(windows[i].sequence));
  return out;
}

namespace {

bool ref_less(const WindowRef& a, const WindowRef& b) {
  if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
  return a.window_index < b.window_index;
}

}  // namespace

std::vector<MatchRecord> retrieve_topk(const Mat& queries, const std::vector<WindowRef>& query_refs,
                                       const Mat& database, const std::vector<WindowRef>& database_refs, int k) {
  require(k >= 1, "retrieve_topk: k must be >= 1");
  require_shape(queries.rows() == static_cast<Eigen::Index>(query_refs.size()), "retrieve_topk: query refs mismatch");
  require_shape(database.rows() == static_cast<Eigen::Index>(database_refs.size()),
                "retrieve_topk: database refs mismatch");
  require_shape(queries.rows() == 0 || queries.cols() == database.cols(), "retrieve_topk: embedding width mismatch");
  std::vector<MatchRecord> out;
  if (queries.rows() == 0) return out;
  const Mat sims = queries * database.transpose();
  std::vector<int> cand;
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const WindowRef& qr = query_refs[static_cast<std::size_t>(q)];
    cand.clear();
    for (int d = 0; d < static_cast<int>(database_refs.size()); ++d)
      if (database_refs[static_cast<std::size_t>(d)].clip_id != qr.clip_id) cand.push_back(d);
    if (static_cast<int>(cand.size()) < k)
      throw Error("retrieve_topk: k=" + std::to_string(k) + " exceeds the " + std::to_string(cand.size()) +
                  " candidates available to query " + qr.clip_id + "#" + std::to_string(qr.window_index));
    auto better = [&](int a, int b) {
      const double sa = sims(q, a), sb = sims(q, b);
      if (sa != sb) return sa > sb;
      return ref_less(database_refs[static_cast<std::size_t>(a)], database_refs[static_cast<std::size_t>(b)]);
    };
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), better);
    for (int r = 0; r < k; ++r) {
      const int d = cand[static_cast<std::size_t>(r)];
      out.push_back({qr, database_refs[static_cast<std::size_t>(d)], sims(q, d), r + 1});
    }
  }
  return out;
}

std::vector<motion::EditTriplet> mine_candidates(const std::vector<MatchRecord>& matches,
                                                 const std::vector<Window>& windows, const SimilarityBand& band) {
  std::map<std::pair<std::string, int>, const Window*> lookup;
  for (const auto& w : windows) lookup[{w.ref.clip_id, w.ref.window_index}] = &w;
  auto find = [&](const WindowRef& r) {
    auto it = lookup.find({r.clip_id, r.window_index});
    if (it == lookup.end()) throw Error("mine_candidates: window " + r.clip_id + "#" + std::to_string(r.window_index) + " not found");
    return it->second;
  };
  std::set<std::pair<std::pair<std::string, int>, std::pair<std::string, int>>> seen;
  std::vector<motion::EditTriplet> out;
  for (const auto& m : matches) {
    if (!(m.similarity >= band.min && m.similarity <= band.max)) continue;
    std::pair<std::string, int> a{m.query.clip_id, m.query.window_index};
    std::pair<std::string, int> b{m.neighbor.clip_id, m.neighbor.window_index};
    if (b < a) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    const Window* src = find(m.query);
    const Window* tgt = find(m.neighbor);
    motion::EditTriplet t;
    t.source = src->sequence;
    t.target = tgt->sequence;
    t.provenance.kind = "mined";
    t.provenance.scenario_id = src->sequence.scenario_id;
    const std::string c1 = std::min(m.query.clip_id, m.neighbor.clip_id);
    const std::string c2 = std::max(m.query.clip_id, m.neighbor.clip_id);
    t.provenance.group = c1 + "|" + c2;
    t.provenance.source = src->ref;
    t.provenance.target = tgt->ref;
    t.provenance.similarity = m.similarity;
    out.push_back(std::move(t));
  }
  return out;
}

Split split_triplets(std::vector<motion::EditTriplet> triplets, const SplitRatios& ratios, std::uint64_t seed) {
  require(ratios.train >= 0.0 && ratios.val >= 0.0 && ratios.test >= 0.0, "split: ratios must be >= 0");
  const double sum = ratios.train + ratios.val + ratios.test;
  require(sum > 0.0, "split: ratios must not all be zero");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const std::string& g = triplets[i].provenance.group;
    groups[g.empty() ? triplets[i].source.clip_id : g].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> order;
  for (const auto& [k, v] : groups) order.push_back(&v);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double n = static_cast<double>(triplets.size());
  const double target[3] = {n * ratios.train / sum, n * ratios.val / sum, n * ratios.test / sum};
  double filled[3] = {0.0, 0.0, 0.0};
  std::vector<int> assign(triplets.size(), 0);
  for (const auto* members : order) {
    int best = 0;
    double best_deficit = -1e300;
    for (int s = 0; s < 3; ++s) {
      const double deficit = target[s] - filled[s];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    filled[best] += static_cast<double>(members->size());
    for (std::size_t i : *members) assign[i] = best;
  }
  Split out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    auto& dst = assign[i] == 0 ? out.train : assign[i] == 1 ? out.val : out.test;
    dst.push_back(std::move(triplets[i]));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  for (const auto& e : entries)
    os << json{{"clip_id", e.clip_id}, {"path", e.path}, {"scenario_id", e.scenario_id}, {"length", e.length}}.dump()
       << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.push_back({j.at("clip_id"), j.at("path"), j.at("scenario_id"), j.at("length")});
  }
  return out;
}

namespace {

json ref_json(const WindowRef& w) {
  return {{"clip_id", w.clip_id}, {"window_index", w.window_index}, {"start_frame", w.start_frame},
          {"end_frame", w.end_frame}};
}

WindowRef ref_from(const json& j) {
  return {j.at("clip_id"), j.at("window_index"), j.at("start_frame"), j.at("end_frame")};
}

}  // namespace

void write_matches(const std::string& path, const std::vector<MatchRecord>& matches, const SimilarityBand& band) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  for (const auto& m : matches) {
    const bool kept = m.similarity >= band.min && m.similarity <= band.max;
    os << json{{"query", ref_json(m.query)},   {"neighbor", ref_json(m.neighbor)}, {"similarity", m.similarity},
               {"rank", m.rank},               {"sim_min", band.min},              {"sim_max", band.max},
               {"in_band", kept}}
              .dump()
       << '\n';
  }
}

std::vector<MatchRecord> read_matches(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open match file '" + path + "'");
  std::vector<MatchRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.push_back({ref_from(j.at("query")), ref_from(j.at("neighbor")), j.at("similarity"), j.at("rank")});
  }
  return out;
}

}  // namespace interedit::pipeline
