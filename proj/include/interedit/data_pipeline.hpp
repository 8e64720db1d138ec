#pragma once

#include "interedit/encoders.hpp"
#include "interedit/motion_repr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace interedit::pipeline {

struct Window {
  motion::WindowRef ref;
  motion::TwoPersonSequence sequence;
};

struct SegmentResult {
  std::vector<Window> windows;
  std::vector<std::string> warnings;
};

/// Windows of `win` frames with stride win * (1 - overlap); a trailing partial window is dropped.
SegmentResult window_segment(const motion::TwoPersonSequence& clip, int win = 200, double overlap = 0.5);

/// Unit-norm embedding per window (rows).
Mat embed_windows(const std::vector<Window>& windows, const MotionEmbedder& encoder);

struct MatchRecord {
  motion::WindowRef query;
  motion::WindowRef neighbor;
  double similarity = 0.0;
  int rank = 0;  // 1-based
};

/// Exact cosine top-k per query over the database, skipping windows of the query's own clip.
/// Ties are broken by (clip_id, window_index) ascending. Throws if a query has fewer than k
/// candidates.
std::vector<MatchRecord> retrieve_topk(const Mat& queries, const std::vector<motion::WindowRef>& query_refs,
                                       const Mat& database, const std::vector<motion::WindowRef>& database_refs,
                                       int k = 2);

struct SimilarityBand {
  double min = 0.80;
  double max = 0.995;
};

/// Source/target pairs from matches inside the band, deduplicated as unordered window pairs.
/// Instructions are left empty; `windows` must contain every referenced window.
std::vector<motion::EditTriplet> mine_candidates(const std::vector<MatchRecord>& matches,
                                                 const std::vector<Window>& windows, const SimilarityBand& band);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct Split {
  std::vector<motion::EditTriplet> train;
  std::vector<motion::EditTriplet> val;
  std::vector<motion::EditTriplet> test;
};

/// Group-disjoint split keyed by provenance.group. Groups are shuffled with `seed`, then each
/// goes to the split furthest below its target count (ties: train, val, test).
Split split_triplets(std::vector<motion::EditTriplet> triplets, const SplitRatios& ratios, std::uint64_t seed);

struct ManifestEntry {
  std::string clip_id;
  std::string path;
  std::string scenario_id;
  int length = 0;
};

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

void write_matches(const std::string& path, const std::vector<MatchRecord>& matches, const SimilarityBand& band);
std::vector<MatchRecord> read_matches(const std::string& path);

}  // namespace interedit::pipeline
