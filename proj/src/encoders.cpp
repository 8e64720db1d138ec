#include "interedit/encoders.hpp"

#include <cctype>
#include <cmath>
#include <random>

namespace interedit {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> HashedTextEncoder::tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RowVec HashedTextEncoder::encode(const std::string& text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error("text encoder: instruction is empty");
  RowVec acc = RowVec::Zero(dim_);
  for (const auto& tok : tokens) {
    std::mt19937_64 rng(fnv1a(tok) ^ seed_);
    std::normal_distribution<double> n;
    for (int i = 0; i < dim_; ++i) acc[i] += n(rng);
  }
  return acc / acc.norm();
}

PooledProjectionEmbedder::PooledProjectionEmbedder(motion::DatasetStats stats, int joint_count, int dim,
                                                   std::uint64_t seed, int segments)
    : stats_(std::move(stats)), joints_(joint_count), dim_(dim), segments_(segments) {
  require(dim >= 1 && segments >= 1, "embedder: dim and segments must be positive");
  const motion::FeatureLayout layout{joint_count};
  require_shape(stats_.mean.size() == layout.sequence_width(), "embedder: stats width mismatch");
  const Eigen::Index in = static_cast<Eigen::Index>(segments) * 2 * layout.stripped_width();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  projection_.resize(in, dim);
  for (Eigen::Index i = 0; i < projection_.size(); ++i) projection_.data()[i] = n(rng);
  projection_ /= std::sqrt(static_cast<double>(in));
}

RowVec PooledProjectionEmbedder::embed(const Mat& features) const {
  const Mat stripped = motion::strip_contacts(motion::normalize(features, stats_), joints_);
  const Eigen::Index length = stripped.rows();
  require(length >= segments_, "embedder: sequence shorter than segment count");
  const Eigen::Index width = stripped.cols();
  RowVec pooled(segments_ * width);
  for (int s = 0; s < segments_; ++s) {
    const Eigen::Index a = s * length / segments_;
    const Eigen::Index b = (s + 1) * length / segments_;
    pooled.segment(s * width, width) = stripped.middleRows(a, b - a).colwise().mean();
  }
  RowVec e = pooled * projection_;
  const double norm = e.norm();
  require(std::isfinite(norm) && norm > 0.0, "embedder: degenerate embedding");
  return e / norm;
}

Mat embed_all(const MotionEmbedder& embedder, const std::vector<Mat>& sequences) {
  Mat out(static_cast<Eigen::Index>(sequences.size()), embedder.dim());
  for (std::size_t i = 0; i < sequences.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = embedder.embed(sequences[i]);
  return out;
}

}  // namespace interedit
