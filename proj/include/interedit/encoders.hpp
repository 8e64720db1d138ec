#pragma once

#include "interedit/motion_repr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace interedit {

/// Frozen text encoder. Implementations must be deterministic.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int dim() const = 0;
  /// Throws Error on empty or whitespace-only text.
  virtual RowVec encode(const std::string& text) const = 0;
};

/// Hashed bag of lowercase alphanumeric tokens; each token maps to a seeded Gaussian vector.
/// The sum is L2-normalized.
class HashedTextEncoder final : public TextEncoder {
 public:
  HashedTextEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  int dim() const override { return dim_; }
  RowVec encode(const std::string& text) const override;

  static std::vector<std::string> tokenize(const std::string& text);

 private:
  int dim_;
  std::uint64_t seed_;
};

/// Frozen motion embedder used as plan-token teacher and as retrieval feature extractor.
/// Input is a flattened sequence in world units (L x 2(12N+4)); output is unit norm.
class MotionEmbedder {
 public:
  virtual ~MotionEmbedder() = default;
  virtual int dim() const = 0;
  virtual RowVec embed(const Mat& features) const = 0;
};

/// Normalizes with dataset statistics, drops contacts, mean-pools over `segments` equal
/// time segments and applies a fixed Gaussian projection.
class PooledProjectionEmbedder final : public MotionEmbedder {
 public:
  PooledProjectionEmbedder(motion::DatasetStats stats, int joint_count, int dim, std::uint64_t seed,
                           int segments = 4);
  int dim() const override { return dim_; }
  RowVec embed(const Mat& features) const override;
  int segments() const { return segments_; }

 private:
  motion::DatasetStats stats_;
  int joints_;
  int dim_;
  int segments_;
  Mat projection_;
};

/// Unit-norm rows of a batch of embeddings.
Mat embed_all(const MotionEmbedder& embedder, const std::vector<Mat>& sequences);

}  // namespace interedit
