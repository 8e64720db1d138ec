#pragma once

#include "interedit/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace interedit::freq {

/// Normalized cutoffs on k/L for the low/mid/high DCT bands plus pooling constants.
struct BandConfig {
  double r_low = 0.08;
  double r_mid = 0.25;
  double r_high = 0.35;
  double epsilon = 1e-8;
  /// Order: S-low, S-mid, S-high, D-low, D-mid, D-high.
  std::array<double, 6> weights{1.0, 1.0, 0.25, 1.0, 1.0, 0.25};

  void validate() const;
};

inline constexpr int kDescriptorCount = 6;
inline constexpr std::array<const char*, 6> kDescriptorNames = {"S-low", "S-mid", "S-high",
                                                                "D-low", "D-mid", "D-high"};

/// Six band-energy rows of width d_f, ordered as kDescriptorNames.
struct BandEnergyProfile {
  Mat values;  // 6 x d_f

  int width() const { return static_cast<int>(values.cols()); }
};

/// Half-open bin ranges [begin, end) on the DCT index k.
struct BandRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

/// Thrown when a band has no bins at the given sequence length.
class EmptyBandError : public Error {
 public:
  EmptyBandError(const std::string& band, int length)
      : Error("frequency band '" + band + "' is empty at L=" + std::to_string(length)), band_(band) {}
  const std::string& band() const noexcept { return band_; }

 private:
  std::string band_;
};

struct InteractionSignals {
  Mat shared;      // z_S = (x^A + x^B) / 2
  Mat difference;  // z_D = x^A - x^B
};

/// Splits an L x 2d_f (contact-free) matrix into average and difference signals.
InteractionSignals interaction_signals(const Mat& stripped);

/// Orthonormal DCT-II along rows (time), applied per column.
Mat dct(const Mat& signal);
/// Inverse of dct (orthonormal DCT-III).
Mat idct(const Mat& coefficients);
/// L x L orthonormal DCT-II basis; row k holds the k-th cosine.
const Mat& dct_basis(int length);

/// sqrt(mean_{k in band} C[k]^2 + eps), per column.
RowVec band_energy(const Mat& coefficients, const BandRange& band, double epsilon);
RowVec band_energy(const Mat& coefficients, const std::vector<int>& bins, double epsilon);

/// Low/mid/high bins for a sequence length: k/L in [0,r_l), [r_l,r_m), [r_m,r_h); k/L >= r_h dropped.
std::array<BandRange, 3> band_partition(int length, const BandConfig& config);

BandEnergyProfile band_descriptors(const Mat& stripped, const BandConfig& config);

}  // namespace interedit::freq
