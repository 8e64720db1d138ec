#include "interedit/freq_descriptors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace interedit::freq {

void BandConfig::validate() const {
  require(0.0 < r_low && r_low < r_mid && r_mid < r_high && r_high <= 1.0,
          "band cutoffs must satisfy 0 < r_low < r_mid < r_high <= 1");
  require(epsilon > 0.0, "band epsilon must be positive");
  for (double w : weights) require(w >= 0.0, "band weights must be non-negative");
}

InteractionSignals interaction_signals(const Mat& stripped) {
  require_shape(stripped.cols() % 2 == 0, "interaction_signals: odd channel count");
  const Eigen::Index df = stripped.cols() / 2;
  return {0.5 * (stripped.leftCols(df) + stripped.rightCols(df)), stripped.leftCols(df) - stripped.rightCols(df)};
}

const Mat& dct_basis(int length) {
  require(length >= 1, "dct: length must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Mat>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[length];
  if (!slot) {
    auto basis = std::make_unique<Mat>(length, length);
    const double n = static_cast<double>(length);
    for (int k = 0; k < length; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int l = 0; l < length; ++l) {
        (*basis)(k, l) = scale * std::cos(std::numbers::pi * (l + 0.5) * k / n);
      }
    }
    slot = std::move(basis);
  }
  return *slot;
}

Mat dct(const Mat& signal) { return dct_basis(static_cast<int>(signal.rows())) * signal; }

Mat idct(const Mat& coefficients) {
  return dct_basis(static_cast<int>(coefficients.rows())).transpose() * coefficients;
}

RowVec band_energy(const Mat& coefficients, const BandRange& band, double epsilon) {
  require(band.size() > 0, "band_energy: empty band");
  require_shape(band.begin >= 0 && band.end <= coefficients.rows(), "band_energy: band outside coefficients");
  const RowVec mean_sq = coefficients.middleRows(band.begin, band.size()).array().square().colwise().sum() /
                         static_cast<double>(band.size());
  return (mean_sq.array() + epsilon).sqrt().matrix();
}

RowVec band_energy(const Mat& coefficients, const std::vector<int>& bins, double epsilon) {
  require(!bins.empty(), "band_energy: empty band");
  RowVec acc = RowVec::Zero(coefficients.cols());
  for (int k : bins) {
    require_shape(k >= 0 && k < coefficients.rows(), "band_energy: bin out of range");
    acc += coefficients.row(k).array().square().matrix();
  }
  acc /= static_cast<double>(bins.size());
  return (acc.array() + epsilon).sqrt().matrix();
}

std::array<BandRange, 3> band_partition(int length, const BandConfig& config) {
  config.validate();
  require(length >= 1, "band_partition: length must be >= 1");
  std::array<BandRange, 3> bands{};
  const double cut[3] = {config.r_low, config.r_mid, config.r_high};
  int k = 0;
  for (int b = 0; b < 3; ++b) {
    bands[b].begin = k;
    while (k < length && static_cast<double>(k) / length < cut[b]) ++k;
    bands[b].end = k;
  }
  static const char* names[3] = {"low", "mid", "high"};
  for (int b = 0; b < 3; ++b) {
    if (bands[b].size() == 0) throw EmptyBandError(names[b], length);
  }
  return bands;
}

BandEnergyProfile band_descriptors(const Mat& stripped, const BandConfig& config) {
  const auto bands = band_partition(static_cast<int>(stripped.rows()), config);
  const InteractionSignals z = interaction_signals(stripped);
  const Mat cs = dct(z.shared);
  const Mat cd = dct(z.difference);
  BandEnergyProfile out;
  out.values.resize(kDescriptorCount, z.shared.cols());
  for (int b = 0; b < 3; ++b) {
    out.values.row(b) = band_energy(cs, bands[b], config.epsilon);
    out.values.row(3 + b) = band_energy(cd, bands[b], config.epsilon);
  }
  return out;
}

}  // namespace interedit::freq
