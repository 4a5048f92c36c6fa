#pragma once

#include <span>
#include <utility>
#include <vector>

#include "emoreg/matrix.hpp"

namespace emoreg {

enum class ScalingScheme { min_max, z_score };

// Per-column affine normalization with statistics fitted on training data.
// Transformed values are clamped to [-clamp_limit, clamp_limit] so unseen
// songs or sessions cannot extrapolate without bound. Zero-spread columns map to 0.
struct FeatureScaler {
  ScalingScheme scheme = ScalingScheme::min_max;
  std::vector<double> offset;  // min or mean
  std::vector<double> spread;  // (max - min) or std; 0 marks a degenerate column
  double clamp_limit = 3.0;

  static FeatureScaler fit(const Matrix& data, ScalingScheme scheme);

  std::size_t dims() const noexcept { return offset.size(); }
  std::vector<double> transform(std::span<const double> x) const;
  Matrix transform(const Matrix& data) const;
  FeatureScaler subset(std::span<const std::size_t> columns) const;

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

// Min-max normalization of a song feature matrix (rows = songs).
std::pair<Matrix, FeatureScaler> normalize_music_features(const Matrix& vectors,
                                                          ScalingScheme scheme = ScalingScheme::min_max);

}  // namespace emoreg
