#include "emoreg/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "emoreg/error.hpp"
#include "emoreg/stats.hpp"

namespace emoreg {

FeatureScaler FeatureScaler::fit(const Matrix& data, ScalingScheme scheme) {
  if (data.rows() < 2) throw Error(ErrorCode::insufficient_data, "scaler needs at least 2 rows");
  FeatureScaler s;
  s.scheme = scheme;
  s.offset.resize(data.cols());
  s.spread.resize(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) {
    const auto col = data.column(c);
    if (scheme == ScalingScheme::min_max) {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      s.offset[c] = *lo;
      s.spread[c] = *hi - *lo;
    } else {
      s.offset[c] = stats::mean(col);
      s.spread[c] = stats::stddev(col);
    }
  }
  return s;
}

std::vector<double> FeatureScaler::transform(std::span<const double> x) const {
  if (x.size() != dims()) throw Error(ErrorCode::dimension_mismatch, "scaler input has wrong width");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = spread[i] > 0.0 ? std::clamp((x[i] - offset[i]) / spread[i], -clamp_limit, clamp_limit) : 0.0;
  }
  return out;
}

Matrix FeatureScaler::transform(const Matrix& data) const {
  Matrix out(data.rows(), data.cols());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto t = transform(data.row(r));
    std::copy(t.begin(), t.end(), out.row(r).begin());
  }
  return out;
}

FeatureScaler FeatureScaler::subset(std::span<const std::size_t> columns) const {
  FeatureScaler s;
  s.scheme = scheme;
  s.clamp_limit = clamp_limit;
  for (std::size_t c : columns) {
    if (c >= dims()) throw Error(ErrorCode::dimension_mismatch, "scaler subset index out of range");
    s.offset.push_back(offset[c]);
    s.spread.push_back(spread[c]);
  }
  return s;
}

std::pair<Matrix, FeatureScaler> normalize_music_features(const Matrix& vectors, ScalingScheme scheme) {
  auto scaler = FeatureScaler::fit(vectors, scheme);
  auto normalized = scaler.transform(vectors);
  return {std::move(normalized), std::move(scaler)};
}

}  // namespace emoreg
