#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emoreg/matrix.hpp"

namespace emoreg::audio {

// Per-frame feature ledger: 1 ZCR + 3 bandwidth + 128 mel + 13 MFCC + 12 chroma
// + 1 RMS + 1 centroid + 7 contrast + 1 flatness + 4 roll-off + 384 tempogram.
namespace layout {
inline constexpr std::size_t zcr = 0;
inline constexpr std::size_t bandwidth = 1;
inline constexpr std::size_t bandwidth_count = 3;
inline constexpr std::size_t mel = bandwidth + bandwidth_count;
inline constexpr std::size_t mel_count = 128;
inline constexpr std::size_t mfcc = mel + mel_count;
inline constexpr std::size_t mfcc_count = 13;
inline constexpr std::size_t chroma = mfcc + mfcc_count;
inline constexpr std::size_t chroma_count = 12;
inline constexpr std::size_t rms = chroma + chroma_count;
inline constexpr std::size_t centroid = rms + 1;
inline constexpr std::size_t contrast = centroid + 1;
inline constexpr std::size_t contrast_count = 7;
inline constexpr std::size_t flatness = contrast + contrast_count;
inline constexpr std::size_t rolloff = flatness + 1;
inline constexpr std::size_t rolloff_count = 4;
inline constexpr std::size_t tempogram = rolloff + rolloff_count;
inline constexpr std::size_t tempogram_count = 384;
inline constexpr std::size_t frame_dims = tempogram + tempogram_count;
}  // namespace layout

inline constexpr std::size_t frame_dims = layout::frame_dims;
inline constexpr std::size_t statistics_per_dim = 3;  // mean, std, max
inline constexpr std::size_t aggregated_dims = statistics_per_dim * frame_dims;
static_assert(frame_dims == 555);
static_assert(aggregated_dims == 1665);

inline constexpr double rolloff_percents[layout::rolloff_count] = {0.05, 0.10, 0.85, 0.95};
inline constexpr double bandwidth_orders[layout::bandwidth_count] = {2.0, 3.0, 4.0};
inline constexpr double epsilon_floor = 1e-10;

struct FrameParams {
  double sample_rate = 44100.0;
  std::size_t window = 2048;
  std::size_t hop = 512;
};

struct FrameFeatureMatrix {
  Matrix values;  // frames x frame_dims
  FrameParams params;

  std::size_t frames() const noexcept { return values.rows(); }
};

// Hann-windowed STFT on a non-centered grid: frame f covers samples
// [f * hop, f * hop + window). Throws input_too_short below one window.
FrameFeatureMatrix extract_frame_features(std::span<const double> audio,
                                          const FrameParams& params = {});

// Center frequency in Hz of each mel band (Slaney scale, 0 .. Nyquist).
std::vector<double> mel_band_centers(const FrameParams& params = {});

struct MusicFeatureVector {
  std::string song_id;
  std::vector<double> values;  // [means | stds | maxes], each frame_dims long
};

MusicFeatureVector aggregate_features(const FrameFeatureMatrix& m, std::string song_id = {});

struct ReductionParams {
  double quasi_constant_share = 0.90;
  double correlation_threshold = 0.92;
  int significant_digits = 6;
};

// Index lists into the original feature columns; together they partition them.
struct ReductionReport {
  std::vector<std::size_t> kept_indices;
  std::vector<std::size_t> dropped_constant;
  std::vector<std::size_t> dropped_quasi_constant;
  std::vector<std::size_t> dropped_correlated;

  friend bool operator==(const ReductionReport&, const ReductionReport&) = default;
};

// Rows are songs. Constant columns, then quasi-constant columns (mode share at
// or above the threshold after rounding to significant digits), then columns
// whose |Pearson r| with an earlier kept column exceeds the threshold.
ReductionReport reduce_features(const Matrix& vectors, const ReductionParams& params = {});

}  // namespace emoreg::audio
