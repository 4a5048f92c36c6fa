#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emoreg/matrix.hpp"

namespace emoreg::eeg {

inline constexpr double sample_rate = 128.0;

inline constexpr std::array<std::string_view, 14> emotiv_channels{
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4"};

// alpha 8-12, beta1 12-16, beta2 16-32, gamma 32-48 Hz; a bin on a shared
// edge belongs to the lower band.
enum class Band : std::size_t { alpha = 0, beta1 = 1, beta2 = 2, gamma = 3 };
inline constexpr std::size_t band_count = 4;
inline constexpr std::array<double, band_count + 1> band_edges_hz{8.0, 12.0, 16.0, 32.0, 48.0};

std::optional<Band> band_of(double hz) noexcept;

// Right/left hemisphere pairs used for asymmetry features, (right, left).
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 4> asymmetry_pairs{
    {{"AF4", "AF3"}, {"F8", "F7"}, {"F4", "F3"}, {"FC6", "FC5"}}};
inline constexpr std::array<std::string_view, 4> temporal_channels{"T7", "T8", "P7", "P8"};

enum class Montage { full14, temporal_t7t8 };

// 40 for the full montage (16 asymmetry + 16 temporal + 8 global), 8 for T7/T8.
std::size_t feature_count(Montage montage) noexcept;
std::vector<std::string> feature_names(Montage montage);

struct Recording {
  std::vector<std::string> channels;
  double rate = sample_rate;
  std::vector<std::vector<double>> samples;  // channel-major
  std::set<std::string> rejected_channels;

  std::size_t length() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
  double duration_seconds() const noexcept { return static_cast<double>(length()) / rate; }
  std::optional<std::size_t> channel_index(std::string_view name) const;
  bool is_kept(std::size_t channel) const { return !rejected_channels.contains(channels[channel]); }
};

// Validates labels (Emotiv names, no duplicates, 1..14 channels), equal
// lengths and finite samples.
Recording make_recording(std::vector<std::string> channels, std::vector<std::vector<double>> samples);

// Zero-phase 8th-order Butterworth high-pass at 8 Hz then low-pass at 49 Hz.
Recording bandpass_filter(const Recording& raw);

// |robust z| of each channel's kurtosis across channels (one entry per channel).
std::vector<double> channel_deviation_measures(const Recording& rec);

inline constexpr double channel_rejection_threshold = 20.0;
inline constexpr std::size_t max_rejected_channels = 7;

// Marks channels whose deviation measure exceeds the threshold.
Recording reject_channels(const Recording& rec);

struct Window {
  std::size_t start = 0;  // first sample in the source recording
  int seconds = 2;
  std::vector<std::string> channels;  // kept channels only
  std::vector<std::vector<double>> samples;
};

inline constexpr double artifact_power_ratio = 5.0;

// Splits into non-overlapping windows (a trailing partial window is dropped)
// and removes windows where any kept channel's 8-48 Hz power exceeds
// artifact_power_ratio times that channel's median across windows.
std::vector<Window> reject_artifacts(const Recording& rec, int window_seconds);

struct BandPowerTable {
  int window_seconds = 2;
  std::vector<std::string> channels;
  std::vector<std::array<double, band_count>> power;

  const std::array<double, band_count>* find(std::string_view channel) const;
};

// Moving-average width applied to the spectrum for each window length.
std::size_t smoothing_points(int window_seconds);

// One-sided periodogram |X_k|^2 / N^2 (doubled off DC and Nyquist), smoothed,
// summed into the four bands. Window must hold exactly seconds * 128 samples.
BandPowerTable band_powers(const Window& window, int window_seconds);

std::vector<double> eeg_feature_vector(const BandPowerTable& bp, Montage montage = Montage::full14);

// Whole chain for one recording: filter, channel rejection, artifact
// rejection, band powers of the most recent clean window, feature vector.
std::vector<double> extract_features(const Recording& raw, int window_seconds,
                                     Montage montage = Montage::full14);

struct VarianceAnalysis {
  std::vector<double> intra;  // mean within-experiment variance per feature
  std::vector<double> inter;  // mean variance over tail-half + head-half of consecutive experiments
  std::vector<bool> intra_lower;
  double fraction = 0.0;
};

// Each matrix holds one experiment's trials (rows) by features (columns).
VarianceAnalysis variance_analysis(const std::vector<Matrix>& experiments);

}  // namespace emoreg::eeg
