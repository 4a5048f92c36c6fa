#include "emoreg/eeg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "emoreg/error.hpp"
#include "emoreg/fft.hpp"
#include "emoreg/stats.hpp"

namespace emoreg::eeg {

namespace {

constexpr double highpass_hz = 8.0;
constexpr double lowpass_hz = 49.0;
constexpr int filter_order = 8;  // per pass; 4 leaves only ~73% of 10 Hz power after filtfilt

// Direct-form II transposed biquad, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

std::vector<Biquad> butterworth(double cutoff_hz, double fs, bool highpass) {
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);
  std::vector<Biquad> sections;
  for (int k = 0; k < filter_order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + filter_order) / (2.0 * filter_order);
    const std::complex<double> proto = std::polar(1.0, theta);  // left half-plane unit pole
    const std::complex<double> s = highpass ? warped / proto : warped * proto;
    const std::complex<double> z = (2.0 * fs + s) / (2.0 * fs - s);
    Biquad q{};
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    if (highpass) {
      const double gain = (1.0 - q.a1 + q.a2) / 4.0;  // unit gain at Nyquist
      q.b0 = gain;
      q.b1 = -2.0 * gain;
      q.b2 = gain;
    } else {
      const double gain = (1.0 + q.a1 + q.a2) / 4.0;  // unit gain at DC
      q.b0 = gain;
      q.b1 = 2.0 * gain;
      q.b2 = gain;
    }
    sections.push_back(q);
  }
  return sections;
}


// Steady-state initial conditions for a unit step, per section, scaled by
// the DC gain of the preceding sections.
std::vector<std::array<double, 2>> step_initial_state(const std::vector<Biquad>& sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& q : sos) {
    // (I - A) z = B with A the transposed companion matrix of a.
    const double m00 = 1.0 + q.a1, m01 = -1.0, m10 = q.a2, m11 = 1.0;
    const double r0 = q.b1 - q.a1 * q.b0, r1 = q.b2 - q.a2 * q.b0;
    const double det = m00 * m11 - m01 * m10;
    zi.push_back({scale * (r0 * m11 - m01 * r1) / det, scale * (m00 * r1 - m10 * r0) / det});
    scale *= (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
  }
  return zi;
}

void run_cascade(const std::vector<Biquad>& sos, const std::vector<std::array<double, 2>>& zi,
                 std::vector<double>& x) {
  const double x0 = x.front();
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double z1 = zi[s][0] * x0, z2 = zi[s][1] * x0;
    for (double& v : x) {
      const double y = q.b0 * v + z1;
      z1 = q.b1 * v - q.a1 * y + z2;
      z2 = q.b2 * v - q.a2 * y;
      v = y;
    }
  }
}

struct Cascade {
  std::vector<Biquad> sections;
  std::vector<std::array<double, 2>> zi;
};

const Cascade& passband_cascade() {
  static const Cascade cascade = [] {
    Cascade c;
    c.sections = butterworth(highpass_hz, sample_rate, true);
    const auto lp = butterworth(lowpass_hz, sample_rate, false);
    c.sections.insert(c.sections.end(), lp.begin(), lp.end());
    c.zi = step_initial_state(c.sections);
    return c;
  }();
  return cascade;
}

std::vector<double> filtfilt(const Cascade& cascade, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = std::min<std::size_t>(n - 1, static_cast<std::size_t>(sample_rate));
  // Odd extension about both end points.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(cascade.sections, cascade.zi, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(cascade.sections, cascade.zi, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

bool is_emotiv_label(std::string_view name) {
  return std::find(emotiv_channels.begin(), emotiv_channels.end(), name) != emotiv_channels.end();
}

double passband_power(std::span<const double> x) {
  // Unsmoothed 8-48 Hz power, used for artifact screening.
  RealFft fft(x.size());
  std::vector<double> p;
  fft.power(x, p);
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double hz = static_cast<double>(k) * sample_rate / n;
    if (band_of(hz)) total += 2.0 * p[k] / (n * n);
  }
  return total;
}

}  // namespace

std::optional<Band> band_of(double hz) noexcept {
  if (hz < band_edges_hz[0] || hz > band_edges_hz[band_count]) return std::nullopt;
  for (std::size_t b = 0; b < band_count; ++b) {
    if (hz <= band_edges_hz[b + 1]) return static_cast<Band>(b);
  }
  return std::nullopt;
}

std::size_t feature_count(Montage montage) noexcept {
  return montage == Montage::full14 ? 40 : 8;
}

std::vector<std::string> feature_names(Montage montage) {
  static constexpr std::array<std::string_view, band_count> bands{"alpha", "beta1", "beta2", "gamma"};
  std::vector<std::string> names;
  if (montage == Montage::temporal_t7t8) {
    for (std::string_view ch : {"T7", "T8"}) {
      for (auto b : bands) names.push_back(std::string(ch) + "_" + std::string(b));
    }
    return names;
  }
  for (const auto& [right, left] : asymmetry_pairs) {
    for (auto b : bands) names.push_back(std::string(right) + "-" + std::string(left) + "_" + std::string(b));
  }
  for (auto ch : temporal_channels) {
    for (auto b : bands) names.push_back(std::string(ch) + "_" + std::string(b));
  }
  for (auto b : bands) names.push_back("mean_" + std::string(b));
  for (auto b : bands) names.push_back("std_" + std::string(b));
  return names;
}

std::optional<std::size_t> Recording::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == name) return i;
  }
  return std::nullopt;
}

Recording make_recording(std::vector<std::string> channels, std::vector<std::vector<double>> samples) {
  if (channels.empty() || channels.size() > emotiv_channels.size()) {
    throw Error(ErrorCode::validation, "a recording needs 1 to 14 channels");
  }
  if (samples.size() != channels.size()) {
    throw Error(ErrorCode::dimension_mismatch, "one sample series per channel is required");
  }
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (!is_emotiv_label(c)) throw Error(ErrorCode::validation, "unknown channel label '" + c + "'");
    if (!seen.insert(c).second) throw Error(ErrorCode::validation, "duplicate channel label '" + c + "'");
  }
  for (const auto& s : samples) {
    if (s.size() != samples.front().size()) {
      throw Error(ErrorCode::dimension_mismatch, "channels have different lengths");
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw Error(ErrorCode::validation, "recording contains non-finite samples");
    }
  }
  Recording r;
  r.channels = std::move(channels);
  r.samples = std::move(samples);
  return r;
}

Recording bandpass_filter(const Recording& raw) {
  if (raw.length() < static_cast<std::size_t>(sample_rate)) {
    throw Error(ErrorCode::input_too_short, "band-pass filtering needs at least 1 s of data");
  }
  Recording out = raw;
  for (auto& ch : out.samples) ch = filtfilt(passband_cascade(), ch);
  return out;
}

std::vector<double> channel_deviation_measures(const Recording& rec) {
  const std::size_t c = rec.channels.size();
  std::vector<double> kurt(c);
  for (std::size_t i = 0; i < c; ++i) kurt[i] = stats::kurtosis(rec.samples[i]);
  std::vector<double> measures(c, 0.0);
  if (c < 3 || rec.length() == 0) return measures;  // no meaningful cross-channel reference
  const double center = stats::median(kurt);
  std::vector<double> dev(c);
  for (std::size_t i = 0; i < c; ++i) dev[i] = std::abs(kurt[i] - center);
  // Floor the robust scale at the sampling s.d. of Gaussian kurtosis.
  const double floor = std::sqrt(24.0 / static_cast<double>(rec.length()));
  const double scale = std::max(1.4826 * stats::median(dev), floor);
  for (std::size_t i = 0; i < c; ++i) measures[i] = dev[i] / scale;
  return measures;
}

Recording reject_channels(const Recording& rec) {
  const auto measures = channel_deviation_measures(rec);
  Recording out = rec;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    if (measures[i] > channel_rejection_threshold) out.rejected_channels.insert(rec.channels[i]);
  }
  if (out.rejected_channels.size() > max_rejected_channels) {
    throw Error(ErrorCode::recording_unusable,
                std::to_string(out.rejected_channels.size()) + " of " + std::to_string(rec.channels.size()) +
                    " channels rejected");
  }
  return out;
}

std::vector<Window> reject_artifacts(const Recording& rec, int window_seconds) {
  if (window_seconds <= 0) throw Error(ErrorCode::window_size, "window length must be positive");
  const std::size_t span = static_cast<std::size_t>(window_seconds) * static_cast<std::size_t>(sample_rate);
  const std::size_t count = rec.length() / span;
  if (count == 0) throw Error(ErrorCode::input_too_short, "recording shorter than one window");

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    if (rec.is_kept(c)) kept.push_back(c);
  }
  if (kept.empty()) throw Error(ErrorCode::no_clean_data, "every channel has been rejected");

  std::vector<std::vector<double>> power(kept.size(), std::vector<double>(count));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (std::size_t w = 0; w < count; ++w) {
      std::span<const double> seg(rec.samples[kept[k]].data() + w * span, span);
      power[k][w] = passband_power(seg);
    }
  }
  std::vector<Window> clean;
  std::vector<double> medians(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) medians[k] = stats::median(power[k]);
  for (std::size_t w = 0; w < count; ++w) {
    bool artifact = false;
    for (std::size_t k = 0; k < kept.size() && !artifact; ++k) {
      artifact = power[k][w] > artifact_power_ratio * medians[k];
    }
    if (artifact) continue;
    Window win;
    win.start = w * span;
    win.seconds = window_seconds;
    for (std::size_t c : kept) {
      win.channels.push_back(rec.channels[c]);
      win.samples.emplace_back(rec.samples[c].begin() + static_cast<std::ptrdiff_t>(w * span),
                               rec.samples[c].begin() + static_cast<std::ptrdiff_t>((w + 1) * span));
    }
    clean.push_back(std::move(win));
  }
  if (clean.empty()) throw Error(ErrorCode::no_clean_data, "all windows rejected as artifacts");
  return clean;
}

const std::array<double, band_count>* BandPowerTable::find(std::string_view channel) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == channel) return &power[i];
  }
  return nullptr;
}

std::size_t smoothing_points(int window_seconds) {
  switch (window_seconds) {
    case 10: return 3;
    case 5: return 2;
    case 2: return 1;
    default: throw Error(ErrorCode::window_size, "window length must be 10, 5 or 2 seconds");
  }
}

BandPowerTable band_powers(const Window& window, int window_seconds) {
  const std::size_t width = smoothing_points(window_seconds);
  const std::size_t n = static_cast<std::size_t>(window_seconds) * static_cast<std::size_t>(sample_rate);
  BandPowerTable table;
  table.window_seconds = window_seconds;
  table.channels = window.channels;
  RealFft fft(n);
  std::vector<double> p, smooth;
  for (const auto& x : window.samples) {
    if (x.size() != n) {
      throw Error(ErrorCode::window_size, "expected " + std::to_string(n) + " samples, got " +
                                              std::to_string(x.size()));
    }
    fft.power(x, p);
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      p[k] = (edge ? 1.0 : 2.0) * p[k] / nn;
    }
    // Moving average: bins [k - (w-1)/2, k - (w-1)/2 + w - 1], truncated at the ends.
    smooth.assign(p.size(), 0.0);
    const std::size_t left = (width - 1) / 2;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const std::size_t lo = k >= left ? k - left : 0;
      const std::size_t hi = std::min(p.size() - 1, k + (width - 1 - left));
      double acc = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) acc += p[j];
      smooth[k] = acc / static_cast<double>(hi - lo + 1);
    }
    std::array<double, band_count> bands{};
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double hz = static_cast<double>(k) * sample_rate / static_cast<double>(n);
      if (const auto b = band_of(hz)) bands[static_cast<std::size_t>(*b)] += smooth[k];
    }
    table.power.push_back(bands);
  }
  return table;
}

std::vector<double> eeg_feature_vector(const BandPowerTable& bp, Montage montage) {
  auto require = [&](std::string_view name) -> const std::array<double, band_count>& {
    const auto* p = bp.find(name);
    if (p == nullptr) throw Error(ErrorCode::missing_channel, std::string(name));
    return *p;
  };
  std::vector<double> out;
  out.reserve(feature_count(montage));
  if (montage == Montage::temporal_t7t8) {
    for (std::string_view ch : {"T7", "T8"}) {
      const auto& p = require(ch);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }
  for (const auto& [right, left] : asymmetry_pairs) {
    const auto& r = require(right);
    const auto& l = require(left);
    for (std::size_t b = 0; b < band_count; ++b) out.push_back(r[b] - l[b]);
  }
  for (auto ch : temporal_channels) {
    const auto& p = require(ch);
    out.insert(out.end(), p.begin(), p.end());
  }
  std::array<double, band_count> means{}, sds{};
  for (std::size_t b = 0; b < band_count; ++b) {
    std::vector<double> col;
    for (const auto& p : bp.power) col.push_back(p[b]);
    means[b] = stats::mean(col);
    sds[b] = stats::stddev(col);
  }
  out.insert(out.end(), means.begin(), means.end());
  out.insert(out.end(), sds.begin(), sds.end());
  if (out.size() != feature_count(montage)) {
    throw Error(ErrorCode::dimension_mismatch, "EEG feature vector must have 40 entries");
  }
  return out;
}

std::vector<double> extract_features(const Recording& raw, int window_seconds, Montage montage) {
  smoothing_points(window_seconds);  // validates the length
  const auto filtered = reject_channels(bandpass_filter(raw));
  const auto windows = reject_artifacts(filtered, window_seconds);
  return eeg_feature_vector(band_powers(windows.back(), window_seconds), montage);
}

VarianceAnalysis variance_analysis(const std::vector<Matrix>& experiments) {
  if (experiments.size() < 2) throw Error(ErrorCode::insufficient_data, "variance analysis needs >= 2 experiments");
  const std::size_t dims = experiments.front().cols();
  for (const auto& e : experiments) {
    if (e.rows() < 2) throw Error(ErrorCode::insufficient_data, "each experiment needs >= 2 trials");
    if (e.cols() != dims) throw Error(ErrorCode::dimension_mismatch, "experiments have different feature counts");
  }
  VarianceAnalysis out;
  out.intra.assign(dims, 0.0);
  out.inter.assign(dims, 0.0);
  out.intra_lower.assign(dims, false);
  const double n_exp = static_cast<double>(experiments.size());
  const double n_pairs = n_exp - 1.0;
  std::size_t lower = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    for (const auto& e : experiments) out.intra[d] += stats::variance(e.column(d), true) / n_exp;
    for (std::size_t i = 0; i + 1 < experiments.size(); ++i) {
      const auto a = experiments[i].column(d);
      const auto b = experiments[i + 1].column(d);
      const std::size_t tail = a.size() - a.size() / 2;
      const std::size_t head = b.size() / 2;
      std::vector<double> joined(a.end() - static_cast<std::ptrdiff_t>(tail), a.end());
      joined.insert(joined.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(head));
      out.inter[d] += stats::variance(joined, true) / n_pairs;
    }
    out.intra_lower[d] = out.intra[d] < out.inter[d];
    if (out.intra_lower[d]) ++lower;
  }
  out.fraction = static_cast<double>(lower) / static_cast<double>(dims);
  return out;
}

}  // namespace emoreg::eeg
