#include "emoreg/audio_features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <unordered_map>

#include "emoreg/error.hpp"
#include "emoreg/fft.hpp"

namespace emoreg::audio {

namespace {

constexpr std::size_t tempogram_fft = 1024;  // >= 2 * 384 - 1
constexpr double chroma_min_hz = 27.5;        // A0
constexpr double contrast_fmin = 200.0;
constexpr double contrast_quantile = 0.02;

double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::vector<double> mel_edges(const FrameParams& p) {
  const double lo = hz_to_mel(0.0);
  const double hi = hz_to_mel(p.sample_rate / 2.0);
  std::vector<double> edges(layout::mel_count + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(edges.size() - 1));
  }
  return edges;
}

// Slaney-normalized triangular filters, stored sparsely per band.
struct MelFilter {
  std::size_t first_bin = 0;
  std::vector<double> weights;
};

std::vector<MelFilter> mel_filterbank(const FrameParams& p, std::span<const double> bin_hz) {
  const auto edges = mel_edges(p);
  std::vector<MelFilter> bank(layout::mel_count);
  for (std::size_t m = 0; m < layout::mel_count; ++m) {
    const double lower = edges[m], center = edges[m + 1], upper = edges[m + 2];
    const double norm = 2.0 / (upper - lower);
    bool started = false;
    for (std::size_t k = 0; k < bin_hz.size(); ++k) {
      const double f = bin_hz[k];
      const double rise = (f - lower) / (center - lower);
      const double fall = (upper - f) / (upper - center);
      const double w = std::max(0.0, std::min(rise, fall)) * norm;
      if (w > 0.0) {
        if (!started) {
          bank[m].first_bin = k;
          started = true;
        }
        bank[m].weights.resize(k - bank[m].first_bin + 1, 0.0);
        bank[m].weights[k - bank[m].first_bin] = w;
      } else if (started) {
        break;
      }
    }
  }
  return bank;
}

double to_db(double power) { return 10.0 * std::log10(std::max(power, epsilon_floor)); }

// Orthonormal DCT-II basis rows for the first mfcc_count coefficients.
std::vector<double> dct_basis() {
  const std::size_t n = layout::mel_count;
  std::vector<double> basis(layout::mfcc_count * n);
  for (std::size_t k = 0; k < layout::mfcc_count; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      basis[k * n + i] = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                          (2.0 * static_cast<double>(i) + 1.0) /
                                          (2.0 * static_cast<double>(n)));
    }
  }
  return basis;
}

int pitch_class(double hz) {
  const double midi = 69.0 + 12.0 * std::log2(hz / 440.0);
  const long rounded = std::lround(midi);
  return static_cast<int>(((rounded % 12) + 12) % 12);  // C = 0 ... A = 9
}

std::vector<std::size_t> contrast_band_edges(const FrameParams& p, std::span<const double> bin_hz) {
  // Band b covers [edge[b], edge[b+1]) in bins; edges at 0, 200, 400, ... 6400 Hz, Nyquist.
  std::vector<std::size_t> edges{0};
  double f = contrast_fmin;
  for (std::size_t b = 1; b < layout::contrast_count; ++b, f *= 2.0) {
    const auto it = std::lower_bound(bin_hz.begin(), bin_hz.end(), std::min(f, p.sample_rate / 2.0));
    edges.push_back(static_cast<std::size_t>(it - bin_hz.begin()));
  }
  edges.push_back(bin_hz.size());
  return edges;
}

}  // namespace

std::vector<double> mel_band_centers(const FrameParams& params) {
  const auto edges = mel_edges(params);
  return {edges.begin() + 1, edges.end() - 1};
}

FrameFeatureMatrix extract_frame_features(std::span<const double> audio, const FrameParams& params) {
  const std::size_t n = params.window;
  if (n < 2 || params.hop == 0 || params.sample_rate <= 0.0) {
    throw Error(ErrorCode::config_error, "invalid frame parameters");
  }
  if (audio.size() < n) {
    throw Error(ErrorCode::input_too_short, "audio shorter than one analysis window (" +
                                                std::to_string(n) + " samples)");
  }
  for (double s : audio) {
    if (!std::isfinite(s)) throw Error(ErrorCode::validation, "audio contains non-finite samples");
  }

  const std::size_t frames = 1 + (audio.size() - n) / params.hop;
  const std::size_t bins = n / 2 + 1;
  std::vector<double> bin_hz(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    bin_hz[k] = static_cast<double>(k) * params.sample_rate / static_cast<double>(n);
  }
  std::vector<double> hann(n);
  for (std::size_t i = 0; i < n; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  const auto mel_bank = mel_filterbank(params, bin_hz);
  const auto dct = dct_basis();
  const auto contrast_edges = contrast_band_edges(params, bin_hz);
  std::vector<int> bin_class(bins, -1);
  for (std::size_t k = 1; k < bins; ++k) {
    if (bin_hz[k] >= chroma_min_hz) bin_class[k] = pitch_class(bin_hz[k]);
  }

  FrameFeatureMatrix out;
  out.params = params;
  out.values = Matrix(frames, frame_dims);

  RealFft fft(n);
  std::vector<double> frame(n), power, magnitude(bins), log_mel(layout::mel_count);
  std::vector<double> prev_log_mel(layout::mel_count);
  std::vector<double> onset(frames, 0.0);
  std::vector<double> sorted;

  for (std::size_t f = 0; f < frames; ++f) {
    const auto samples = audio.subspan(f * params.hop, n);
    auto row = out.values.row(f);

    // Time-domain features.
    std::size_t crossings = 0;
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      energy += samples[i] * samples[i];
      if (i > 0 && ((samples[i] >= 0.0) != (samples[i - 1] >= 0.0))) ++crossings;
    }
    row[layout::zcr] = static_cast<double>(crossings) / static_cast<double>(n);
    row[layout::rms] = std::sqrt(energy / static_cast<double>(n));

    for (std::size_t i = 0; i < n; ++i) frame[i] = samples[i] * hann[i];
    fft.power(frame, power);
    double mag_sum = 0.0, weighted_hz = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      magnitude[k] = std::sqrt(power[k]);
      mag_sum += magnitude[k];
      weighted_hz += magnitude[k] * bin_hz[k];
    }

    // Centroid and order-p bandwidth on the magnitude spectrum.
    const double centroid = mag_sum > epsilon_floor ? weighted_hz / mag_sum : 0.0;
    row[layout::centroid] = centroid;
    for (std::size_t b = 0; b < layout::bandwidth_count; ++b) {
      double acc = 0.0;
      if (mag_sum > epsilon_floor) {
        for (std::size_t k = 0; k < bins; ++k) {
          acc += magnitude[k] / mag_sum * std::pow(std::abs(bin_hz[k] - centroid), bandwidth_orders[b]);
        }
      }
      row[layout::bandwidth + b] = std::pow(acc, 1.0 / bandwidth_orders[b]);
    }

    // Mel power spectrogram, log-mel and MFCC.
    for (std::size_t m = 0; m < layout::mel_count; ++m) {
      double acc = 0.0;
      const auto& filt = mel_bank[m];
      for (std::size_t j = 0; j < filt.weights.size(); ++j) acc += filt.weights[j] * power[filt.first_bin + j];
      row[layout::mel + m] = acc;
      log_mel[m] = to_db(acc);
    }
    for (std::size_t c = 0; c < layout::mfcc_count; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < layout::mel_count; ++m) acc += dct[c * layout::mel_count + m] * log_mel[m];
      row[layout::mfcc + c] = acc;
    }
    if (f > 0) {
      double flux = 0.0;
      for (std::size_t m = 0; m < layout::mel_count; ++m) flux += std::max(0.0, log_mel[m] - prev_log_mel[m]);
      onset[f] = flux;
    }
    prev_log_mel = log_mel;

    // Chroma: power folded into pitch classes, peak-normalized.
    double chroma[layout::chroma_count] = {};
    for (std::size_t k = 1; k < bins; ++k) {
      if (bin_class[k] >= 0) chroma[bin_class[k]] += power[k];
    }
    const double chroma_peak = *std::max_element(std::begin(chroma), std::end(chroma));
    for (std::size_t c = 0; c < layout::chroma_count; ++c) {
      row[layout::chroma + c] = chroma_peak > epsilon_floor ? chroma[c] / chroma_peak : 0.0;
    }

    // Spectral contrast over octave sub-bands.
    for (std::size_t b = 0; b < layout::contrast_count; ++b) {
      const std::size_t lo = contrast_edges[b];
      const std::size_t hi = std::max(contrast_edges[b + 1], lo + 1);
      sorted.assign(magnitude.begin() + static_cast<std::ptrdiff_t>(lo),
                    magnitude.begin() + static_cast<std::ptrdiff_t>(std::min(hi, bins)));
      std::sort(sorted.begin(), sorted.end());
      const std::size_t q = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(contrast_quantile * static_cast<double>(sorted.size()))));
      double valley = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < q; ++i) {
        valley += sorted[i];
        peak += sorted[sorted.size() - 1 - i];
      }
      row[layout::contrast + b] = to_db(peak / static_cast<double>(q)) - to_db(valley / static_cast<double>(q));
    }

    // Flatness on the floored power spectrum.
    double log_sum = 0.0, lin_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double s = std::max(power[k], epsilon_floor);
      log_sum += std::log(s);
      lin_sum += s;
    }
    row[layout::flatness] = std::exp(log_sum / static_cast<double>(bins)) / (lin_sum / static_cast<double>(bins));

    // Roll-off: lowest bin whose cumulative magnitude reaches the share.
    for (std::size_t r = 0; r < layout::rolloff_count; ++r) {
      const double threshold = rolloff_percents[r] * mag_sum;
      double cumulative = 0.0;
      std::size_t k = 0;
      for (; k < bins; ++k) {
        cumulative += magnitude[k];
        if (cumulative >= threshold) break;
      }
      row[layout::rolloff + r] = bin_hz[std::min(k, bins - 1)];
    }
  }

  // Tempogram: Hann-windowed local autocorrelation of the onset envelope,
  // centered on each frame, normalized by lag 0.
  const std::size_t lags = layout::tempogram_count;
  const std::size_t half = lags / 2;
  std::vector<double> win(lags);
  for (std::size_t i = 0; i < lags; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(lags));
  }
  RealFft ac_fft(tempogram_fft);
  std::vector<double> segment(tempogram_fft), spec, mirrored(tempogram_fft);
  std::vector<std::complex<double>> ac;
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(segment.begin(), segment.end(), 0.0);
    for (std::size_t i = 0; i < lags; ++i) {
      const long t = static_cast<long>(f) + static_cast<long>(i) - static_cast<long>(half);
      if (t >= 0 && t < static_cast<long>(frames)) segment[i] = onset[static_cast<std::size_t>(t)] * win[i];
    }
    ac_fft.power(segment, spec);
    // The power spectrum is real and even, so a forward transform of its
    // full mirror gives N times the circular autocorrelation.
    for (std::size_t k = 0; k < tempogram_fft; ++k) {
      mirrored[k] = spec[k <= tempogram_fft / 2 ? k : tempogram_fft - k];
    }
    ac_fft.forward(mirrored, ac);
    auto row = out.values.row(f);
    const double zero_lag = ac[0].real();
    for (std::size_t l = 0; l < lags; ++l) {
      // Bins above n/2 of a real-even input equal their mirror.
      const double value = (l <= tempogram_fft / 2 ? ac[l].real() : ac[tempogram_fft - l].real());
      row[layout::tempogram + l] = zero_lag > epsilon_floor ? value / zero_lag : 0.0;
    }
  }
  return out;
}

MusicFeatureVector aggregate_features(const FrameFeatureMatrix& m, std::string song_id) {
  if (m.frames() == 0 || m.values.cols() != frame_dims) {
    throw Error(ErrorCode::dimension_mismatch, "frame feature matrix must be frames x 555");
  }
  MusicFeatureVector out;
  out.song_id = std::move(song_id);
  out.values.assign(aggregated_dims, 0.0);
  const double n = static_cast<double>(m.frames());
  for (std::size_t d = 0; d < frame_dims; ++d) {
    double sum = 0.0, peak = m.values(0, d);
    for (std::size_t f = 0; f < m.frames(); ++f) {
      sum += m.values(f, d);
      peak = std::max(peak, m.values(f, d));
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t f = 0; f < m.frames(); ++f) ss += (m.values(f, d) - mean) * (m.values(f, d) - mean);
    out.values[d] = mean;
    out.values[frame_dims + d] = std::sqrt(ss / n);
    out.values[2 * frame_dims + d] = peak;
  }
  if (out.values.size() != aggregated_dims) {
    throw Error(ErrorCode::dimension_mismatch, "aggregated vector must have 1665 entries");
  }
  return out;
}

ReductionReport reduce_features(const Matrix& vectors, const ReductionParams& params) {
  const std::size_t songs = vectors.rows();
  const std::size_t dims = vectors.cols();
  if (songs < 2) throw Error(ErrorCode::insufficient_data, "feature reduction needs at least 2 vectors");

  ReductionReport report;
  std::vector<std::size_t> survivors;

  // Stages 1 and 2.
  std::unordered_map<std::string, std::size_t> counts;
  char buf[64];
  for (std::size_t d = 0; d < dims; ++d) {
    const double first = vectors(0, d);
    bool constant = true;
    for (std::size_t s = 1; s < songs && constant; ++s) constant = vectors(s, d) == first;
    if (constant) {
      report.dropped_constant.push_back(d);
      continue;
    }
    counts.clear();
    std::size_t mode = 0;
    for (std::size_t s = 0; s < songs; ++s) {
      const double v = vectors(s, d) == 0.0 ? 0.0 : vectors(s, d);  // fold -0 into 0
      const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific,
                                     params.significant_digits - 1);
      mode = std::max(mode, ++counts[std::string(buf, res.ptr)]);
    }
    if (static_cast<double>(mode) >= params.quasi_constant_share * static_cast<double>(songs)) {
      report.dropped_quasi_constant.push_back(d);
    } else {
      survivors.push_back(d);
    }
  }

  // Stage 3 on standardized columns: r = <z_i, z_j> / n.
  std::vector<std::vector<double>> z;
  z.reserve(survivors.size());
  for (std::size_t d : survivors) {
    std::vector<double> col = vectors.column(d);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(songs);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(songs));
    for (double& v : col) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    z.push_back(std::move(col));
  }
  std::vector<std::size_t> kept_local;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    bool redundant = false;
    for (std::size_t j : kept_local) {
      double dot = 0.0;
      for (std::size_t s = 0; s < songs; ++s) dot += z[i][s] * z[j][s];
      if (std::abs(dot / static_cast<double>(songs)) > params.correlation_threshold) {
        redundant = true;
        break;
      }
    }
    if (redundant) {
      report.dropped_correlated.push_back(survivors[i]);
    } else {
      kept_local.push_back(i);
      report.kept_indices.push_back(survivors[i]);
    }
  }
  return report;
}

}  // namespace emoreg::audio
