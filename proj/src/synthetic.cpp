#include "emoreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "emoreg/error.hpp"
#include "emoreg/stats.hpp"

namespace emoreg::synthetic {

namespace {

constexpr std::array<Genre, 8> genres{Genre::blues, Genre::electronic, Genre::rock, Genre::classical,
                                      Genre::folk,  Genre::jazz,       Genre::country, Genre::pop};
constexpr std::array<double, eeg::band_count> band_amplitude{10.0, 6.0, 4.0, 2.0};
constexpr int tones_per_band = 3;

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i + 1);
  return buf;
}

}  // namespace

std::vector<SongRecord> make_songs(const LibraryConfig& config) {
  if (config.duplicate_dims > config.informative_dims) {
    throw Error(ErrorCode::config_error, "more duplicated columns than informative ones");
  }
  if (!(config.annotation_weight >= 0.0 && config.annotation_weight <= 1.0)) {
    throw Error(ErrorCode::config_error, "annotation_weight must lie in [0, 1]");
  }
  if (config.annotation_weight > 0.0 && config.informative_dims < 6) {
    throw Error(ErrorCode::config_error, "annotations from music need 6 informative columns");
  }
  Rng rng(config.seed);
  const std::size_t n = config.songs;
  const std::size_t dims =
      config.informative_dims + config.constant_dims + config.quasi_constant_dims + config.duplicate_dims;
  Matrix values(n, dims);
  std::size_t col = 0;
  for (std::size_t j = 0; j < config.informative_dims; ++j, ++col) {
    for (std::size_t i = 0; i < n; ++i) values(i, col) = rng.normal();
  }
  for (std::size_t j = 0; j < config.constant_dims; ++j, ++col) {
    for (std::size_t i = 0; i < n; ++i) values(i, col) = 1.0 + static_cast<double>(j);
  }
  // 95% of songs share one value; the rest are spread out.
  const std::size_t outliers = n / 20;
  for (std::size_t j = 0; j < config.quasi_constant_dims; ++j, ++col) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < n; ++i) values(order[i], col) = i < outliers ? rng.normal(3.0, 1.0) : 0.5;
  }
  for (std::size_t j = 0; j < config.duplicate_dims; ++j, ++col) {
    for (std::size_t i = 0; i < n; ++i) values(i, col) = 2.0 * values(i, j) + 1.0;
  }

  std::vector<SongRecord> songs;
  songs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = numbered("s", i);
    const Genre g = genres[rng.uniform_index(genres.size())];
    const auto row = values.row(i);
    auto annotation = [&](std::size_t first) {
      const double w = config.annotation_weight;
      double music = 0.0;
      if (w > 0.0) music = (row[first] + row[first + 1] + row[first + 2]) / std::sqrt(3.0);
      const double latent = std::sqrt(w) * music + std::sqrt(1.0 - w) * rng.normal();
      return 1.0 + 8.0 * 0.5 * std::erfc(-latent / std::numbers::sqrt2);
    };
    const double v = annotation(0);
    const double a = annotation(3);
    auto s = make_song(id, "audio/" + id + ".wav", g, v, a);
    s.feature_vector = std::vector<double>(row.begin(), row.end());
    songs.push_back(std::move(s));
  }
  return songs;
}

EegUser::EegUser(EegConfig config) : config_(std::move(config)), rng_(config_.seed) {
  if (config_.channels.empty()) {
    config_.channels.assign(eeg::emotiv_channels.begin(), eeg::emotiv_channels.end());
  }
  baseline_.resize(config_.channels.size());
  for (auto& ch : baseline_) {
    for (auto& b : ch) b = rng_.normal(0.0, 0.2);
  }
  experiment_ = baseline_;
}

void EegUser::start_experiment() {
  for (std::size_t c = 0; c < baseline_.size(); ++c) {
    for (std::size_t b = 0; b < eeg::band_count; ++b) {
      experiment_[c][b] = baseline_[c][b] + rng_.normal(0.0, config_.experiment_drift);
    }
  }
}

eeg::Recording EegUser::record(double seconds) {
  const auto n = static_cast<std::size_t>(std::lround(seconds * eeg::sample_rate));
  const std::size_t channels = config_.channels.size();
  const double two_pi = 2.0 * std::numbers::pi;

  const bool burst = rng_.uniform01() < config_.artifact_probability;
  const std::size_t burst_len = static_cast<std::size_t>(2 * eeg::sample_rate);
  const std::size_t burst_start = burst && n > burst_len ? rng_.uniform_index(n - burst_len) : n;
  const bool spiky = rng_.uniform01() < config_.bad_channel_probability;
  const std::size_t spiky_channel = spiky ? rng_.uniform_index(channels) : channels;

  std::vector<std::vector<double>> samples(channels, std::vector<double>(n));
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> band_part(n, 0.0);
    for (std::size_t b = 0; b < eeg::band_count; ++b) {
      const double amp = band_amplitude[b] * std::exp(experiment_[c][b] + rng_.normal(0.0, config_.trial_jitter)) /
                         std::sqrt(static_cast<double>(tones_per_band));
      for (int k = 0; k < tones_per_band; ++k) {
        const double hz = rng_.uniform(eeg::band_edges_hz[b] + 0.5, eeg::band_edges_hz[b + 1] - 0.5);
        const double phase = rng_.uniform(0.0, two_pi);
        for (std::size_t i = 0; i < n; ++i) {
          band_part[i] += amp * std::sin(two_pi * hz * static_cast<double>(i) / eeg::sample_rate + phase);
        }
      }
    }
    const double blink_phase = rng_.uniform(0.0, two_pi);
    auto& x = samples[c];
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / eeg::sample_rate;
      const double gain = (i >= burst_start && i < burst_start + burst_len) ? 20.0 : 1.0;
      x[i] = 4200.0 + 3.0 * std::sin(two_pi * 0.2 * t) + 15.0 * std::sin(two_pi * 3.0 * t + blink_phase) +
             gain * band_part[i] + rng_.normal(0.0, config_.noise);
    }
    if (c == spiky_channel) {
      for (std::size_t i = rng_.uniform_index(192); i < n; i += 192) x[i] += 800.0;
    }
  }
  return eeg::make_recording(config_.channels, std::move(samples));
}

eeg::Recording tone_recording(std::span<const std::string> channels, std::span<const double> hz, double seconds) {
  const auto n = static_cast<std::size_t>(std::lround(seconds * eeg::sample_rate));
  std::vector<double> x(n, 0.0);
  for (double f : hz) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / eeg::sample_rate);
    }
  }
  return eeg::make_recording({channels.begin(), channels.end()}, std::vector<std::vector<double>>(channels.size(), x));
}

// ---- responders -------------------------------------------------------------

namespace {

using nlohmann::json;

double clamp_score(double v) { return std::clamp(v, -5.0, 5.0); }

class LinearResponder final : public Responder {
 public:
  explicit LinearResponder(ResponderConfig c) : c_(std::move(c)), rng_(c_.seed) {}

  VAScore respond(const ResponseContext& ctx) override {
    if (!ctx.song.feature_vector) {
      throw Error(ErrorCode::not_found, "song '" + ctx.song.song_id + "' has no music feature vector");
    }
    const double v = axis(c_.valence, ctx);
    const double a = axis(c_.arousal, ctx);
    return {v, a};
  }

 private:
  double axis(const LinearAxis& ax, const ResponseContext& ctx) {
    double s = ax.bias;
    for (const auto& [i, w] : ax.eeg) s += w * value(ctx.eeg_features, i, "EEG");
    for (const auto& [j, w] : ax.music) s += w * value(*ctx.song.feature_vector, j, "music");
    s *= c_.scale;
    if (c_.noise > 0.0) s += rng_.normal(0.0, c_.noise);
    return clamp_score(s);
  }

  static double value(std::span<const double> x, std::size_t i, const char* what) {
    if (i >= x.size()) throw Error(ErrorCode::dimension_mismatch, std::string("responder ") + what + " index out of range");
    return x[i];
  }

  ResponderConfig c_;
  Rng rng_;
};

class UniformResponder final : public Responder {
 public:
  explicit UniformResponder(std::uint64_t seed) : rng_(seed) {}
  VAScore respond(const ResponseContext&) override {
    const double v = rng_.uniform(-5.0, 5.0);
    const double a = rng_.uniform(-5.0, 5.0);
    return {v, a};
  }

 private:
  Rng rng_;
};

class AlwaysMatchResponder final : public Responder {
 public:
  VAScore respond(const ResponseContext& ctx) override {
    const Quadrant q = ctx.designated.value_or(ctx.song.annotation_quadrant());
    return {valence_positive(q) ? 2.5 : -2.5, arousal_positive(q) ? 2.5 : -2.5};
  }
};

json axis_to_json(const LinearAxis& a) {
  json eeg = json::array(), music = json::array();
  for (const auto& [i, w] : a.eeg) eeg.push_back(json::array({i, w}));
  for (const auto& [j, w] : a.music) music.push_back(json::array({j, w}));
  return {{"eeg", eeg}, {"music", music}, {"bias", a.bias}};
}

LinearAxis axis_from_json(const json& j) {
  LinearAxis a;
  for (const auto& p : j.at("eeg")) a.eeg.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
  for (const auto& p : j.at("music")) a.music.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
  a.bias = j.at("bias").get<double>();
  return a;
}

}  // namespace

json responder_to_json(const ResponderConfig& c) {
  return {{"kind", c.kind},
          {"seed", c.seed},
          {"noise", c.noise},
          {"scale", c.scale},
          {"valence", axis_to_json(c.valence)},
          {"arousal", axis_to_json(c.arousal)}};
}

ResponderConfig responder_from_json(const json& j) {
  try {
    ResponderConfig c;
    c.kind = j.at("kind").get<std::string>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.noise = j.value("noise", 0.0);
    c.scale = j.value("scale", 2.0);
    if (c.kind == "linear") {
      c.valence = axis_from_json(j.at("valence"));
      c.arousal = axis_from_json(j.at("arousal"));
    }
    if (c.noise < 0.0 || !std::isfinite(c.noise)) throw Error(ErrorCode::config_error, "noise must be >= 0");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("responder config: ") + e.what());
  }
}

std::unique_ptr<Responder> make_responder(const ResponderConfig& config) {
  if (config.kind == "linear") return std::make_unique<LinearResponder>(config);
  if (config.kind == "uniform_random") return std::make_unique<UniformResponder>(config.seed);
  if (config.kind == "always_match") return std::make_unique<AlwaysMatchResponder>();
  throw Error(ErrorCode::config_error, "unknown responder kind '" + config.kind + "'");
}

ResponderConfig calibrated_linear_responder(const SongLibrary& library, const Matrix& eeg_sample,
                                            std::span<const std::size_t> informative_music, std::uint64_t seed,
                                            double eeg_share) {
  if (informative_music.size() < 6) throw Error(ErrorCode::config_error, "need 6 informative music columns");
  if (eeg_sample.rows() < 2 || eeg_sample.cols() != eeg::feature_count(eeg::Montage::full14)) {
    throw Error(ErrorCode::config_error, "calibration needs >= 2 full-montage EEG feature rows");
  }
  const Matrix music = library.feature_matrix();
  Rng rng(seed);
  ResponderConfig c;
  c.kind = "linear";
  c.seed = mix_seed(seed, 1);

  auto fill = [&](LinearAxis& ax, std::array<std::size_t, 2> eeg_idx, std::array<std::size_t, 3> music_idx) {
    const double we = std::sqrt(eeg_share / eeg_idx.size());
    const double wm = std::sqrt((1.0 - eeg_share) / music_idx.size());
    for (std::size_t i : eeg_idx) {
      const auto col = eeg_sample.column(i);
      const double w = (rng.uniform01() < 0.5 ? -we : we) / stats::stddev(col);
      ax.eeg.emplace_back(i, w);
      ax.bias -= w * stats::mean(col);
    }
    for (std::size_t k : music_idx) {
      const std::size_t j = informative_music[k];
      const auto col = music.column(j);
      const double w = wm / stats::stddev(col);
      ax.music.emplace_back(j, w);
      ax.bias -= w * stats::mean(col);
    }
  };
  // Valence: frontal alpha asymmetry (AF4/AF3, F4/F3); arousal: temporal
  // fast-band power (T7 beta2, T8 gamma).
  fill(c.valence, {0, 8}, {0, 1, 2});
  fill(c.arousal, {18, 23}, {3, 4, 5});
  return c;
}

}  // namespace emoreg::synthetic
