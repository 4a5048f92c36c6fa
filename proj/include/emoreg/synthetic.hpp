#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emoreg/domain.hpp"
#include "emoreg/eeg.hpp"
#include "emoreg/library.hpp"
#include "emoreg/matrix.hpp"
#include "emoreg/random.hpp"

namespace emoreg::synthetic {

// ---- song library ----------------------------------------------------------

struct LibraryConfig {
  std::size_t songs = 400;
  std::size_t informative_dims = 30;
  std::size_t constant_dims = 4;
  std::size_t quasi_constant_dims = 4;
  std::size_t duplicate_dims = 4;  // affine copies of the first informative columns
  // Share of each annotation's latent variance carried by the music columns
  // (valence: columns 0-2, arousal: 3-5); 0 makes annotations pure noise.
  double annotation_weight = 0.0;
  std::uint64_t seed = 7;
};

// Music vectors have the informative columns first (independent standard
// normals), then constant, quasi-constant and duplicated columns. Each
// annotation is uniform on [1, 9]: 1 + 8 * Phi(latent) with a standard normal
// latent mixing the sum of its three columns with independent noise.
std::vector<SongRecord> make_songs(const LibraryConfig& config);

// ---- EEG -------------------------------------------------------------------

struct EegConfig {
  std::uint64_t seed = 11;
  double experiment_drift = 0.15;  // s.d. of per-experiment log-amplitude shifts
  double trial_jitter = 0.4;       // s.d. of per-trial log-amplitude shifts
  double noise = 0.5;              // white noise s.d. (uV)
  double artifact_probability = 0.0;
  double bad_channel_probability = 0.0;
  std::vector<std::string> channels;  // empty = all 14 Emotiv channels
};

// Band-limited oscillations whose per-channel, per-band amplitudes follow a
// latent state that shifts between experiments and jitters between trials,
// plus drift and blink-band content that the band-pass filter removes.
class EegUser {
 public:
  explicit EegUser(EegConfig config);

  void start_experiment();
  eeg::Recording record(double seconds);

  const EegConfig& config() const noexcept { return config_; }

 private:
  EegConfig config_;
  Rng rng_;
  std::vector<std::array<double, eeg::band_count>> baseline_;
  std::vector<std::array<double, eeg::band_count>> experiment_;
};

// Sum of sines at the given frequencies on every listed channel (unit
// amplitude each, zero phase). Used by tests and oracles.
eeg::Recording tone_recording(std::span<const std::string> channels, std::span<const double> hz, double seconds);

// ---- responders -------------------------------------------------------------

struct ResponseContext {
  std::span<const double> eeg_features;  // raw features of the pre-song EEG
  const SongRecord& song;
  std::optional<Quadrant> designated;
};

class Responder {
 public:
  virtual ~Responder() = default;
  virtual VAScore respond(const ResponseContext& context) = 0;
};

// score = clamp(scale * (sum_i w_i * x_i + bias) + noise, -5, 5) per axis.
struct LinearAxis {
  std::vector<std::pair<std::size_t, double>> eeg;    // (feature index, weight)
  std::vector<std::pair<std::size_t, double>> music;  // (raw music column, weight)
  double bias = 0.0;
};

struct ResponderConfig {
  std::string kind = "linear";  // linear | uniform_random | always_match
  std::uint64_t seed = 0;
  double noise = 0.0;
  double scale = 2.0;
  LinearAxis valence;
  LinearAxis arousal;
};

nlohmann::json responder_to_json(const ResponderConfig& c);
ResponderConfig responder_from_json(const nlohmann::json& j);

std::unique_ptr<Responder> make_responder(const ResponderConfig& config);

// Linear responder over a few EEG features and informative music columns,
// with weights divided by each input's spread in the calibration data and the
// bias centering each axis. eeg_share is the EEG fraction of score variance.
// EEG signs are random; music signs are positive, the direction the library
// annotations lean.
ResponderConfig calibrated_linear_responder(const SongLibrary& library, const Matrix& eeg_sample,
                                            std::span<const std::size_t> informative_music, std::uint64_t seed,
                                            double eeg_share = 0.35);

}  // namespace emoreg::synthetic
