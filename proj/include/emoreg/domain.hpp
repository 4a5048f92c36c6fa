#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emoreg {

// Signed valence/arousal pair on the [-5, 5] self-report sliders.
struct VAScore {
  double valence = 0.0;
  double arousal = 0.0;

  friend bool operator==(const VAScore&, const VAScore&) = default;
};

// Validates range and finiteness; throws invalid_score otherwise.
VAScore make_score(double valence, double arousal);

// Q1 (+v,+a), Q2 (-v,+a), Q3 (-v,-a), Q4 (+v,-a). Zero counts as negative.
enum class Quadrant : std::uint8_t { q1 = 1, q2 = 2, q3 = 3, q4 = 4 };

inline constexpr std::array<Quadrant, 4> all_quadrants{Quadrant::q1, Quadrant::q2, Quadrant::q3,
                                                       Quadrant::q4};

// A component is "positive" only when strictly greater than zero.
inline constexpr bool positive_axis(double v) noexcept { return v > 0.0; }

Quadrant quadrant_from_signs(bool valence_positive, bool arousal_positive) noexcept;
bool valence_positive(Quadrant q) noexcept;
bool arousal_positive(Quadrant q) noexcept;

// Throws invalid_score for non-finite components. No range check: annotation
// pairs and raw model outputs are discretized with the same rule.
Quadrant quadrant_of(const VAScore& score);

std::string_view to_string(Quadrant q);
Quadrant parse_quadrant(std::string_view text);  // "Q1".."Q4", case-insensitive

// Raw crowd annotation in [1, 9] shifted to the signed range [-4, 4].
double rescale_annotation(double raw);

enum class Genre : std::uint8_t { blues, electronic, rock, classical, folk, jazz, country, pop };

std::string_view to_string(Genre g);
Genre parse_genre(std::string_view text);  // case-sensitive canonical names

struct SongRecord {
  std::string song_id;
  std::string audio_path;
  Genre genre = Genre::pop;
  VAScore raw_annotation;       // each component in [1, 9]
  VAScore rescaled_annotation;  // raw - 5
  std::optional<std::vector<double>> feature_vector;

  Quadrant annotation_quadrant() const { return quadrant_of(rescaled_annotation); }
};

SongRecord make_song(std::string song_id, std::string audio_path, Genre genre, double valence_raw,
                     double arousal_raw);

enum class Phase : std::uint8_t { training, testing, real_life };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view text);

struct TrialRecord {
  std::uint64_t trial_id = 0;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds; virtual clock in simulations
  std::vector<double> eeg_features;  // raw (unnormalized) EEG feature vector
  std::string song_id;
  std::optional<Quadrant> designated_quadrant;
  VAScore evaluated_score;
  Quadrant evaluated_quadrant = Quadrant::q3;
  Phase phase = Phase::training;
  // Recommendation outcome for testing / real-life trials.
  std::optional<int> iteration_count;
  std::optional<bool> matched;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

// Builds a record with evaluated_quadrant derived from the score.
TrialRecord make_trial(std::uint64_t trial_id, std::string user_id, std::int64_t timestamp,
                       std::vector<double> eeg_features, std::string song_id,
                       std::optional<Quadrant> designated, VAScore evaluated, Phase phase);

}  // namespace emoreg
