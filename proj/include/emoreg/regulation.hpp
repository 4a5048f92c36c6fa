#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "emoreg/domain.hpp"
#include "emoreg/library.hpp"
#include "emoreg/random.hpp"
#include "emoreg/training.hpp"

namespace emoreg {

inline constexpr std::size_t default_alternatives = 5;
inline constexpr int default_max_iterations = 5;

// Up to n distinct songs drawn uniformly from the songs annotated in the
// designated quadrant, minus any excluded ids. Throws no_candidates when the
// pool is empty.
std::vector<const SongRecord*> select_music_alternatives(Quadrant designated, const SongLibrary& library, Rng& rng,
                                                         std::size_t n = default_alternatives,
                                                         const std::set<std::string>* exclude = nullptr);

struct Recommendation {
  const SongRecord* song = nullptr;
  int iteration_count = 0;
  bool matched = false;
};

Recommendation recommend(Quadrant designated, std::span<const double> eeg_features, const SongLibrary& library,
                         const EmotionPredictor& predictor, Rng& rng, int max_iterations = default_max_iterations,
                         std::size_t alternatives = default_alternatives,
                         const std::set<std::string>* exclude = nullptr);

// Mean over sequences of (adjacent changes) / (N - 1). Sequences shorter than
// 2 are ignored; throws undefined_score when none remain.
double t_score(const std::vector<std::vector<int>>& sequences);

struct SongTransitions {
  std::size_t listens = 0;
  std::size_t arousal_transitions = 0;
  std::size_t valence_transitions = 0;

  friend bool operator==(const SongTransitions&, const SongTransitions&) = default;
};

struct InstabilityScore {
  double t_arousal = 0.0;
  double t_valence = 0.0;
  std::size_t repeated_song_count = 0;
  std::map<std::string, SongTransitions> per_song;  // repeated songs only
};

// Groups trials by song in log order and scores the axis-sign sequences.
InstabilityScore instability(std::span<const TrialRecord> trials);

// Fraction of trials whose evaluated quadrant equals the designation. Trials
// without a designation are an error; an empty set too.
double match_rate(std::span<const TrialRecord> trials);

// Evaluated quadrant against the song's annotation quadrant.
double annotation_match_rate(std::span<const TrialRecord> trials, const SongLibrary& library);

// Neuroticism percentile rewritten as 1 - score / 100.
double rewrite_neuroticism(double score);

// Pearson r across users; needs >= 3 users.
double correlate_instability(std::span<const double> t_scores, std::span<const double> rewritten_neuroticism);

// Test doubles.
class AlwaysMatchPredictor final : public EmotionPredictor {
 public:
  Quadrant predict(std::span<const double>, const SongRecord& song) const override {
    return song.annotation_quadrant();
  }
};

class FixedPredictor final : public EmotionPredictor {
 public:
  explicit FixedPredictor(Quadrant q) : q_(q) {}
  Quadrant predict(std::span<const double>, const SongRecord&) const override { return q_; }

 private:
  Quadrant q_;
};

}  // namespace emoreg
