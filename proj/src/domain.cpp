#include "emoreg/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "emoreg/error.hpp"

namespace emoreg {

namespace {

constexpr std::array<std::string_view, 8> genre_names{"Blues", "Electronic", "Rock", "Classical",
                                                      "Folk",  "Jazz",       "Country", "Pop"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

VAScore make_score(double valence, double arousal) {
  if (!std::isfinite(valence) || !std::isfinite(arousal)) {
    throw Error(ErrorCode::invalid_score, "score components must be finite");
  }
  if (valence < -5.0 || valence > 5.0 || arousal < -5.0 || arousal > 5.0) {
    throw Error(ErrorCode::invalid_score, "score components must lie in [-5, 5]");
  }
  return {valence, arousal};
}

Quadrant quadrant_from_signs(bool valence_pos, bool arousal_pos) noexcept {
  if (arousal_pos) return valence_pos ? Quadrant::q1 : Quadrant::q2;
  return valence_pos ? Quadrant::q4 : Quadrant::q3;
}

bool valence_positive(Quadrant q) noexcept { return q == Quadrant::q1 || q == Quadrant::q4; }
bool arousal_positive(Quadrant q) noexcept { return q == Quadrant::q1 || q == Quadrant::q2; }

Quadrant quadrant_of(const VAScore& score) {
  if (!std::isfinite(score.valence) || !std::isfinite(score.arousal)) {
    throw Error(ErrorCode::invalid_score, "cannot classify a non-finite score");
  }
  return quadrant_from_signs(positive_axis(score.valence), positive_axis(score.arousal));
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::q1: return "Q1";
    case Quadrant::q2: return "Q2";
    case Quadrant::q3: return "Q3";
    case Quadrant::q4: return "Q4";
  }
  return "Q?";
}

Quadrant parse_quadrant(std::string_view text) {
  for (Quadrant q : all_quadrants) {
    if (iequals(text, to_string(q))) return q;
  }
  throw Error(ErrorCode::parse_error, "unknown quadrant '" + std::string(text) + "'");
}

double rescale_annotation(double raw) {
  if (!std::isfinite(raw) || raw < 1.0 || raw > 9.0) {
    throw Error(ErrorCode::invalid_annotation, "annotation must lie in [1, 9]");
  }
  return raw - 5.0;
}

std::string_view to_string(Genre g) { return genre_names[static_cast<std::size_t>(g)]; }

Genre parse_genre(std::string_view text) {
  for (std::size_t i = 0; i < genre_names.size(); ++i) {
    if (text == genre_names[i]) return static_cast<Genre>(i);
  }
  throw Error(ErrorCode::parse_error, "unknown genre '" + std::string(text) + "'");
}

SongRecord make_song(std::string song_id, std::string audio_path, Genre genre, double valence_raw,
                     double arousal_raw) {
  SongRecord s;
  s.song_id = std::move(song_id);
  s.audio_path = std::move(audio_path);
  s.genre = genre;
  s.rescaled_annotation = {rescale_annotation(valence_raw), rescale_annotation(arousal_raw)};
  s.raw_annotation = {valence_raw, arousal_raw};
  return s;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::training: return "training";
    case Phase::testing: return "testing";
    case Phase::real_life: return "real_life";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  for (Phase p : {Phase::training, Phase::testing, Phase::real_life}) {
    if (text == to_string(p)) return p;
  }
  throw Error(ErrorCode::parse_error, "unknown phase '" + std::string(text) + "'");
}

TrialRecord make_trial(std::uint64_t trial_id, std::string user_id, std::int64_t timestamp,
                       std::vector<double> eeg_features, std::string song_id,
                       std::optional<Quadrant> designated, VAScore evaluated, Phase phase) {
  TrialRecord t;
  t.trial_id = trial_id;
  t.user_id = std::move(user_id);
  t.timestamp = timestamp;
  t.eeg_features = std::move(eeg_features);
  t.song_id = std::move(song_id);
  t.designated_quadrant = designated;
  t.evaluated_score = make_score(evaluated.valence, evaluated.arousal);
  t.evaluated_quadrant = quadrant_of(t.evaluated_score);
  t.phase = phase;
  return t;
}

}  // namespace emoreg
