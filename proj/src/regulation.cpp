#include "emoreg/regulation.hpp"

#include <cmath>
#include <string>

#include "emoreg/error.hpp"
#include "emoreg/stats.hpp"

namespace emoreg {

std::vector<const SongRecord*> select_music_alternatives(Quadrant designated, const SongLibrary& library, Rng& rng,
                                                         std::size_t n, const std::set<std::string>* exclude) {
  std::vector<std::size_t> pool;
  for (std::size_t i : library.quadrant_members(designated)) {
    if (exclude == nullptr || !exclude->contains(library.songs()[i].song_id)) pool.push_back(i);
  }
  if (pool.empty()) {
    throw Error(ErrorCode::no_candidates, "no songs left annotated in " + std::string(to_string(designated)));
  }
  // Partial Fisher-Yates: the first n positions are a uniform sample.
  const std::size_t take = std::min(n, pool.size());
  std::vector<const SongRecord*> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
    out.push_back(&library.songs()[pool[i]]);
  }
  return out;
}

Recommendation recommend(Quadrant designated, std::span<const double> eeg_features, const SongLibrary& library,
                         const EmotionPredictor& predictor, Rng& rng, int max_iterations, std::size_t alternatives,
                         const std::set<std::string>* exclude) {
  if (max_iterations < 1) throw Error(ErrorCode::config_error, "max_iterations must be >= 1");
  std::vector<const SongRecord*> candidates;
  for (int it = 1; it <= max_iterations; ++it) {
    candidates = select_music_alternatives(designated, library, rng, alternatives, exclude);
    std::vector<const SongRecord*> matches;
    for (const auto* s : candidates) {
      if (predictor.predict(eeg_features, *s) == designated) matches.push_back(s);
    }
    if (!matches.empty()) return {matches[rng.uniform_index(matches.size())], it, true};
  }
  return {candidates[rng.uniform_index(candidates.size())], max_iterations, false};
}

double t_score(const std::vector<std::vector<int>>& sequences) {
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& seq : sequences) {
    for (int v : seq) {
      if (v != 0 && v != 1) throw Error(ErrorCode::validation, "t-score sequences must be binary");
    }
    if (seq.size() < 2) continue;
    std::size_t changes = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) changes += seq[i] != seq[i - 1];
    total += static_cast<double>(changes) / static_cast<double>(seq.size() - 1);
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::undefined_score, "no song was listened to at least twice");
  return total / static_cast<double>(used);
}

InstabilityScore instability(std::span<const TrialRecord> trials) {
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_song;
  for (const auto& t : trials) {
    auto& [a, v] = by_song[t.song_id];
    a.push_back(positive_axis(t.evaluated_score.arousal) ? 1 : 0);
    v.push_back(positive_axis(t.evaluated_score.valence) ? 1 : 0);
  }
  InstabilityScore out;
  std::vector<std::vector<int>> arousal, valence;
  for (const auto& [id, seqs] : by_song) {
    const auto& [a, v] = seqs;
    if (a.size() < 2) continue;
    SongTransitions st;
    st.listens = a.size();
    for (std::size_t i = 1; i < a.size(); ++i) {
      st.arousal_transitions += a[i] != a[i - 1];
      st.valence_transitions += v[i] != v[i - 1];
    }
    out.per_song.emplace(id, st);
    arousal.push_back(a);
    valence.push_back(v);
  }
  out.repeated_song_count = out.per_song.size();
  out.t_arousal = t_score(arousal);
  out.t_valence = t_score(valence);
  return out;
}

double match_rate(std::span<const TrialRecord> trials) {
  if (trials.empty()) throw Error(ErrorCode::insufficient_data, "match rate of an empty trial set");
  std::size_t hits = 0;
  for (const auto& t : trials) {
    if (!t.designated_quadrant) {
      throw Error(ErrorCode::validation, "trial " + std::to_string(t.trial_id) + " has no designated quadrant");
    }
    hits += *t.designated_quadrant == t.evaluated_quadrant;
  }
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

double annotation_match_rate(std::span<const TrialRecord> trials, const SongLibrary& library) {
  if (trials.empty()) throw Error(ErrorCode::insufficient_data, "match rate of an empty trial set");
  std::size_t hits = 0;
  for (const auto& t : trials) hits += library.at(t.song_id).annotation_quadrant() == t.evaluated_quadrant;
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

double rewrite_neuroticism(double score) {
  if (!std::isfinite(score) || score < 0.0 || score > 100.0) {
    throw Error(ErrorCode::validation, "neuroticism score must lie in [0, 100]");
  }
  return 1.0 - score / 100.0;
}

double correlate_instability(std::span<const double> t_scores, std::span<const double> rewritten_neuroticism) {
  if (t_scores.size() != rewritten_neuroticism.size()) {
    throw Error(ErrorCode::dimension_mismatch, "one neuroticism value per user is required");
  }
  if (t_scores.size() < 3) throw Error(ErrorCode::insufficient_data, "correlation needs at least 3 users");
  return stats::pearson(t_scores, rewritten_neuroticism);
}

}  // namespace emoreg
