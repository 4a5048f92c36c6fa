#pragma once

// Small synthetic library, trial log and trained models shared by tests.

#include <algorithm>
#include <string>
#include <vector>

#include "emoreg/domain.hpp"
#include "emoreg/library.hpp"
#include "emoreg/random.hpp"
#include "emoreg/synthetic.hpp"
#include "emoreg/training.hpp"

namespace fixture {

inline emoreg::SongLibrary library(std::size_t songs = 80) {
  emoreg::synthetic::LibraryConfig cfg;
  cfg.songs = songs;
  cfg.informative_dims = 6;
  cfg.constant_dims = 1;
  cfg.quasi_constant_dims = 1;
  cfg.duplicate_dims = 1;
  cfg.seed = 3;
  return emoreg::SongLibrary(emoreg::synthetic::make_songs(cfg));
}

// Responses are signs of simple linear functions of EEG and music features.
inline std::vector<emoreg::TrialRecord> trials(const emoreg::SongLibrary& lib, std::size_t n = 70,
                                               std::uint64_t seed = 5) {
  emoreg::Rng rng(seed);
  std::vector<emoreg::TrialRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> eeg(40);
    for (double& v : eeg) v = rng.normal(1.0, 0.5);
    const auto& song = lib.songs()[rng.uniform_index(lib.size())];
    const auto& m = *song.feature_vector;
    const double v = std::clamp(2.0 * (eeg[0] - 1.0) + m[0], -5.0, 5.0);
    const double a = std::clamp(2.0 * (eeg[18] - 1.0) - m[1], -5.0, 5.0);
    out.push_back(emoreg::make_trial(i + 1, "fx", static_cast<std::int64_t>(60 * i), eeg, song.song_id,
                                     std::nullopt, {v, a}, emoreg::Phase::training));
  }
  return out;
}

inline emoreg::TrainingConfig training_config(std::size_t k = 44) {
  emoreg::TrainingConfig cfg;
  cfg.combined_k = k;
  cfg.seed = 9;
  return cfg;
}

struct Trained {
  emoreg::SongLibrary lib;
  emoreg::MusicPipeline music;
  std::vector<emoreg::TrialRecord> log;
  emoreg::VAModelPair models;
};

inline Trained trained(std::size_t k = 44) {
  Trained t{library(), {}, {}, {}};
  t.music = emoreg::build_music_pipeline(t.lib, {50, 1});
  t.log = trials(t.lib);
  t.models = emoreg::train_user_models("fx", t.log, t.lib, t.music, training_config(k));
  return t;
}

}  // namespace fixture
