#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emoreg/domain.hpp"
#include "emoreg/library.hpp"
#include "emoreg/random.hpp"
#include "emoreg/session.hpp"
#include "emoreg/synthetic.hpp"
#include "emoreg/training.hpp"

namespace emoreg {

struct RepetitionPolicy {
  double min_share = 0.25;  // share of distinct songs heard more than once
  double max_share = 0.35;
  std::size_t min_repeats = 2;
  std::size_t max_repeats = 5;
};

// Song ids per experiment: per_quadrant songs from each annotation quadrant,
// shuffled. A repeated song never appears twice in one experiment.
std::vector<std::vector<std::string>> plan_training_schedule(const SongLibrary& library, std::size_t experiments,
                                                             std::size_t per_quadrant, const RepetitionPolicy& policy,
                                                             Rng& rng);

struct SimulationConfig {
  std::string user_id = "sim01";
  std::uint64_t seed = 1;
  int training_days = 6;
  int experiments_per_day = 2;
  std::size_t songs_per_quadrant = 3;  // 12 training trials per experiment
  RepetitionPolicy repetition;
  int testing_experiments = 2;
  int trials_per_testing_experiment = 22;
  std::vector<Quadrant> testing_designations;  // cycled; empty = Q1..Q4
  int real_life_days = 0;
  int real_life_experiments_per_day = 2;
  std::size_t playlist_min = 10;
  std::size_t playlist_max = 13;
  std::vector<Quadrant> real_life_designations;  // cycled; empty = Q1, Q4
  bool retrain_daily = true;
  double recording_seconds = 20.0;
  int window_seconds = 2;
  eeg::Montage montage = eeg::Montage::full14;
  TrainingConfig training;  // seed is overridden from the simulation seed
  bool random_baseline = true;
};

struct DayRow {
  int day = 0;
  std::size_t trials = 0;
  double match_rate = 0.0;
  double new_song_ratio = 0.0;
  std::optional<double> t_arousal;  // cumulative over every logged trial so far
  std::optional<double> t_valence;

  friend bool operator==(const DayRow&, const DayRow&) = default;
};

struct SimulationReport {
  std::string user_id;
  std::uint64_t seed = 0;
  std::size_t training_trials = 0;
  std::size_t skipped_training_trials = 0;
  double training_annotation_match_rate = 0.0;
  std::optional<double> training_t_arousal;
  std::optional<double> training_t_valence;
  std::optional<double> variance_fraction;  // intra < inter share over training experiments
  CvResult cv_arousal;
  CvResult cv_valence;
  SelectionProfile profile_arousal;
  SelectionProfile profile_valence;
  std::size_t testing_trials = 0;
  double testing_match_rate = 0.0;
  double testing_mean_iterations = 0.0;
  std::optional<double> baseline_match_rate;
  std::vector<DayRow> days;
};

struct SimulationResult {
  SimulationReport report;
  std::vector<TrialRecord> log;  // every logged trial in order
  VAModelPair models;            // final models
};

// Training days, model fit, testing experiments (with the random baseline on
// the same EEG and designations), then real-life days. Every random draw
// derives from config.seed.
SimulationResult run_simulation(const SongLibrary& library, const MusicPipeline& music,
                                synthetic::EegUser& user, synthetic::Responder& responder,
                                const SimulationConfig& config);

inline synthetic::LibraryConfig scenario_library() {
  synthetic::LibraryConfig c;
  c.annotation_weight = 0.4;
  return c;
}

inline MusicPipelineConfig scenario_music() {
  MusicPipelineConfig c;
  c.scaling = ScalingScheme::z_score;
  return c;
}

// Synthetic library, music pipeline, EEG user and responder from one seed.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  synthetic::LibraryConfig library = scenario_library();
  synthetic::EegConfig eeg;
  MusicPipelineConfig music = scenario_music();
  std::string responder_kind = "linear";  // linear | uniform_random | always_match
  double eeg_share = 0.35;
  std::size_t calibration_experiments = 8;
  std::size_t calibration_trials = 5;
  double recording_seconds = 20.0;
};

struct Scenario {
  SongLibrary library;
  MusicPipeline music;
  synthetic::EegConfig eeg;
  synthetic::ResponderConfig responder;
};

// Sub-seeds for the library, pipeline, EEG and responder derive from
// config.seed; explicit seeds inside the nested configs are overridden.
Scenario make_scenario(const ScenarioConfig& config);

nlohmann::json report_to_json(const SimulationReport& r);
std::string days_to_csv(const std::vector<DayRow>& days);

}  // namespace emoreg
