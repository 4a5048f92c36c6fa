#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "emoreg/domain.hpp"
#include "emoreg/eeg.hpp"
#include "emoreg/library.hpp"
#include "emoreg/random.hpp"
#include "emoreg/regulation.hpp"
#include "emoreg/training.hpp"

namespace emoreg {

struct SessionConfig {
  std::string user_id;
  Phase phase = Phase::testing;
  std::uint64_t seed = 0;
  int window_seconds = 2;
  eeg::Montage montage = eeg::Montage::full14;
  int max_iterations = default_max_iterations;
  std::size_t alternatives = default_alternatives;
  std::uint64_t first_trial_id = 1;
};

struct SessionState {
  std::string user_id;
  Phase phase = Phase::testing;
  std::optional<Quadrant> designated_quadrant;
  std::optional<std::vector<double>> current_eeg_features;
  std::deque<std::string> playlist;  // queued song ids (training schedules)
  std::vector<std::string> played;
  std::vector<TrialRecord> trial_log;
  std::uint64_t rng_seed = 0;
};

struct PendingSong {
  std::string song_id;
  std::optional<int> iteration_count;
  std::optional<bool> matched;
};

struct SessionStats {
  std::size_t trial_count = 0;
  std::optional<double> match_rate;  // trials with a designation only
  std::optional<double> t_arousal;   // when some song was heard twice
  std::optional<double> t_valence;
};

SessionStats compute_stats(std::span<const TrialRecord> trials);

// One user session. Ordering rules, violations raise protocol_order:
//  * testing / real-life: a designation and EEG features must be present
//    before next_song(); training takes no designation.
//  * every next_song() must be answered by report() before the next one.
//  * testing and training consume the EEG features with each report; in
//    real-life mode the session-start features are reused for every song and
//    no song repeats within the session.
class Session {
 public:
  Session(SessionConfig config, const SongLibrary& library, const EmotionPredictor* predictor);

  void designate(Quadrant q);
  void submit_eeg_features(std::vector<double> features);
  // Runs the feature extraction chain; EEG errors propagate unchanged.
  void submit_eeg(const eeg::Recording& recording);
  void queue_song(std::string song_id);  // training only

  const PendingSong& next_song();
  const TrialRecord& report(VAScore score, std::int64_t timestamp);

  bool has_pending() const noexcept { return pending_.has_value(); }
  const std::optional<PendingSong>& pending() const noexcept { return pending_; }
  const SessionState& state() const noexcept { return state_; }
  const SessionConfig& config() const noexcept { return config_; }
  const SongLibrary& library() const noexcept { return library_; }
  SessionStats stats() const { return compute_stats(state_.trial_log); }

 private:
  const SongRecord& pick_training_song();

  SessionConfig config_;
  const SongLibrary& library_;
  const EmotionPredictor* predictor_;
  Rng rng_;
  SessionState state_;
  std::optional<PendingSong> pending_;
  std::vector<Quadrant> quadrant_cycle_;
  std::uint64_t next_trial_id_;
};

struct TrialOutcome {
  std::optional<TrialRecord> record;
  std::string skipped_reason;  // set when record is empty
};

// Training trial on a fixed song: EEG errors (rejected channels needed by the
// features, no clean window, short input) yield a skipped outcome.
TrialOutcome run_training_trial(Session& session, const std::string& song_id, const eeg::Recording& recording,
                                VAScore reported, std::int64_t timestamp);

// Called with each recommended song and its 0-based position in the playlist.
using ResponseFn = std::function<VAScore(const SongRecord& song, std::size_t position)>;

struct RealLifeResult {
  std::vector<TrialRecord> log;
  std::size_t requested = 0;
  bool exhausted = false;  // library ran out before the requested length
};

// One designation, one EEG collection, then playlist_length recommendations
// without repeats. Timestamps advance by seconds_per_song from start_time.
RealLifeResult run_real_life_session(Session& session, Quadrant designated, std::vector<double> eeg_features,
                                     std::size_t playlist_length, const ResponseFn& respond,
                                     std::int64_t start_time, std::int64_t seconds_per_song = 60);

}  // namespace emoreg
