#include "emoreg/session.hpp"

#include <cmath>
#include <set>
#include <string>

#include "emoreg/error.hpp"

namespace emoreg {

SessionStats compute_stats(std::span<const TrialRecord> trials) {
  SessionStats s;
  s.trial_count = trials.size();
  std::vector<TrialRecord> designated;
  for (const auto& t : trials) {
    if (t.designated_quadrant) designated.push_back(t);
  }
  if (!designated.empty()) s.match_rate = match_rate(designated);
  try {
    const auto inst = instability(trials);
    s.t_arousal = inst.t_arousal;
    s.t_valence = inst.t_valence;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::undefined_score) throw;
  }
  return s;
}

Session::Session(SessionConfig config, const SongLibrary& library, const EmotionPredictor* predictor)
    : config_(std::move(config)),
      library_(library),
      predictor_(predictor),
      rng_(config_.seed),
      next_trial_id_(config_.first_trial_id) {
  if (config_.phase != Phase::training && predictor_ == nullptr) {
    throw Error(ErrorCode::config_error, "testing and real-life sessions need trained models");
  }
  eeg::smoothing_points(config_.window_seconds);
  state_.user_id = config_.user_id;
  state_.phase = config_.phase;
  state_.rng_seed = config_.seed;
}

void Session::designate(Quadrant q) {
  if (config_.phase == Phase::training) {
    throw Error(ErrorCode::protocol_order, "training trials take no designation");
  }
  if (pending_) throw Error(ErrorCode::protocol_order, "report the current song before changing the designation");
  state_.designated_quadrant = q;
}

void Session::submit_eeg_features(std::vector<double> features) {
  if (pending_) throw Error(ErrorCode::protocol_order, "report the current song before submitting new EEG");
  montage_features(features, config_.montage);  // width check
  for (double v : features) {
    if (!std::isfinite(v)) throw Error(ErrorCode::validation, "EEG features must be finite");
  }
  state_.current_eeg_features = std::move(features);
}

void Session::submit_eeg(const eeg::Recording& recording) {
  if (pending_) throw Error(ErrorCode::protocol_order, "report the current song before submitting new EEG");
  submit_eeg_features(eeg::extract_features(recording, config_.window_seconds, config_.montage));
}

void Session::queue_song(std::string song_id) {
  if (config_.phase != Phase::training) throw Error(ErrorCode::protocol_order, "only training sessions take a queue");
  library_.at(song_id);
  state_.playlist.push_back(std::move(song_id));
}

const SongRecord& Session::pick_training_song() {
  if (!state_.playlist.empty()) {
    const auto& song = library_.at(state_.playlist.front());
    state_.playlist.pop_front();
    return song;
  }
  // Quadrants in shuffled blocks of four keep the classes even.
  if (quadrant_cycle_.empty()) {
    quadrant_cycle_.assign(all_quadrants.begin(), all_quadrants.end());
    rng_.shuffle(quadrant_cycle_);
  }
  const Quadrant q = quadrant_cycle_.back();
  quadrant_cycle_.pop_back();
  const std::set<std::string> played(state_.played.begin(), state_.played.end());
  return *select_music_alternatives(q, library_, rng_, 1, &played).front();
}

const PendingSong& Session::next_song() {
  if (pending_) throw Error(ErrorCode::protocol_order, "report the current song before requesting another");
  if (config_.phase != Phase::training && !state_.designated_quadrant) {
    throw Error(ErrorCode::protocol_order, "designate a quadrant before requesting a song");
  }
  if (!state_.current_eeg_features) throw Error(ErrorCode::protocol_order, "submit EEG before requesting a song");

  PendingSong p;
  if (config_.phase == Phase::training) {
    p.song_id = pick_training_song().song_id;
  } else {
    std::set<std::string> played;
    if (config_.phase == Phase::real_life) played.insert(state_.played.begin(), state_.played.end());
    const auto rec = recommend(*state_.designated_quadrant, *state_.current_eeg_features, library_, *predictor_, rng_,
                               config_.max_iterations, config_.alternatives, &played);
    p.song_id = rec.song->song_id;
    p.iteration_count = rec.iteration_count;
    p.matched = rec.matched;
  }
  state_.played.push_back(p.song_id);
  pending_ = std::move(p);
  return *pending_;
}

const TrialRecord& Session::report(VAScore score, std::int64_t timestamp) {
  if (!pending_) throw Error(ErrorCode::protocol_order, "no song is awaiting a report");
  score = make_score(score.valence, score.arousal);
  std::optional<Quadrant> designated;
  if (config_.phase != Phase::training) designated = state_.designated_quadrant;
  auto record = make_trial(next_trial_id_++, state_.user_id, timestamp, *state_.current_eeg_features,
                           pending_->song_id, designated, score, config_.phase);
  record.iteration_count = pending_->iteration_count;
  record.matched = pending_->matched;
  state_.trial_log.push_back(std::move(record));
  pending_.reset();
  if (config_.phase != Phase::real_life) state_.current_eeg_features.reset();
  return state_.trial_log.back();
}

TrialOutcome run_training_trial(Session& session, const std::string& song_id, const eeg::Recording& recording,
                                VAScore reported, std::int64_t timestamp) {
  if (session.config().phase != Phase::training) {
    throw Error(ErrorCode::protocol_order, "training trials need a training session");
  }
  try {
    session.submit_eeg(recording);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::missing_channel:
      case ErrorCode::recording_unusable:
      case ErrorCode::no_clean_data:
      case ErrorCode::input_too_short:
        return {std::nullopt, e.what()};
      default:
        throw;
    }
  }
  session.queue_song(song_id);
  session.next_song();
  return {session.report(reported, timestamp), {}};
}

RealLifeResult run_real_life_session(Session& session, Quadrant designated, std::vector<double> eeg_features,
                                     std::size_t playlist_length, const ResponseFn& respond,
                                     std::int64_t start_time, std::int64_t seconds_per_song) {
  if (session.config().phase != Phase::real_life) {
    throw Error(ErrorCode::protocol_order, "playlist sessions need a real-life session");
  }
  RealLifeResult out;
  out.requested = playlist_length;
  session.designate(designated);
  session.submit_eeg_features(std::move(eeg_features));
  for (std::size_t i = 0; i < playlist_length; ++i) {
    try {
      session.next_song();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_candidates) throw;
      out.exhausted = true;
      break;
    }
    const auto& song = session.library().at(session.state().played.back());
    const auto& record = session.report(respond(song, i), start_time + static_cast<std::int64_t>(i) * seconds_per_song);
    out.log.push_back(record);
  }
  return out;
}

}  // namespace emoreg
