#include "emoreg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "emoreg/error.hpp"
#include "emoreg/regulation.hpp"

namespace emoreg {

namespace {

constexpr std::int64_t seconds_per_day = 86400;
constexpr std::int64_t seconds_per_experiment = 3600;
constexpr std::int64_t seconds_per_trial = 60;
constexpr int max_eeg_attempts = 5;

std::int64_t clock_at(int day, int experiment, std::size_t trial) {
  return day * seconds_per_day + experiment * seconds_per_experiment + static_cast<std::int64_t>(trial) * seconds_per_trial;
}

// Per-experiment slot assignment for one quadrant's songs.
std::optional<std::vector<std::vector<std::size_t>>> place_songs(const std::vector<std::size_t>& repeated,
                                                                 const std::vector<std::size_t>& counts,
                                                                 const std::vector<std::size_t>& singles,
                                                                 std::size_t experiments, std::size_t per_experiment,
                                                                 Rng& rng) {
  std::vector<std::vector<std::size_t>> slots(experiments);
  std::vector<std::size_t> order(repeated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return counts[a] > counts[b]; });
  for (std::size_t r : order) {
    std::vector<std::size_t> open;
    for (std::size_t e = 0; e < experiments; ++e) {
      if (slots[e].size() < per_experiment) open.push_back(e);
    }
    if (open.size() < counts[r]) return std::nullopt;
    rng.shuffle(open);
    std::stable_sort(open.begin(), open.end(), [&](auto a, auto b) { return slots[a].size() < slots[b].size(); });
    for (std::size_t k = 0; k < counts[r]; ++k) slots[open[k]].push_back(repeated[r]);
  }
  std::vector<std::size_t> free_slots;
  for (std::size_t e = 0; e < experiments; ++e) {
    for (std::size_t k = slots[e].size(); k < per_experiment; ++k) free_slots.push_back(e);
  }
  if (free_slots.size() != singles.size()) return std::nullopt;
  rng.shuffle(free_slots);
  for (std::size_t i = 0; i < singles.size(); ++i) slots[free_slots[i]].push_back(singles[i]);
  return slots;
}

}  // namespace

std::vector<std::vector<std::string>> plan_training_schedule(const SongLibrary& library, std::size_t experiments,
                                                             std::size_t per_quadrant, const RepetitionPolicy& policy,
                                                             Rng& rng) {
  if (experiments == 0 || per_quadrant == 0) throw Error(ErrorCode::config_error, "empty training schedule");
  if (policy.min_share < 0.0 || policy.max_share > 1.0 || policy.min_share > policy.max_share ||
      policy.min_repeats < 2 || policy.min_repeats > policy.max_repeats) {
    throw Error(ErrorCode::config_error, "invalid repetition policy");
  }
  std::vector<std::vector<std::string>> schedule(experiments);
  const std::size_t total = experiments * per_quadrant;
  const std::size_t max_count = std::min(policy.max_repeats, experiments);

  for (Quadrant q : all_quadrants) {
    std::vector<std::size_t> pool(library.quadrant_members(q).begin(), library.quadrant_members(q).end());
    const double share = rng.uniform(policy.min_share, policy.max_share);
    // Distinct-song counts U that can realize the share with the repeat bounds.
    std::vector<std::pair<std::size_t, std::size_t>> feasible;  // (U, R)
    for (std::size_t u = 1; u <= std::min(total, pool.size()); ++u) {
      const auto r = static_cast<std::size_t>(std::lround(share * static_cast<double>(u)));
      const double actual = static_cast<double>(r) / static_cast<double>(u);
      if (r > u || actual < policy.min_share || actual > policy.max_share) continue;
      const std::size_t repeated_slots = total - (u - r);
      if (r == 0 ? repeated_slots == 0
                 : (repeated_slots >= policy.min_repeats * r && repeated_slots <= max_count * r)) {
        feasible.emplace_back(u, r);
      }
    }
    if (feasible.empty()) {
      throw Error(ErrorCode::config_error, "quadrant " + std::string(to_string(q)) + " has too few songs (" +
                                               std::to_string(pool.size()) + ") for the repetition policy");
    }
    std::optional<std::vector<std::vector<std::size_t>>> slots;
    for (int attempt = 0; attempt < 100 && !slots; ++attempt) {
      const auto [u, r] = feasible[rng.uniform_index(feasible.size())];
      rng.shuffle(pool);
      std::vector<std::size_t> repeated(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(r));
      std::vector<std::size_t> singles(pool.begin() + static_cast<std::ptrdiff_t>(r),
                                       pool.begin() + static_cast<std::ptrdiff_t>(u));
      std::vector<std::size_t> counts(r, policy.min_repeats);
      std::size_t extra = total - (u - r) - policy.min_repeats * r;
      while (extra > 0) {
        const std::size_t k = rng.uniform_index(r);
        if (counts[k] < max_count) {
          ++counts[k];
          --extra;
        }
      }
      slots = place_songs(repeated, counts, singles, experiments, per_quadrant, rng);
    }
    if (!slots) throw Error(ErrorCode::config_error, "could not place repeated songs in distinct experiments");
    for (std::size_t e = 0; e < experiments; ++e) {
      for (std::size_t i : (*slots)[e]) schedule[e].push_back(library.songs()[i].song_id);
    }
  }
  for (auto& e : schedule) rng.shuffle(e);
  return schedule;
}

namespace {

// Re-collects until the EEG chain yields features.
std::vector<double> collect_features(synthetic::EegUser& user, const SimulationConfig& config) {
  for (int attempt = 1;; ++attempt) {
    try {
      return eeg::extract_features(user.record(config.recording_seconds), config.window_seconds, config.montage);
    } catch (const Error& e) {
      if (attempt >= max_eeg_attempts) throw;
    }
  }
}

std::vector<Quadrant> cycle_or(const std::vector<Quadrant>& given, std::vector<Quadrant> fallback) {
  return given.empty() ? fallback : given;
}

}  // namespace

SimulationResult run_simulation(const SongLibrary& library, const MusicPipeline& music, synthetic::EegUser& user,
                                synthetic::Responder& responder, const SimulationConfig& config) {
  if (config.training_days < 1 || config.experiments_per_day < 1) {
    throw Error(ErrorCode::config_error, "at least one training day with one experiment is required");
  }
  if (config.playlist_min < 1 || config.playlist_min > config.playlist_max) {
    throw Error(ErrorCode::config_error, "invalid playlist length range");
  }
  SimulationResult out;
  auto& rep = out.report;
  rep.user_id = config.user_id;
  rep.seed = config.seed;
  Rng plan_rng(mix_seed(config.seed, 1));
  std::uint64_t next_trial = 1;

  TrainingConfig tc = config.training;
  tc.seed = mix_seed(config.seed, 2);
  tc.montage = config.montage;

  // ---- training phase ----
  const std::size_t experiments = static_cast<std::size_t>(config.training_days * config.experiments_per_day);
  const auto schedule =
      plan_training_schedule(library, experiments, config.songs_per_quadrant, config.repetition, plan_rng);
  std::vector<TrialRecord> training_log;
  std::vector<Matrix> experiment_features;
  for (std::size_t e = 0; e < experiments; ++e) {
    const int day = static_cast<int>(e) / config.experiments_per_day;
    const int slot = static_cast<int>(e) % config.experiments_per_day;
    SessionConfig sc{config.user_id, Phase::training, mix_seed(config.seed, 100 + e), config.window_seconds,
                     config.montage, default_max_iterations, default_alternatives, next_trial};
    Session session(sc, library, nullptr);
    user.start_experiment();
    Matrix feats;
    for (std::size_t t = 0; t < schedule[e].size(); ++t) {
      const auto rec = user.record(config.recording_seconds);
      std::vector<double> f;
      try {
        f = eeg::extract_features(rec, config.window_seconds, config.montage);
      } catch (const Error&) {
        ++rep.skipped_training_trials;  // run_training_trial would skip it as well
        continue;
      }
      const auto& song = library.at(schedule[e][t]);
      const VAScore score = responder.respond({f, song, std::nullopt});
      const auto outcome = run_training_trial(session, song.song_id, rec, score, clock_at(day, slot, t));
      if (!outcome.record) {
        ++rep.skipped_training_trials;
        continue;
      }
      feats.append_row(outcome.record->eeg_features);
      training_log.push_back(*outcome.record);
    }
    next_trial += session.state().trial_log.size();
    experiment_features.push_back(std::move(feats));
  }
  rep.training_trials = training_log.size();
  if (training_log.empty()) throw Error(ErrorCode::insufficient_data, "every training trial was skipped");
  rep.training_annotation_match_rate = annotation_match_rate(training_log, library);
  {
    const auto s = compute_stats(training_log);
    rep.training_t_arousal = s.t_arousal;
    rep.training_t_valence = s.t_valence;
  }
  {
    std::vector<Matrix> usable;
    for (auto& m : experiment_features) {
      if (m.rows() >= 2) usable.push_back(m);
    }
    if (usable.size() >= 2) rep.variance_fraction = eeg::variance_analysis(usable).fraction;
  }
  out.log = training_log;

  out.models = train_user_models(config.user_id, training_log, library, music, tc);
  out.models.created_at = "day " + std::to_string(config.training_days);
  rep.cv_arousal = out.models.arousal.cv;
  rep.cv_valence = out.models.valence.cv;
  rep.profile_arousal = out.models.profile(Axis::arousal);
  rep.profile_valence = out.models.profile(Axis::valence);

  int day = config.training_days;

  // ---- testing phase ----
  if (config.testing_experiments > 0) {
    const auto designations =
        cycle_or(config.testing_designations, {all_quadrants.begin(), all_quadrants.end()});
    const ModelPredictor predictor(out.models, library);
    Rng baseline_rng(mix_seed(config.seed, 3));
    std::size_t baseline_hits = 0, k = 0;
    double iterations = 0.0;
    std::vector<TrialRecord> testing_log;
    for (int e = 0; e < config.testing_experiments; ++e) {
      SessionConfig sc{config.user_id, Phase::testing, mix_seed(config.seed, 200 + e), config.window_seconds,
                       config.montage, default_max_iterations, default_alternatives, next_trial};
      Session session(sc, library, &predictor);
      user.start_experiment();
      for (int t = 0; t < config.trials_per_testing_experiment; ++t) {
        const Quadrant q = designations[k++ % designations.size()];
        const auto f = collect_features(user, config);
        session.designate(q);
        session.submit_eeg_features(f);
        const auto pending = session.next_song();
        const auto& song = library.at(pending.song_id);
        const auto& record = session.report(responder.respond({f, song, q}), clock_at(day, e, t));
        testing_log.push_back(record);
        iterations += *record.iteration_count;
        if (config.random_baseline) {
          const auto* pick = select_music_alternatives(q, library, baseline_rng, 1).front();
          baseline_hits += quadrant_of(responder.respond({f, *pick, q})) == q;
        }
      }
      next_trial += session.state().trial_log.size();
    }
    rep.testing_trials = testing_log.size();
    rep.testing_match_rate = match_rate(testing_log);
    rep.testing_mean_iterations = iterations / static_cast<double>(testing_log.size());
    if (config.random_baseline) {
      rep.baseline_match_rate = static_cast<double>(baseline_hits) / static_cast<double>(testing_log.size());
    }
    out.log.insert(out.log.end(), testing_log.begin(), testing_log.end());
    ++day;
  }

  // ---- real-life days ----
  const auto designations = cycle_or(config.real_life_designations, {Quadrant::q1, Quadrant::q4});
  std::vector<TrialRecord> retrain_log = training_log;
  std::size_t k = 0;
  for (int d = 0; d < config.real_life_days; ++d, ++day) {
    std::set<std::string> heard;
    for (const auto& t : out.log) heard.insert(t.song_id);
    const ModelPredictor predictor(out.models, library);
    Rng length_rng(mix_seed(config.seed, 300 + d));
    std::vector<TrialRecord> day_log;
    for (int e = 0; e < config.real_life_experiments_per_day; ++e) {
      const Quadrant q = designations[k++ % designations.size()];
      SessionConfig sc{config.user_id, Phase::real_life, mix_seed(config.seed, 1000 + 10 * d + e),
                       config.window_seconds, config.montage, default_max_iterations, default_alternatives,
                       next_trial};
      Session session(sc, library, &predictor);
      user.start_experiment();
      const auto f = collect_features(user, config);
      const std::size_t len =
          config.playlist_min + length_rng.uniform_index(config.playlist_max - config.playlist_min + 1);
      const auto result = run_real_life_session(
          session, q, f, len, [&](const SongRecord& song, std::size_t) { return responder.respond({f, song, q}); },
          clock_at(day, e, 0));
      next_trial += result.log.size();
      day_log.insert(day_log.end(), result.log.begin(), result.log.end());
    }
    DayRow row;
    row.day = d + 1;
    row.trials = day_log.size();
    if (!day_log.empty()) {
      row.match_rate = match_rate(day_log);
      std::size_t fresh = 0;
      for (const auto& t : day_log) fresh += !heard.contains(t.song_id);
      row.new_song_ratio = static_cast<double>(fresh) / static_cast<double>(day_log.size());
    }
    out.log.insert(out.log.end(), day_log.begin(), day_log.end());
    const auto s = compute_stats(out.log);
    row.t_arousal = s.t_arousal;
    row.t_valence = s.t_valence;
    rep.days.push_back(row);

    retrain_log.insert(retrain_log.end(), day_log.begin(), day_log.end());
    if (config.retrain_daily && d + 1 < config.real_life_days) {
      out.models = train_user_models(config.user_id, retrain_log, library, music, tc);
      out.models.created_at = "day " + std::to_string(day + 1);
    }
  }
  return out;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json cv_json(const CvResult& cv) {
  return {{"fold_accuracy", cv.fold_accuracy}, {"mean", cv.mean}, {"stddev", cv.stddev}};
}

std::string fixed(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

nlohmann::json report_to_json(const SimulationReport& r) {
  nlohmann::json days = nlohmann::json::array();
  for (const auto& d : r.days) {
    days.push_back({{"day", d.day},
                    {"trials", d.trials},
                    {"match_rate", d.match_rate},
                    {"new_song_ratio", d.new_song_ratio},
                    {"t_arousal", optional_number(d.t_arousal)},
                    {"t_valence", optional_number(d.t_valence)}});
  }
  return {{"user_id", r.user_id},
          {"seed", r.seed},
          {"training",
           {{"trials", r.training_trials},
            {"skipped", r.skipped_training_trials},
            {"annotation_match_rate", r.training_annotation_match_rate},
            {"t_arousal", optional_number(r.training_t_arousal)},
            {"t_valence", optional_number(r.training_t_valence)},
            {"variance_fraction", optional_number(r.variance_fraction)}}},
          {"models",
           {{"arousal", {{"cv", cv_json(r.cv_arousal)}, {"eeg", r.profile_arousal.eeg}, {"music", r.profile_arousal.music}}},
            {"valence", {{"cv", cv_json(r.cv_valence)}, {"eeg", r.profile_valence.eeg}, {"music", r.profile_valence.music}}}}},
          {"testing",
           {{"trials", r.testing_trials},
            {"match_rate", r.testing_match_rate},
            {"mean_iterations", r.testing_mean_iterations},
            {"baseline_match_rate", optional_number(r.baseline_match_rate)}}},
          {"days", days}};
}

Scenario make_scenario(const ScenarioConfig& config) {
  Scenario s;
  auto lc = config.library;
  lc.seed = mix_seed(config.seed, 11);
  s.library = SongLibrary(synthetic::make_songs(lc));
  auto mc = config.music;
  mc.seed = mix_seed(config.seed, 12);
  s.music = build_music_pipeline(s.library, mc);
  s.eeg = config.eeg;
  s.eeg.seed = mix_seed(config.seed, 13);

  if (config.responder_kind != "linear") {
    s.responder.kind = config.responder_kind;
    s.responder.seed = mix_seed(config.seed, 14);
    return s;
  }
  // Calibration draws come from a separate EEG stream with the same statistics.
  auto calib_cfg = s.eeg;
  calib_cfg.seed = mix_seed(config.seed, 15);
  calib_cfg.artifact_probability = 0.0;
  calib_cfg.bad_channel_probability = 0.0;
  synthetic::EegUser calib(calib_cfg);
  Matrix sample;
  for (std::size_t e = 0; e < config.calibration_experiments; ++e) {
    calib.start_experiment();
    for (std::size_t t = 0; t < config.calibration_trials; ++t) {
      sample.append_row(eeg::extract_features(calib.record(config.recording_seconds), 2));
    }
  }
  std::vector<std::size_t> informative(lc.informative_dims);
  for (std::size_t i = 0; i < informative.size(); ++i) informative[i] = i;
  s.responder = synthetic::calibrated_linear_responder(s.library, sample, informative, mix_seed(config.seed, 14),
                                                       config.eeg_share);
  return s;
}

std::string days_to_csv(const std::vector<DayRow>& days) {
  std::string out = "day,trials,match_rate,new_song_ratio,t_arousal,t_valence\n";
  for (const auto& d : days) {
    out += std::to_string(d.day) + ',' + std::to_string(d.trials) + ',' + fixed(d.match_rate) + ',' +
           fixed(d.new_song_ratio) + ',' + fixed(d.t_arousal) + ',' + fixed(d.t_valence) + '\n';
  }
  return out;
}

}  // namespace emoreg
