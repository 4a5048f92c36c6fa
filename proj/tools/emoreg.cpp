#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emoreg/audio_features.hpp"
#include "emoreg/error.hpp"
#include "emoreg/regulation.hpp"
#include "emoreg/service.hpp"
#include "emoreg/simulation.hpp"
#include "emoreg/storage.hpp"

using namespace emoreg;
using nlohmann::json;
namespace fs = std::filesystem;
namespace st = emoreg::storage;

namespace {

constexpr int exit_partial = 2;

void emit(const json& doc, const std::string& out) {
  const auto text = doc.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    st::write_text_atomic(out, text);
  }
}

eeg::Montage parse_montage(const std::string& s) {
  if (s == "full14") return eeg::Montage::full14;
  if (s == "t7t8") return eeg::Montage::temporal_t7t8;
  throw Error(ErrorCode::config_error, "montage must be full14 or t7t8");
}

SongLibrary load_library(const std::string& manifest, const std::string& features) {
  auto songs = st::load_song_manifest(manifest);
  if (!features.empty()) songs = st::attach_features(std::move(songs), st::load_music_features(features));
  return SongLibrary(std::move(songs));
}

std::vector<TrialRecord> load_logs(const std::vector<std::string>& paths) {
  std::vector<TrialRecord> all;
  for (const auto& p : paths) {
    auto part = st::load_session_log(p);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

json profile_json(const SelectionProfile& p) { return {{"eeg", p.eeg}, {"music", p.music}}; }

json window_json(const WindowStudyResult& r) {
  json lengths = json::array();
  for (std::size_t i = 0; i < r.seconds.size(); ++i) {
    lengths.push_back({{"seconds", r.seconds[i]}, {"cv", st::cv_to_json(r.cv[i])}});
  }
  return {{"lengths", lengths},
          {"anova", {{"f", r.anova.f}, {"p", r.anova.p}, {"df_between", r.anova.df_between},
                     {"df_within", r.anova.df_within}}},
          {"recommended_seconds", r.recommended_seconds}};
}

std::atomic<SessionService*> running_service{nullptr};

void on_signal(int) {
  if (auto* s = running_service.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG-conditioned music emotion regulation tools"};
  app.require_subcommand(1);

  // ---- extract-music ----
  std::string manifest, audio_root, cache_dir, out;
  auto* extract_music = app.add_subcommand("extract-music", "Music feature vectors for every manifest song");
  extract_music->add_option("--manifest", manifest, "Song manifest CSV")->required();
  extract_music->add_option("--audio-root", audio_root, "Directory that audio_path values resolve against");
  extract_music->add_option("--cache", cache_dir, "Feature cache directory")->required();
  extract_music->add_option("--out", out, "Output feature file (JSON)")->required();

  // ---- extract-eeg ----
  std::string eeg_csv, montage = "full14";
  int window_seconds = 2;
  auto* extract_eeg = app.add_subcommand("extract-eeg", "EEG feature vector of one recording");
  extract_eeg->add_option("--csv", eeg_csv, "EEG recording CSV")->required();
  extract_eeg->add_option("--window", window_seconds, "Window length in seconds (2, 5 or 10)");
  extract_eeg->add_option("--montage", montage, "full14 or t7t8");
  extract_eeg->add_option("--out", out, "Output JSON (default stdout)");

  // ---- reduce ----
  std::string features;
  auto* reduce = app.add_subcommand("reduce", "Constant, quasi-constant and correlation reduction report");
  reduce->add_option("--features", features, "Music feature file")->required();
  reduce->add_option("--out", out, "Output JSON (default stdout)");

  // ---- select ----
  std::size_t music_k = 50;
  std::uint64_t seed = 0;
  auto* select = app.add_subcommand("select", "Fit the music pipeline (reduction, scaling, selection)");
  select->add_option("--manifest", manifest, "Song manifest CSV")->required();
  select->add_option("--features", features, "Music feature file")->required();
  select->add_option("--k", music_k, "Music features to keep");
  select->add_option("--seed", seed, "Fold seed");
  select->add_option("--out", out, "Output pipeline JSON")->required();

  // ---- train ----
  std::string user_id, music_path;
  std::vector<std::string> logs;
  std::size_t combined_k = 25;
  std::string cv_out;
  auto* train = app.add_subcommand("train", "Train the valence and arousal models of one user");
  train->add_option("--user", user_id, "User id")->required();
  train->add_option("--log", logs, "Session log(s) with training trials")->required();
  train->add_option("--manifest", manifest, "Song manifest CSV")->required();
  train->add_option("--features", features, "Music feature file")->required();
  train->add_option("--music", music_path, "Music pipeline JSON (default: fit from the library)");
  train->add_option("--k", combined_k, "Combined features per model");
  train->add_option("--montage", montage, "full14 or t7t8");
  train->add_option("--seed", seed, "Fold seed");
  train->add_option("--out", out, "Model bundle output")->required();
  train->add_option("--cv-out", cv_out, "CV report output (default stdout)");

  // ---- cross-validate ----
  std::string model_path;
  auto* cross = app.add_subcommand("cross-validate", "7-fold CV of a bundle's selections on session logs");
  cross->add_option("--model", model_path, "Model bundle")->required();
  cross->add_option("--log", logs, "Session log(s)")->required();
  cross->add_option("--manifest", manifest, "Song manifest CSV")->required();
  cross->add_option("--features", features, "Music feature file")->required();
  cross->add_option("--seed", seed, "Fold seed");
  cross->add_option("--out", out, "Output JSON (default stdout)");

  // ---- window-study ----
  std::string trials_csv;
  auto* window = app.add_subcommand("window-study", "Compare 10, 5 and 2 second EEG windows");
  window->add_option("--trials", trials_csv, "CSV of eeg_csv,valence,arousal rows")->required();
  std::string axis_name = "arousal";
  window->add_option("--axis", axis_name, "arousal or valence");
  window->add_option("--seed", seed, "Fold seed");
  window->add_option("--out", out, "Output JSON (default stdout)");

  // ---- simulate ----
  std::string responder_path, out_dir;
  int days = 5, training_days = 6, testing_experiments = 2;
  double eeg_share = 0.35;
  auto* simulate = app.add_subcommand("simulate", "Closed-loop simulation on a synthetic library and user");
  simulate->add_option("--responder", responder_path,
                       "Responder config JSON, or linear | uniform_random | always_match (default linear)");
  simulate->add_option("--days", days, "Real-life days");
  simulate->add_option("--training-days", training_days, "Training days");
  simulate->add_option("--testing-experiments", testing_experiments, "Testing experiments");
  simulate->add_option("--eeg-share", eeg_share, "EEG share of the calibrated responder's score variance");
  std::uint64_t sim_seed = 1;
  simulate->add_option("--seed", sim_seed, "Scenario and simulation seed");
  simulate->add_option("--out", out_dir, "Output directory")->required();

  // ---- instability ----
  std::string big5_csv;
  auto* instab = app.add_subcommand("instability", "Emotion-instability t-scores per user log");
  instab->add_option("--log", logs, "Session log(s), one user each")->required();
  instab->add_option("--big5", big5_csv, "CSV of user_id,neuroticism_percentile for the correlation");
  instab->add_option("--out", out, "Output JSON (default stdout)");

  // ---- serve ----
  std::string host = "127.0.0.1", replay_root, log_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  serve->add_option("--manifest", manifest, "Song manifest CSV")->required();
  serve->add_option("--features", features, "Music feature file")->required();
  serve->add_option("--model", model_path, "Model bundle (omit for training-only)");
  serve->add_option("--audio-root", audio_root, "Audio directory");
  serve->add_option("--replay-root", replay_root, "EEG replay directory");
  serve->add_option("--log-dir", log_dir, "Session log directory");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)");
  serve->add_option("--seed", seed, "Session seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract_music) {
      auto songs = st::load_song_manifest(manifest);
      st::FeatureCache cache(cache_dir);
      std::map<std::string, std::vector<double>> vectors;
      json failures = json::array();
      std::size_t extracted = 0, cached = 0;
      for (const auto& s : songs) {
        try {
          const fs::path p = fs::path(s.audio_path).is_absolute() ? fs::path(s.audio_path) : fs::path(audio_root) / s.audio_path;
          const auto key = cache.key(p);
          if (auto hit = cache.lookup(key)) {
            vectors[s.song_id] = std::move(*hit);
            ++cached;
            continue;
          }
          const auto pcm = st::load_wav(p);
          audio::FrameParams fp;
          fp.sample_rate = pcm.sample_rate;
          const auto v = audio::aggregate_features(audio::extract_frame_features(pcm.mono, fp), s.song_id).values;
          if (v.size() != audio::aggregated_dims) throw Error(ErrorCode::validation, "unexpected feature width");
          cache.store(key, v);
          vectors[s.song_id] = v;
          ++extracted;
        } catch (const Error& e) {
          failures.push_back({{"song_id", s.song_id}, {"error", to_string(e.code())}, {"message", e.detail()}});
        }
      }
      st::save_music_features(vectors, out);
      std::cout << json{{"songs", songs.size()}, {"extracted", extracted}, {"cached", cached}, {"failures", failures}}
                       .dump(2)
                << "\n";
      return failures.empty() ? 0 : exit_partial;
    }
    if (*extract_eeg) {
      const auto rec = st::load_eeg_csv(eeg_csv);
      const auto m = parse_montage(montage);
      emit({{"window_seconds", window_seconds},
            {"montage", montage},
            {"names", eeg::feature_names(m)},
            {"features", eeg::extract_features(rec, window_seconds, m)}},
           out);
      return 0;
    }
    if (*reduce) {
      const auto vectors = st::load_music_features(features);
      Matrix x;
      for (const auto& [id, v] : vectors) x.append_row(v);
      const auto r = audio::reduce_features(x);
      auto doc = st::reduction_to_json(r);
      doc["input_dims"] = x.cols();
      doc["kept"] = r.kept_indices.size();
      emit(doc, out);
      return 0;
    }
    if (*select) {
      const auto lib = load_library(manifest, features);
      MusicPipelineConfig mc;
      mc.target_k = music_k;
      mc.seed = seed;
      mc.scaling = ScalingScheme::z_score;
      const auto p = build_music_pipeline(lib, mc);
      st::save_music_pipeline(p, out);
      std::cout << json{{"input_dims", p.input_dims},
                        {"kept_after_reduction", p.reduction.kept_indices.size()},
                        {"selected", p.output_dims()}}
                       .dump(2)
                << "\n";
      return 0;
    }
    if (*train) {
      const auto lib = load_library(manifest, features);
      MusicPipeline music;
      if (music_path.empty()) {
        MusicPipelineConfig mc;
        mc.seed = seed;
        mc.scaling = ScalingScheme::z_score;
        music = build_music_pipeline(lib, mc);
      } else {
        music = st::load_music_pipeline(music_path);
      }
      std::vector<TrialRecord> training;
      for (auto& t : load_logs(logs)) {
        if (t.phase == Phase::training) training.push_back(std::move(t));
      }
      TrainingConfig tc;
      tc.combined_k = combined_k;
      tc.seed = seed;
      tc.montage = parse_montage(montage);
      const auto models = train_user_models(user_id, training, lib, music, tc);
      st::save_model_bundle(models, out);
      emit({{"user_id", user_id},
            {"trials", training.size()},
            {"arousal", {{"cv", st::cv_to_json(models.arousal.cv)}, {"profile", profile_json(models.profile(Axis::arousal))}}},
            {"valence", {{"cv", st::cv_to_json(models.valence.cv)}, {"profile", profile_json(models.profile(Axis::valence))}}}},
           cv_out);
      return 0;
    }
    if (*cross) {
      const auto lib = load_library(manifest, features);
      const auto models = st::load_model_bundle(model_path);
      const auto trials = load_logs(logs);
      const auto set = build_training_set(trials, lib, models.music, models.eeg_scaler, models.montage);
      json doc{{"trials", trials.size()}};
      for (Axis a : {Axis::arousal, Axis::valence}) {
        const auto& y = a == Axis::arousal ? set.arousal : set.valence;
        const auto x = set.combined.select_columns(models.model(a).selection.selected);
        doc[std::string(to_string(a))] = st::cv_to_json(cross_validate(x, y, 7, seed));
      }
      emit(doc, out);
      return 0;
    }
    if (*window) {
      const auto text = st::read_text(trials_csv);
      const fs::path base = fs::path(trials_csv).parent_path();
      std::vector<LengthDataset> sets{{10, {}}, {5, {}}, {2, {}}};
      std::vector<int> y;
      std::size_t line_no = 0, skipped = 0;
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty() || line_no == 1) continue;  // header
        std::vector<std::string> cells;
        std::stringstream row(line);
        for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
        if (cells.size() != 3) {
          throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected eeg_csv,valence,arousal");
        }
        const auto rec = st::load_eeg_csv(fs::path(cells[0]).is_absolute() ? fs::path(cells[0]) : base / cells[0]);
        std::vector<std::vector<double>> rows;
        try {
          for (const auto& s : sets) rows.push_back(eeg::extract_features(rec, s.seconds));
        } catch (const Error&) {
          ++skipped;
          continue;
        }
        for (std::size_t i = 0; i < sets.size(); ++i) sets[i].features.append_row(rows[i]);
        y.push_back(axis_label(std::stod(cells[axis_name == "valence" ? 1 : 2])));
      }
      auto doc = window_json(window_length_study(sets, y, 7, seed));
      doc["trials"] = y.size();
      doc["skipped"] = skipped;
      emit(doc, out);
      return 0;
    }
    if (*simulate) {
      ScenarioConfig scfg;
      scfg.seed = sim_seed;
      scfg.eeg_share = eeg_share;
      std::optional<synthetic::ResponderConfig> from_file;
      if (responder_path.empty() || responder_path == "linear") {
        scfg.responder_kind = "linear";
      } else if (responder_path == "uniform_random" || responder_path == "always_match") {
        scfg.responder_kind = responder_path;
      } else {
        from_file = synthetic::responder_from_json(json::parse(st::read_text(responder_path)));
        scfg.responder_kind = from_file->kind;
      }
      auto scenario = make_scenario(scfg);
      if (from_file) scenario.responder = *from_file;
      synthetic::EegUser user(scenario.eeg);
      auto responder = synthetic::make_responder(scenario.responder);
      SimulationConfig sc;
      sc.seed = sim_seed;
      sc.training_days = training_days;
      sc.testing_experiments = testing_experiments;
      sc.real_life_days = days;
      const auto result = run_simulation(scenario.library, scenario.music, user, *responder, sc);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      st::write_text_atomic(dir / "report.json", report_to_json(result.report).dump(2) + "\n");
      st::write_text_atomic(dir / "days.csv", days_to_csv(result.report.days));
      st::write_text_atomic(dir / "responder.json", synthetic::responder_to_json(scenario.responder).dump(2) + "\n");
      std::string log;
      for (const auto& t : result.log) log += st::trial_to_line(t) + "\n";
      st::write_text_atomic(dir / "log.jsonl", log);
      st::save_model_bundle(result.models, dir / "model.json");
      const auto& songs = scenario.library.songs();
      st::write_text_atomic(dir / "manifest.csv", st::format_song_manifest(songs));
      std::map<std::string, std::vector<double>> vectors;
      for (const auto& s : songs) vectors[s.song_id] = *s.feature_vector;
      st::save_music_features(vectors, dir / "features.json");
      std::cout << days_to_csv(result.report.days);
      return 0;
    }
    if (*instab) {
      json users = json::array();
      std::map<std::string, double> t_arousal, t_valence;
      for (const auto& p : logs) {
        const auto trials = st::load_session_log(p);
        if (trials.empty()) throw Error(ErrorCode::insufficient_data, "log '" + p + "' is empty");
        const auto s = instability(trials);
        const auto& user = trials.front().user_id;
        t_arousal[user] = s.t_arousal;
        t_valence[user] = s.t_valence;
        users.push_back({{"user_id", user},
                         {"log", p},
                         {"t_arousal", s.t_arousal},
                         {"t_valence", s.t_valence},
                         {"repeated_songs", s.repeated_song_count}});
      }
      json doc{{"users", users}};
      if (!big5_csv.empty()) {
        std::vector<double> ta, tv, n;
        std::istringstream in(st::read_text(big5_csv));
        std::size_t line_no = 0;
        for (std::string line; std::getline(in, line);) {
          ++line_no;
          if (line.empty() || line_no == 1) continue;
          const auto comma = line.find(',');
          if (comma == std::string::npos) {
            throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected user_id,percentile");
          }
          const auto user = line.substr(0, comma);
          if (!t_arousal.count(user)) continue;
          ta.push_back(t_arousal[user]);
          tv.push_back(t_valence[user]);
          n.push_back(rewrite_neuroticism(std::stod(line.substr(comma + 1))));
        }
        doc["correlation"] = {{"users", n.size()},
                              {"r_arousal", correlate_instability(ta, n)},
                              {"r_valence", correlate_instability(tv, n)}};
      }
      emit(doc, out);
      return 0;
    }
    if (*serve) {
      const auto lib = load_library(manifest, features);
      std::optional<VAModelPair> models;
      if (!model_path.empty()) models = st::load_model_bundle(model_path);
      ServiceConfig cfg;
      cfg.audio_root = audio_root;
      cfg.replay_root = replay_root;
      cfg.log_dir = log_dir;
      cfg.seed = seed;
      SessionService service(lib, models ? &*models : nullptr, cfg);
      running_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.serve(host, port, [&](int p) { std::cout << "listening on " << host << ":" << p << std::endl; });
      running_service = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
