#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emoreg/audio_features.hpp"
#include "emoreg/domain.hpp"
#include "emoreg/eeg.hpp"
#include "emoreg/training.hpp"

namespace emoreg::storage {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int format_version = 1;

// ---- hashing ---------------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

// ---- text files ------------------------------------------------------------

std::string read_text(const fs::path& path);
// Writes to a sibling temporary and renames it over the target.
void write_text_atomic(const fs::path& path, std::string_view text);

// ---- song manifest ---------------------------------------------------------
// song_id,audio_path,genre,valence_raw,arousal_raw
// An optional leading "# format_version: 1" line is accepted.

inline constexpr std::string_view manifest_header = "song_id,audio_path,genre,valence_raw,arousal_raw";

std::vector<SongRecord> parse_song_manifest(std::string_view text);
std::vector<SongRecord> load_song_manifest(const fs::path& path);
std::string format_song_manifest(std::span<const SongRecord> songs);

// ---- music feature file ----------------------------------------------------
// {"format":"emoreg-music-features","version":1,"dims":N,"songs":{id:[...]}}

json music_features_to_json(const std::map<std::string, std::vector<double>>& features);
std::map<std::string, std::vector<double>> music_features_from_json(const json& doc);
void save_music_features(const std::map<std::string, std::vector<double>>& features, const fs::path& path);
std::map<std::string, std::vector<double>> load_music_features(const fs::path& path);

// Attaches vectors to manifest songs; songs without an entry keep none.
std::vector<SongRecord> attach_features(std::vector<SongRecord> songs,
                                        const std::map<std::string, std::vector<double>>& features);

// ---- feature cache ---------------------------------------------------------
// One file per (audio content hash, extraction parameter hash).

class FeatureCache {
 public:
  explicit FeatureCache(fs::path dir, audio::FrameParams params = {});

  std::string key(const fs::path& audio_file) const;
  std::optional<std::vector<double>> lookup(const std::string& key) const;
  void store(const std::string& key, const std::vector<double>& values) const;
  static std::string parameter_hash(const audio::FrameParams& params);

 private:
  fs::path dir_;
  std::string params_hash_;
};

// ---- audio -----------------------------------------------------------------

struct PcmAudio {
  int sample_rate = 44100;
  int channels = 1;
  std::vector<double> mono;  // channel average, scaled to [-1, 1)
};

// 16-bit PCM RIFF/WAVE.
PcmAudio parse_wav(std::string_view bytes);
PcmAudio load_wav(const fs::path& path);
std::string format_wav(std::span<const double> mono, int sample_rate);
void save_wav(std::span<const double> mono, int sample_rate, const fs::path& path);

// ---- EEG CSV ---------------------------------------------------------------
// Header of Emotiv labels (any subset, any order) plus an optional timestamp
// column; one row per sample at 128 Hz.

eeg::Recording parse_eeg_csv(std::string_view text);
eeg::Recording load_eeg_csv(const fs::path& path);
std::string format_eeg_csv(const eeg::Recording& rec);
void save_eeg_csv(const eeg::Recording& rec, const fs::path& path);

// ---- trial records / session logs -----------------------------------------

json trial_to_json(const TrialRecord& t);
TrialRecord trial_from_json(const json& j);
std::string trial_to_line(const TrialRecord& t);  // compact JSON, no newline

// Appends one line with a single write on an O_APPEND descriptor.
void append_session_log(const TrialRecord& record, const fs::path& path);
std::vector<TrialRecord> load_session_log(const fs::path& path);
std::vector<TrialRecord> parse_session_log(std::string_view text);

// ---- model bundle ----------------------------------------------------------
// {"format":"emoreg-model-bundle","version":1,"checksum":"sha256:<hex>","payload":{...}}
// The checksum covers payload.dump() (compact, keys sorted).

json model_to_json(const VAModelPair& models);
VAModelPair model_from_json(const json& payload);
std::string format_model_bundle(const VAModelPair& models);
VAModelPair parse_model_bundle(std::string_view text);
void save_model_bundle(const VAModelPair& models, const fs::path& path);
VAModelPair load_model_bundle(const fs::path& path);

json music_pipeline_to_json(const MusicPipeline& p);
MusicPipeline music_pipeline_from_json(const json& j);
void save_music_pipeline(const MusicPipeline& p, const fs::path& path);
MusicPipeline load_music_pipeline(const fs::path& path);

json cv_to_json(const CvResult& cv);
json reduction_to_json(const audio::ReductionReport& r);

}  // namespace emoreg::storage
