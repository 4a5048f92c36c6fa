#include "emoreg/training.hpp"

#include <algorithm>
#include <string>

#include "emoreg/error.hpp"
#include "emoreg/random.hpp"
#include "emoreg/storage.hpp"

namespace emoreg {

std::string_view to_string(Axis a) { return a == Axis::arousal ? "arousal" : "valence"; }

std::vector<double> MusicPipeline::transform(std::span<const double> raw) const {
  if (raw.size() != input_dims) {
    throw Error(ErrorCode::dimension_mismatch, "music vector has " + std::to_string(raw.size()) +
                                                   " entries, pipeline expects " + std::to_string(input_dims));
  }
  std::vector<double> kept;
  kept.reserve(reduction.kept_indices.size());
  for (std::size_t i : reduction.kept_indices) kept.push_back(raw[i]);
  const auto scaled = scaler.transform(kept);
  std::vector<double> out;
  out.reserve(selection.selected.size());
  for (std::size_t i : selection.selected) out.push_back(scaled[i]);
  return out;
}

MusicPipeline build_music_pipeline(const SongLibrary& library, const MusicPipelineConfig& config) {
  const auto songs = library.songs_with_features();
  if (songs.size() < 2) throw Error(ErrorCode::insufficient_data, "need at least 2 songs with features");
  const Matrix raw = library.feature_matrix();

  MusicPipeline p;
  p.input_dims = raw.cols();
  p.reduction = audio::reduce_features(raw, config.reduction);
  if (p.reduction.kept_indices.empty()) {
    throw Error(ErrorCode::insufficient_data, "feature reduction removed every music column");
  }
  auto [normalized, scaler] = normalize_music_features(raw.select_columns(p.reduction.kept_indices), config.scaling);
  p.scaler = std::move(scaler);

  const std::size_t kept = p.reduction.kept_indices.size();
  const std::size_t target = std::min(config.target_k, kept);
  std::vector<std::vector<int>> labels(2);
  for (const auto* s : songs) {
    labels[0].push_back(axis_label(s->rescaled_annotation.valence));
    labels[1].push_back(axis_label(s->rescaled_annotation.arousal));
  }
  if (target == kept) {
    p.selection.selected.resize(kept);
    for (std::size_t i = 0; i < kept; ++i) p.selection.selected[i] = i;
  } else {
    p.selection = sbs_multi(normalized, labels, target, config.seed, config.sbs);
  }
  return p;
}

std::vector<double> montage_features(std::span<const double> eeg_features, eeg::Montage montage) {
  const std::size_t want = eeg::feature_count(montage);
  if (eeg_features.size() == want) return {eeg_features.begin(), eeg_features.end()};
  const std::size_t full = eeg::feature_count(eeg::Montage::full14);
  if (montage == eeg::Montage::temporal_t7t8 && eeg_features.size() == full) {
    // T7 and T8 band powers sit at the start of the temporal block.
    const auto first = eeg_features.begin() + 16;
    return {first, first + static_cast<std::ptrdiff_t>(want)};
  }
  throw Error(ErrorCode::dimension_mismatch, "EEG feature vector has " + std::to_string(eeg_features.size()) +
                                                 " entries, montage needs " + std::to_string(want));
}

std::vector<double> VAModelPair::combined(std::span<const double> eeg_features,
                                          std::span<const double> music_block) const {
  if (music_block.size() != music.output_dims()) {
    throw Error(ErrorCode::dimension_mismatch, "music block width does not match the pipeline");
  }
  const auto e = eeg_scaler.transform(montage_features(eeg_features, montage));
  return concat_features(e, music_block);
}

int VAModelPair::predict_axis(Axis a, std::span<const double> combined_vector) const {
  const auto& m = model(a);
  std::vector<double> x;
  x.reserve(m.selection.selected.size());
  for (std::size_t i : m.selection.selected) {
    if (i >= combined_vector.size()) throw Error(ErrorCode::dimension_mismatch, "selected index out of range");
    x.push_back(combined_vector[i]);
  }
  return m.svm.predict(x);
}

Quadrant VAModelPair::predict_quadrant(std::span<const double> eeg_features,
                                       std::span<const double> music_block) const {
  const auto x = combined(eeg_features, music_block);
  return quadrant_from_signs(predict_axis(Axis::valence, x) > 0, predict_axis(Axis::arousal, x) > 0);
}

TrainingSet build_training_set(std::span<const TrialRecord> trials, const SongLibrary& library,
                               const MusicPipeline& music, const FeatureScaler& eeg_scaler, eeg::Montage montage) {
  TrainingSet set;
  for (const auto& t : trials) {
    const auto& song = library.at(t.song_id);
    if (!song.feature_vector) {
      throw Error(ErrorCode::not_found, "song '" + t.song_id + "' has no music feature vector");
    }
    const auto e = eeg_scaler.transform(montage_features(t.eeg_features, montage));
    const auto m = music.transform(*song.feature_vector);
    set.combined.append_row(concat_features(e, m));
    set.arousal.push_back(axis_label(t.evaluated_score.arousal));
    set.valence.push_back(axis_label(t.evaluated_score.valence));
  }
  return set;
}

namespace {

void require_two_classes(std::span<const int> y, Axis a) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(ErrorCode::degenerate_labels,
                std::string(to_string(a)) + " labels are all " + (pos == 0 ? "non-positive" : "positive") +
                    "; the training log needs reports on both sides of zero");
  }
}

AxisModel fit_axis(const Matrix& x, const std::vector<int>& y, Axis a, const TrainingConfig& config) {
  require_two_classes(y, a);
  const std::size_t target = std::min(config.combined_k, x.cols());
  const std::uint64_t seed = mix_seed(config.seed, a == Axis::arousal ? 1 : 2);
  AxisModel m;
  SbsOptions options{config.folds, config.svm};
  options.svm.tolerance = config.selection_tolerance;
  if (target == x.cols()) {
    m.selection.selected.resize(target);
    for (std::size_t i = 0; i < target; ++i) m.selection.selected[i] = i;
  } else {
    m.selection = sbs(x, y, target, seed, options);
  }
  const Matrix sub = x.select_columns(m.selection.selected);
  m.cv = cross_validate(sub, y, config.folds, seed, config.svm);
  if (target == x.cols()) m.selection.final_score = m.cv.mean;
  m.svm = train_svm(sub, y, config.svm);
  return m;
}

}  // namespace

VAModelPair train_user_models(std::string user_id, std::span<const TrialRecord> trials, const SongLibrary& library,
                              const MusicPipeline& music, const TrainingConfig& config) {
  if (trials.size() < config.folds) {
    throw Error(ErrorCode::insufficient_data, "need at least " + std::to_string(config.folds) +
                                                  " trials, got " + std::to_string(trials.size()));
  }
  VAModelPair out;
  out.user_id = std::move(user_id);
  out.montage = config.montage;
  out.music = music;

  Matrix eeg_rows;
  for (const auto& t : trials) eeg_rows.append_row(montage_features(t.eeg_features, config.montage));
  out.eeg_scaler = FeatureScaler::fit(eeg_rows, ScalingScheme::z_score);

  const auto set = build_training_set(trials, library, music, out.eeg_scaler, config.montage);
  out.arousal = fit_axis(set.combined, set.arousal, Axis::arousal, config);
  out.valence = fit_axis(set.combined, set.valence, Axis::valence, config);
  out.digest = training_digest(trials);
  return out;
}

TrainingDigest training_digest(std::span<const TrialRecord> trials) {
  std::string text;
  for (const auto& t : trials) {
    text += storage::trial_to_line(t);
    text += '\n';
  }
  return {trials.size(), storage::sha256_hex(text)};
}

ModelPredictor::ModelPredictor(const VAModelPair& models, const SongLibrary& library) : models_(models) {
  for (const auto* s : library.songs_with_features()) {
    music_blocks_.emplace(s->song_id, models_.music.transform(*s->feature_vector));
  }
}

Quadrant ModelPredictor::predict(std::span<const double> eeg_features, const SongRecord& song) const {
  const auto it = music_blocks_.find(song.song_id);
  if (it == music_blocks_.end()) {
    throw Error(ErrorCode::not_found, "song '" + song.song_id + "' has no music feature vector");
  }
  return models_.predict_quadrant(eeg_features, it->second);
}

}  // namespace emoreg
