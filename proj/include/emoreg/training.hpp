#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emoreg/audio_features.hpp"
#include "emoreg/domain.hpp"
#include "emoreg/eeg.hpp"
#include "emoreg/library.hpp"
#include "emoreg/scaling.hpp"
#include "emoreg/selection.hpp"
#include "emoreg/svm.hpp"

namespace emoreg {

enum class Axis { arousal, valence };

std::string_view to_string(Axis a);

// Song-side preprocessing fitted once per library: reduction on the raw
// vectors, min-max statistics on the surviving columns, then SBS on the
// annotation signs. transform() maps a raw vector to the selected block.
struct MusicPipeline {
  std::size_t input_dims = 0;
  audio::ReductionReport reduction;
  FeatureScaler scaler;  // over reduction.kept_indices
  SbsResult selection;   // positions within reduction.kept_indices

  std::size_t output_dims() const noexcept { return selection.selected.size(); }
  std::vector<double> transform(std::span<const double> raw) const;

  friend bool operator==(const MusicPipeline&, const MusicPipeline&) = default;
};

struct MusicPipelineConfig {
  std::size_t target_k = 50;
  std::uint64_t seed = 0;
  ScalingScheme scaling = ScalingScheme::min_max;
  audio::ReductionParams reduction;
  SbsOptions sbs;
};

// Songs without a feature vector are ignored. When reduction leaves no more
// than target_k columns, selection keeps all of them.
MusicPipeline build_music_pipeline(const SongLibrary& library, const MusicPipelineConfig& config = {});

// Raw trial features restricted to the montage. Full 40-dim vectors are
// accepted for the temporal montage and cut down to the T7/T8 entries.
std::vector<double> montage_features(std::span<const double> eeg_features, eeg::Montage montage);

struct AxisModel {
  LinearModel svm;
  SbsResult selection;  // indices into the concatenated [eeg, music] vector
  CvResult cv;          // k-fold CV of the selected subset on the training trials

  friend bool operator==(const AxisModel&, const AxisModel&) = default;
};

struct TrainingDigest {
  std::size_t count = 0;
  std::string sha256;

  friend bool operator==(const TrainingDigest&, const TrainingDigest&) = default;
};

struct VAModelPair {
  std::string user_id;
  eeg::Montage montage = eeg::Montage::full14;
  FeatureScaler eeg_scaler;  // z-score over montage features
  MusicPipeline music;
  AxisModel arousal;
  AxisModel valence;
  TrainingDigest digest;
  std::string created_at;

  std::size_t eeg_dims() const noexcept { return eeg_scaler.dims(); }
  const AxisModel& model(Axis a) const noexcept { return a == Axis::arousal ? arousal : valence; }

  // Normalized [eeg, music] vector for a raw trial EEG vector and a song's
  // pipeline output.
  std::vector<double> combined(std::span<const double> eeg_features, std::span<const double> music_block) const;
  int predict_axis(Axis a, std::span<const double> combined_vector) const;
  Quadrant predict_quadrant(std::span<const double> eeg_features, std::span<const double> music_block) const;

  SelectionProfile profile(Axis a) const { return selection_profile(model(a).selection.selected, eeg_dims()); }

  friend bool operator==(const VAModelPair&, const VAModelPair&) = default;
};

struct TrainingConfig {
  std::size_t combined_k = 25;
  std::size_t folds = 7;
  std::uint64_t seed = 0;
  SvmParams svm;
  double selection_tolerance = emoreg::selection_tolerance;  // candidate fits inside SBS
  eeg::Montage montage = eeg::Montage::full14;
};

// Observations from training-phase (or any) trials. Each trial's song must be
// in the library with a feature vector.
struct TrainingSet {
  Matrix combined;  // normalized [eeg, music] rows
  std::vector<int> arousal;
  std::vector<int> valence;
};

TrainingSet build_training_set(std::span<const TrialRecord> trials, const SongLibrary& library,
                               const MusicPipeline& music, const FeatureScaler& eeg_scaler, eeg::Montage montage);

// Fits the EEG scaler, runs SBS per axis down to combined_k (capped at the
// available columns), trains each SVM and reports CV on the selection.
VAModelPair train_user_models(std::string user_id, std::span<const TrialRecord> trials, const SongLibrary& library,
                              const MusicPipeline& music, const TrainingConfig& config = {});

TrainingDigest training_digest(std::span<const TrialRecord> trials);

// Quadrant predictor used by the recommendation loop.
class EmotionPredictor {
 public:
  virtual ~EmotionPredictor() = default;
  virtual Quadrant predict(std::span<const double> eeg_features, const SongRecord& song) const = 0;
};

// Wraps trained models; the music block of every library song is computed
// once at construction so predict() is read-only and thread-safe.
class ModelPredictor final : public EmotionPredictor {
 public:
  ModelPredictor(const VAModelPair& models, const SongLibrary& library);
  Quadrant predict(std::span<const double> eeg_features, const SongRecord& song) const override;

 private:
  const VAModelPair& models_;
  std::unordered_map<std::string, std::vector<double>> music_blocks_;
};

}  // namespace emoreg
