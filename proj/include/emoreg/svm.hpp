#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emoreg/matrix.hpp"
#include "emoreg/stats.hpp"

namespace emoreg {

struct SvmParams {
  double c = 1.0;
  int max_epochs = 10000;
  double tolerance = 1e-6;  // relative duality gap
  std::uint64_t seed = 0;
  // Per-class cost C * n / (2 * n_class); off gives every example cost C.
  bool class_weighting = true;
};

// Soft-margin linear SVM: decision = weights . x + bias.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double cost_positive = 1.0;  // per-example C for the +1 class
  double cost_negative = 1.0;
  double c = 1.0;
  int epochs = 0;
  bool converged = false;

  double decision(std::span<const double> x) const;
  int predict(std::span<const double> x) const;  // sign, with 0 -> +1

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

// Per-epoch objective values of the dual problem (minimization form, which
// coordinate descent never increases) and the primal hinge objective.
struct TrainingTrace {
  std::vector<double> dual_objective;
  std::vector<double> primal_objective;
};

// Dual coordinate descent over an augmented constant-1 bias column. Labels
// are +1 / -1; a missing class raises degenerate_labels.
LinearModel train_svm(const Matrix& x, std::span<const int> y, const SvmParams& params = {},
                      TrainingTrace* trace = nullptr);

// Same, starting from the dual variables in alpha (one per row, clipped to
// the box; empty means all zero) and leaving the solution there.
LinearModel train_svm_warm(const Matrix& x, std::span<const int> y, const SvmParams& params,
                           std::vector<double>& alpha);

int predict(const LinearModel& model, std::span<const double> x);

// EEG block first, then music block.
std::vector<double> concat_features(std::span<const double> eeg, std::span<const double> music);

// Stratified assignment of each example to one of k folds, stable for a seed.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed);

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // sample s.d. across folds

  friend bool operator==(const CvResult&, const CvResult&) = default;
};

CvResult cross_validate(const Matrix& x, std::span<const int> y, std::size_t k = 7, std::uint64_t seed = 0,
                        const SvmParams& params = {});

CvResult cross_validate_with_folds(const Matrix& x, std::span<const int> y, std::span<const std::size_t> folds,
                                   std::size_t k, const SvmParams& params = {});

struct LengthDataset {
  int seconds = 2;
  Matrix features;  // rows aligned with the shared label vector
};

struct WindowStudyResult {
  std::vector<int> seconds;
  std::vector<CvResult> cv;
  stats::AnovaResult anova;
  int recommended_seconds = 2;
};

// CV per window length on identical folds, one-way ANOVA across the fold
// accuracies, then the shortest length not significantly worse than the best.
WindowStudyResult window_length_study(const std::vector<LengthDataset>& datasets, std::span<const int> y,
                                      std::size_t k = 7, std::uint64_t seed = 0, const SvmParams& params = {},
                                      double alpha = 0.05);

// +1 when the axis is strictly positive, -1 otherwise.
inline int axis_label(double value) noexcept { return value > 0.0 ? 1 : -1; }

}  // namespace emoreg
