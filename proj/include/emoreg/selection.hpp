#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "emoreg/matrix.hpp"
#include "emoreg/svm.hpp"

namespace emoreg {

struct SbsStep {
  std::size_t removed = 0;  // original column index
  double score = 0.0;       // evaluator score of the remaining set

  friend bool operator==(const SbsStep&, const SbsStep&) = default;
};

struct SbsResult {
  std::vector<std::size_t> selected;  // ascending original column indices
  std::vector<SbsStep> trace;
  double final_score = 0.0;

  friend bool operator==(const SbsResult&, const SbsResult&) = default;
};

// Scores a candidate subset of column indices (ascending). Higher is better.
using SubsetScorer = std::function<double(std::span<const std::size_t>)>;

// Called with the starting set and again with the surviving set after each step.
using StepObserver = std::function<void(std::span<const std::size_t>)>;

// Greedy backward elimination: each step removes the column whose removal
// leaves the best-scoring set, lowest index on ties, until target_k remain.
SbsResult sequential_backward_selection(std::size_t dims, std::size_t target_k, const SubsetScorer& score,
                                        const StepObserver& on_step = {});

// SVM tolerance for candidate fits during selection; final models use the
// SvmParams default.
inline constexpr double selection_tolerance = 1e-3;

// k-fold CV accuracy of the linear SVM on a column subset. Folds are drawn
// once from the seed and frozen. With several label vectors the score is the
// mean accuracy across them. Fits start from the dual solution of the last
// committed subset.
class CvAccuracyScorer {
 public:
  CvAccuracyScorer(Matrix x, std::vector<std::vector<int>> labels, std::uint64_t seed, std::size_t folds = 7,
                   SvmParams params = {});

  double operator()(std::span<const std::size_t> columns);

  // Makes the solution for this subset the starting point of later fits.
  void commit(std::span<const std::size_t> columns);

 private:
  using DualState = std::vector<std::vector<std::vector<double>>>;  // [label][fold] alphas

  double evaluate(std::span<const std::size_t> columns, DualState& state) const;

  Matrix x_;
  std::vector<std::vector<int>> labels_;
  std::vector<std::vector<std::vector<std::size_t>>> train_rows_;  // [label][fold]
  std::vector<std::vector<std::vector<std::size_t>>> test_rows_;
  std::vector<std::vector<std::vector<int>>> train_labels_;
  std::size_t k_;
  SvmParams params_;
  DualState base_;
  std::map<std::vector<std::size_t>, DualState> candidates_;
};

struct SbsOptions {
  std::size_t folds = 7;
  SvmParams svm{.tolerance = selection_tolerance};
};

// SBS with the CV-accuracy evaluator. Throws degenerate_labels for a single class.
SbsResult sbs(const Matrix& x, std::span<const int> y, std::size_t target_k, std::uint64_t seed,
              const SbsOptions& options = {});

// Same, scoring the mean CV accuracy over several label vectors.
SbsResult sbs_multi(const Matrix& x, const std::vector<std::vector<int>>& labels, std::size_t target_k,
                    std::uint64_t seed, const SbsOptions& options = {});

struct SelectionProfile {
  std::size_t eeg = 0;
  std::size_t music = 0;

  friend bool operator==(const SelectionProfile&, const SelectionProfile&) = default;
};

// Indices below eeg_dims come from the EEG block of a concatenated vector.
SelectionProfile selection_profile(std::span<const std::size_t> selected, std::size_t eeg_dims);

}  // namespace emoreg
