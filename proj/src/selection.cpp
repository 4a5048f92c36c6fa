#include "emoreg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "emoreg/error.hpp"
#include "emoreg/stats.hpp"

namespace emoreg {

SbsResult sequential_backward_selection(std::size_t dims, std::size_t target_k, const SubsetScorer& score,
                                        const StepObserver& on_step) {
  if (target_k < 1 || target_k > dims) {
    throw Error(ErrorCode::config_error, "target feature count " + std::to_string(target_k) +
                                             " must lie in [1, " + std::to_string(dims) + "]");
  }
  SbsResult result;
  result.selected.resize(dims);
  std::iota(result.selected.begin(), result.selected.end(), 0);
  if (target_k == dims) {
    result.final_score = score(result.selected);
    return result;
  }
  if (on_step) on_step(result.selected);
  std::vector<std::size_t> candidate;
  while (result.selected.size() > target_k) {
    std::size_t best_pos = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < result.selected.size(); ++pos) {
      candidate.clear();
      for (std::size_t j = 0; j < result.selected.size(); ++j) {
        if (j != pos) candidate.push_back(result.selected[j]);
      }
      const double s = score(candidate);
      if (!std::isfinite(s)) throw Error(ErrorCode::validation, "subset evaluator returned a non-finite score");
      // Strict comparison keeps the lowest index among equal scores.
      if (s > best_score) {
        best_score = s;
        best_pos = pos;
      }
    }
    result.trace.push_back({result.selected[best_pos], best_score});
    result.selected.erase(result.selected.begin() + static_cast<std::ptrdiff_t>(best_pos));
    if (on_step) on_step(result.selected);
  }
  result.final_score = result.trace.back().score;
  return result;
}

CvAccuracyScorer::CvAccuracyScorer(Matrix x, std::vector<std::vector<int>> labels, std::uint64_t seed,
                                   std::size_t folds, SvmParams params)
    : x_(std::move(x)), labels_(std::move(labels)), k_(folds), params_(params) {
  if (labels_.empty()) throw Error(ErrorCode::config_error, "at least one label vector is required");
  for (const auto& y : labels_) {
    if (y.size() != x_.rows()) throw Error(ErrorCode::dimension_mismatch, "label count differs from row count");
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
      throw Error(ErrorCode::degenerate_labels, "selection labels contain a single class");
    }
    const auto assignment = stratified_folds(y, k_, seed);
    auto& train = train_rows_.emplace_back(k_);
    auto& test = test_rows_.emplace_back(k_);
    auto& train_y = train_labels_.emplace_back(k_);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t f = assignment[i];
      test[f].push_back(i);
      for (std::size_t g = 0; g < k_; ++g) {
        if (g == f) continue;
        train[g].push_back(i);
        train_y[g].push_back(y[i]);
      }
    }
    for (std::size_t f = 0; f < k_; ++f) {
      const auto p = std::count(train_y[f].begin(), train_y[f].end(), 1);
      if (p == 0 || p == static_cast<std::ptrdiff_t>(train_y[f].size())) {
        throw Error(ErrorCode::stratification, "fold " + std::to_string(f) + " training split lacks a class");
      }
      if (test[f].empty()) throw Error(ErrorCode::stratification, "fold " + std::to_string(f) + " is empty");
    }
  }
}

double CvAccuracyScorer::evaluate(std::span<const std::size_t> columns, DualState& state) const {
  const Matrix sub = x_.select_columns(columns);
  if (state.size() != labels_.size()) state.assign(labels_.size(), std::vector<std::vector<double>>(k_));
  double total = 0.0;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    std::vector<double> accuracy(k_);
    for (std::size_t f = 0; f < k_; ++f) {
      const auto model = train_svm_warm(sub.select_rows(train_rows_[l][f]), train_labels_[l][f], params_, state[l][f]);
      std::size_t correct = 0;
      for (std::size_t i : test_rows_[l][f]) correct += model.predict(sub.row(i)) == labels_[l][i];
      accuracy[f] = static_cast<double>(correct) / static_cast<double>(test_rows_[l][f].size());
    }
    total += stats::mean(accuracy);
  }
  return total / static_cast<double>(labels_.size());
}

double CvAccuracyScorer::operator()(std::span<const std::size_t> columns) {
  DualState state = base_;
  const double score = evaluate(columns, state);
  candidates_[std::vector<std::size_t>(columns.begin(), columns.end())] = std::move(state);
  return score;
}

void CvAccuracyScorer::commit(std::span<const std::size_t> columns) {
  const auto it = candidates_.find(std::vector<std::size_t>(columns.begin(), columns.end()));
  if (it != candidates_.end()) {
    base_ = std::move(it->second);
  } else {
    evaluate(columns, base_);
  }
  candidates_.clear();
}

SbsResult sbs(const Matrix& x, std::span<const int> y, std::size_t target_k, std::uint64_t seed,
              const SbsOptions& options) {
  return sbs_multi(x, {std::vector<int>(y.begin(), y.end())}, target_k, seed, options);
}

SbsResult sbs_multi(const Matrix& x, const std::vector<std::vector<int>>& labels, std::size_t target_k,
                    std::uint64_t seed, const SbsOptions& options) {
  CvAccuracyScorer scorer(x, labels, seed, options.folds, options.svm);
  return sequential_backward_selection(x.cols(), target_k, std::ref(scorer),
                                       [&](std::span<const std::size_t> kept) { scorer.commit(kept); });
}

SelectionProfile selection_profile(std::span<const std::size_t> selected, std::size_t eeg_dims) {
  SelectionProfile p;
  for (std::size_t i : selected) (i < eeg_dims ? p.eeg : p.music)++;
  return p;
}

}  // namespace emoreg
