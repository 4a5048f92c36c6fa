#include "emoreg/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "emoreg/error.hpp"
#include "emoreg/random.hpp"

namespace emoreg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw Error(ErrorCode::dimension_mismatch, "label count differs from row count");
  for (int v : y) {
    if (v != 1 && v != -1) throw Error(ErrorCode::validation, "labels must be +1 or -1");
  }
}

}  // namespace

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::dimension_mismatch, "input has " + std::to_string(x.size()) + " features, model expects " +
                                                   std::to_string(weights.size()));
  }
  return dot(weights, x) + bias;
}

int LinearModel::predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

int predict(const LinearModel& model, std::span<const double> x) { return model.predict(x); }

namespace {

LinearModel solve_dual(const Matrix& x, std::span<const int> y, const SvmParams& params, TrainingTrace* trace,
                       std::vector<double>& alpha) {
  check_labels(y, x.rows());
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::degenerate_labels, "training labels contain a single class");
  }

  LinearModel model;
  model.c = params.c;
  if (params.class_weighting) {
    model.cost_positive = params.c * static_cast<double>(n) / (2.0 * static_cast<double>(positives));
    model.cost_negative = params.c * static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
  } else {
    model.cost_positive = model.cost_negative = params.c;
  }

  // w holds [weights..., bias] for the augmented input [x, 1].
  std::vector<double> w(d + 1, 0.0);
  if (alpha.size() != n) alpha.assign(n, 0.0);
  std::vector<double> upper(n), qii(n);
  const double* xd = x.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    upper[i] = y[i] > 0 ? model.cost_positive : model.cost_negative;
    qii[i] = dot(x.row(i), x.row(i)) + 1.0;
    alpha[i] = std::clamp(alpha[i], 0.0, upper[i]);
    if (alpha[i] == 0.0) continue;
    const double step = alpha[i] * static_cast<double>(y[i]);
    const double* row = xd + i * d;
    for (std::size_t j = 0; j < d; ++j) w[j] += step * row[j];
    w[d] += step;
  }
  auto margin = [&](std::size_t i) {
    const double* row = xd + i * d;
    double s = w[d];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
    return s;
  };
  // Relative duality gap on the full problem; also records the trace.
  auto gap_small = [&]() {
    double half_norm = 0.0, alpha_sum = 0.0, hinge = 0.0;
    for (double v : w) half_norm += v * v;
    half_norm *= 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      alpha_sum += alpha[i];
      hinge += upper[i] * std::max(0.0, 1.0 - static_cast<double>(y[i]) * margin(i));
    }
    const double dual = half_norm - alpha_sum;
    const double primal = half_norm + hinge;
    if (trace != nullptr) {
      trace->dual_objective.push_back(dual);
      trace->primal_objective.push_back(primal);
    }
    return primal + dual <= params.tolerance * std::max(primal, 1e-12);
  };

  // Coordinates stuck at a bound are shrunk out of the active set and
  // restored before convergence is declared.
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  std::size_t active = n;
  double pg_max_old = std::numeric_limits<double>::infinity();
  double pg_min_old = -std::numeric_limits<double>::infinity();
  constexpr int gap_interval = 10;
  constexpr double active_eps = 1e-3;
  Rng rng(params.seed);

  for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
    model.epochs = epoch;
    for (std::size_t s = 0; s + 1 < active; ++s) std::swap(index[s], index[s + rng.uniform_index(active - s)]);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < active; ++s) {
      const std::size_t i = index[s];
      const double yi = static_cast<double>(y[i]);
      const double g = yi * margin(i) - 1.0;
      double pg = 0.0;
      if (alpha[i] <= 0.0) {
        if (g > pg_max_old) {
          std::swap(index[s--], index[--active]);
          continue;
        }
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= upper[i]) {
        if (g < pg_min_old) {
          std::swap(index[s--], index[--active]);
          continue;
        }
        pg = std::max(g, 0.0);
      } else {
        pg = g;
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double updated = std::clamp(alpha[i] - g / qii[i], 0.0, upper[i]);
      const double step = (updated - alpha[i]) * yi;
      alpha[i] = updated;
      if (step == 0.0) continue;
      const double* row = xd + i * d;
      for (std::size_t j = 0; j < d; ++j) w[j] += step * row[j];
      w[d] += step;
    }

    const bool active_converged = active == 0 || pg_max - pg_min <= active_eps;
    if (trace != nullptr || active_converged || epoch % gap_interval == 0 || epoch == params.max_epochs) {
      if (gap_small()) {
        model.converged = true;
        break;
      }
    }
    if (active_converged) {
      active = n;  // unshrink and keep going on the full set
      pg_max_old = std::numeric_limits<double>::infinity();
      pg_min_old = -std::numeric_limits<double>::infinity();
    } else {
      pg_max_old = pg_max > 0.0 ? pg_max : std::numeric_limits<double>::infinity();
      pg_min_old = pg_min < 0.0 ? pg_min : -std::numeric_limits<double>::infinity();
    }
  }
  model.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = w[d];
  return model;
}

}  // namespace

LinearModel train_svm(const Matrix& x, std::span<const int> y, const SvmParams& params, TrainingTrace* trace) {
  std::vector<double> alpha;
  return solve_dual(x, y, params, trace, alpha);
}

LinearModel train_svm_warm(const Matrix& x, std::span<const int> y, const SvmParams& params,
                           std::vector<double>& alpha) {
  return solve_dual(x, y, params, nullptr, alpha);
}

std::vector<double> concat_features(std::span<const double> eeg, std::span<const double> music) {
  std::vector<double> out(eeg.begin(), eeg.end());
  out.insert(out.end(), music.begin(), music.end());
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::config_error, "cross-validation needs k >= 2");
  if (y.size() < k) {
    throw Error(ErrorCode::insufficient_data, "need at least " + std::to_string(k) + " examples for " +
                                                  std::to_string(k) + "-fold cross-validation");
  }
  Rng rng(seed);
  std::vector<std::size_t> folds(y.size(), 0);
  std::size_t counter = 0;
  for (int label : {-1, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == label) members.push_back(i);
    }
    rng.shuffle(members);
    // Round-robin continues across classes so every fold is non-empty.
    for (std::size_t i : members) folds[i] = counter++ % k;
  }
  return folds;
}

CvResult cross_validate_with_folds(const Matrix& x, std::span<const int> y, std::span<const std::size_t> folds,
                                   std::size_t k, const SvmParams& params) {
  check_labels(y, x.rows());
  if (folds.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "fold assignment length mismatch");
  CvResult result;
  std::vector<std::size_t> train, test;
  std::vector<int> train_y;
  for (std::size_t f = 0; f < k; ++f) {
    train.clear();
    test.clear();
    train_y.clear();
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] == f) {
        test.push_back(i);
      } else {
        train.push_back(i);
        train_y.push_back(y[i]);
      }
    }
    const auto pos = std::count(train_y.begin(), train_y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(train_y.size())) {
      throw Error(ErrorCode::stratification, "fold " + std::to_string(f) + " training split lacks a class");
    }
    if (test.empty()) throw Error(ErrorCode::stratification, "fold " + std::to_string(f) + " is empty");
    const auto model = train_svm(x.select_rows(train), train_y, params);
    std::size_t correct = 0;
    for (std::size_t i : test) {
      if (model.predict(x.row(i)) == y[i]) ++correct;
    }
    result.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
  }
  result.mean = stats::mean(result.fold_accuracy);
  result.stddev = stats::stddev(result.fold_accuracy, true);
  return result;
}

CvResult cross_validate(const Matrix& x, std::span<const int> y, std::size_t k, std::uint64_t seed,
                        const SvmParams& params) {
  check_labels(y, x.rows());
  const auto folds = stratified_folds(y, k, seed);
  return cross_validate_with_folds(x, y, folds, k, params);
}

WindowStudyResult window_length_study(const std::vector<LengthDataset>& datasets, std::span<const int> y,
                                      std::size_t k, std::uint64_t seed, const SvmParams& params, double alpha) {
  if (datasets.size() < 2) throw Error(ErrorCode::insufficient_data, "window study needs >= 2 window lengths");
  WindowStudyResult out;
  const auto folds = stratified_folds(y, k, seed);
  std::vector<std::vector<double>> groups;
  for (const auto& ds : datasets) {
    if (ds.features.rows() != y.size()) {
      throw Error(ErrorCode::insufficient_data, "window length " + std::to_string(ds.seconds) +
                                                    "s does not cover every trial");
    }
    out.seconds.push_back(ds.seconds);
    out.cv.push_back(cross_validate_with_folds(ds.features, y, folds, k, params));
    groups.push_back(out.cv.back().fold_accuracy);
  }
  out.anova = stats::one_way_anova(groups);

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.cv.size(); ++i) {
    if (out.cv[i].mean > out.cv[best].mean ||
        (out.cv[i].mean == out.cv[best].mean && out.seconds[i] < out.seconds[best])) {
      best = i;
    }
  }
  std::vector<std::size_t> by_length(out.seconds.size());
  std::iota(by_length.begin(), by_length.end(), 0);
  std::sort(by_length.begin(), by_length.end(), [&](auto a, auto b) { return out.seconds[a] < out.seconds[b]; });
  out.recommended_seconds = out.seconds[best];
  for (std::size_t i : by_length) {
    const bool indistinguishable = out.anova.p > alpha || i == best ||
                                   stats::welch_t_test_p(groups[i], groups[best]) > alpha;
    if (indistinguishable) {
      out.recommended_seconds = out.seconds[i];
      break;
    }
  }
  return out;
}

}  // namespace emoreg
