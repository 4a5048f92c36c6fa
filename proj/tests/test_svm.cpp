#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emoreg/error.hpp"
#include "emoreg/random.hpp"
#include "emoreg/svm.hpp"

using namespace emoreg;

namespace {

struct Dataset {
  Matrix x;
  std::vector<int> y;
};

// Two Gaussian clouds at +-shift along every axis.
Dataset clouds(std::size_t n_pos, std::size_t n_neg, std::size_t dims, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{Matrix(n_pos + n_neg, dims), {}};
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const int label = i < n_pos ? 1 : -1;
    d.y.push_back(label);
    for (std::size_t j = 0; j < dims; ++j) d.x(i, j) = rng.normal(label * shift, 1.0);
  }
  return d;
}

double accuracy(const LinearModel& m, const Dataset& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) ok += m.predict(d.x.row(i)) == d.y[i];
  return static_cast<double>(ok) / static_cast<double>(d.y.size());
}

double recall(const LinearModel& m, const Dataset& d, int label) {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (d.y[i] != label) continue;
    ++total;
    hit += m.predict(d.x.row(i)) == label;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

// Primal objective with the bias regularized, matching the augmented form.
double primal(double w, double b, const Dataset& d, double c_pos, double c_neg) {
  double obj = 0.5 * (w * w + b * b);
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const double cost = d.y[i] > 0 ? c_pos : c_neg;
    obj += cost * std::max(0.0, 1.0 - d.y[i] * (w * d.x(i, 0) + b));
  }
  return obj;
}

// Grid search refined around the best point; the objective is convex.
double brute_min_1d(const Dataset& d, double c_pos, double c_neg) {
  double best = std::numeric_limits<double>::infinity(), bw = 0.0, bb = 0.0;
  double span = 8.0;
  for (int round = 0; round < 8; ++round) {
    const double cw = bw, cb = bb;
    for (int i = -100; i <= 100; ++i) {
      for (int j = -100; j <= 100; ++j) {
        const double w = cw + span * i / 100.0, b = cb + span * j / 100.0;
        const double v = primal(w, b, d, c_pos, c_neg);
        if (v < best) {
          best = v;
          bw = w;
          bb = b;
        }
      }
    }
    span /= 10.0;
  }
  return best;
}

}  // namespace

TEST_SUITE("svm") {
  TEST_CASE("separable data is fit exactly") {
    const auto d = clouds(30, 30, 4, 3.0, 1);
    const auto m = train_svm(d.x, d.y);
    CHECK(m.converged);
    CHECK(accuracy(m, d) == 1.0);
    CHECK(m.weights.size() == 4);
  }

  TEST_CASE("solution matches a brute-force primal minimum") {
    const auto d = clouds(14, 6, 1, 0.7, 2);
    const auto m = train_svm(d.x, d.y);
    REQUIRE(m.converged);
    CHECK(m.cost_positive == doctest::Approx(20.0 / 28.0));
    CHECK(m.cost_negative == doctest::Approx(20.0 / 12.0));
    const double ours = primal(m.weights[0], m.bias, d, m.cost_positive, m.cost_negative);
    const double best = brute_min_1d(d, m.cost_positive, m.cost_negative);
    CHECK(ours <= best * (1.0 + 1e-5));
    CHECK(ours >= best * (1.0 - 1e-5));
  }

  TEST_CASE("flipping labels flips the model") {
    const auto d = clouds(20, 25, 3, 0.8, 3);
    auto flipped = d;
    for (int& v : flipped.y) v = -v;
    const auto a = train_svm(d.x, d.y);
    const auto b = train_svm(flipped.x, flipped.y);
    for (std::size_t j = 0; j < 3; ++j) CHECK(b.weights[j] == doctest::Approx(-a.weights[j]).epsilon(1e-3));
    CHECK(b.bias == doctest::Approx(-a.bias).epsilon(1e-3));
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      if (std::abs(a.decision(d.x.row(i))) > 1e-3) CHECK(b.predict(d.x.row(i)) == -a.predict(d.x.row(i)));
    }
  }

  TEST_CASE("ratio weighting lifts minority recall") {
    const auto d = clouds(180, 20, 2, 0.5, 4);
    SvmParams plain;
    plain.class_weighting = false;
    const auto weighted = train_svm(d.x, d.y);
    const auto unweighted = train_svm(d.x, d.y, plain);
    CHECK(weighted.cost_negative == doctest::Approx(200.0 / 40.0));
    CHECK(unweighted.cost_negative == 1.0);
    CHECK(recall(weighted, d, -1) > recall(unweighted, d, -1));
  }

  TEST_CASE("dual objective never increases and the gap closes") {
    const auto d = clouds(40, 35, 5, 0.4, 5);
    TrainingTrace trace;
    const auto m = train_svm(d.x, d.y, {}, &trace);
    REQUIRE(trace.dual_objective.size() == static_cast<std::size_t>(m.epochs));
    for (std::size_t e = 1; e < trace.dual_objective.size(); ++e) {
      CHECK(trace.dual_objective[e] <= trace.dual_objective[e - 1] + 1e-9);
    }
    CHECK(m.converged);
    const double p = trace.primal_objective.back(), q = trace.dual_objective.back();
    CHECK(p + q <= 1e-6 * p);
  }

  TEST_CASE("iteration cap yields a non-converged model") {
    const auto d = clouds(40, 35, 5, 0.4, 6);
    SvmParams p;
    p.max_epochs = 2;
    const auto m = train_svm(d.x, d.y, p);
    CHECK(!m.converged);
    CHECK(m.epochs == 2);
  }

  TEST_CASE("training is deterministic for a seed") {
    const auto d = clouds(25, 25, 3, 0.3, 7);
    CHECK(train_svm(d.x, d.y) == train_svm(d.x, d.y));
  }

  TEST_CASE("warm start reaches the same solution") {
    const auto d = clouds(40, 30, 4, 0.5, 8);
    const auto cold = train_svm(d.x, d.y);
    std::vector<double> alpha;
    const auto first = train_svm_warm(d.x, d.y, {}, alpha);
    CHECK(first == cold);
    const auto again = train_svm_warm(d.x, d.y, {}, alpha);
    CHECK(again.converged);
    CHECK(again.epochs <= 10);
    for (std::size_t j = 0; j < 4; ++j) CHECK(again.weights[j] == doctest::Approx(cold.weights[j]).epsilon(1e-2));
  }

  TEST_CASE("input validation") {
    const auto d = clouds(5, 5, 2, 1.0, 9);
    std::vector<int> one_class(10, 1);
    try {
      train_svm(d.x, one_class);
      FAIL("expected degenerate_labels");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate_labels);
    }
    std::vector<int> bad = d.y;
    bad[0] = 0;
    CHECK_THROWS_AS(train_svm(d.x, bad), Error);
    CHECK_THROWS_AS(train_svm(d.x, std::vector<int>(3, 1)), Error);
    const auto m = train_svm(d.x, d.y);
    CHECK_THROWS_AS(m.decision(std::vector<double>(3, 0.0)), Error);
    CHECK(axis_label(0.0) == -1);
    CHECK(axis_label(0.1) == 1);
  }

  TEST_CASE("stratified folds") {
    std::vector<int> y(70, -1);
    std::fill(y.begin(), y.begin() + 21, 1);
    const auto folds = stratified_folds(y, 7, 3);
    CHECK(folds == stratified_folds(y, 7, 3));
    for (std::size_t f = 0; f < 7; ++f) {
      std::size_t pos = 0, total = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (folds[i] != f) continue;
        ++total;
        pos += y[i] == 1;
      }
      CHECK(total == 10);
      CHECK(pos == 3);
    }
    CHECK_THROWS_AS(stratified_folds(y, 1, 0), Error);
    CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, -1, 1}, 7, 0), Error);
  }

  TEST_CASE("cross-validation on noise labels sits at chance") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(1000 + seed);
      Matrix x(70, 5);
      std::vector<int> y(70);
      for (std::size_t i = 0; i < 70; ++i) {
        for (std::size_t j = 0; j < 5; ++j) x(i, j) = rng.normal();
        y[i] = i % 2 == 0 ? 1 : -1;
      }
      const auto cv = cross_validate(x, y, 7, seed);
      CHECK(cv.fold_accuracy.size() == 7);
      total += cv.mean;
    }
    CHECK(std::abs(total / 50.0 - 0.5) <= 0.1);
  }

  TEST_CASE("window study recommends the shortest indistinguishable length") {
    const auto base = clouds(35, 35, 4, 0.6, 10);
    std::vector<LengthDataset> same;
    for (int s : {10, 5, 2}) same.push_back({s, base.x});
    const auto r = window_length_study(same, base.y);
    CHECK(r.anova.p > 0.05);
    CHECK(r.recommended_seconds == 2);

    // Only the 10 s features carry the label.
    Rng rng(11);
    Matrix noise(70, 4);
    for (std::size_t i = 0; i < 70; ++i) {
      for (std::size_t j = 0; j < 4; ++j) noise(i, j) = rng.normal();
    }
    const auto strong = clouds(35, 35, 4, 2.5, 12);
    const std::vector<LengthDataset> mixed{{10, strong.x}, {5, noise}, {2, noise}};
    const auto m = window_length_study(mixed, strong.y);
    CHECK(m.anova.p < 0.05);
    CHECK(m.recommended_seconds == 10);

    CHECK_THROWS_AS(window_length_study({same[0]}, base.y), Error);
  }
}
