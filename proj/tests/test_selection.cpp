#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "emoreg/error.hpp"
#include "emoreg/random.hpp"
#include "emoreg/selection.hpp"

using namespace emoreg;

namespace {

// The label is the sign of the sum of columns 0..2; the rest are noise.
void informative_data(Matrix& x, std::vector<int>& y, std::size_t noise_cols, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 84;
  x = Matrix(n, 3 + noise_cols);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += x(i, j) = rng.normal();
    y[i] = sum > 0.0 ? 1 : -1;
    for (std::size_t j = 3; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("additive scorer removes the weakest column each step") {
    const std::vector<double> value{5.0, 1.0, 3.0, 1.0, 4.0};
    auto score = [&](std::span<const std::size_t> s) {
      double t = 0.0;
      for (auto i : s) t += value[i];
      return t;
    };
    const auto r = sequential_backward_selection(5, 2, score);
    CHECK(r.selected == std::vector<std::size_t>{0, 4});
    REQUIRE(r.trace.size() == 3);
    CHECK(r.trace[0].removed == 1);  // tie with column 3, lower index first
    CHECK(r.trace[1].removed == 3);
    CHECK(r.trace[2].removed == 2);
    CHECK(r.final_score == 9.0);
  }

  TEST_CASE("identity when the target equals the width") {
    int calls = 0;
    auto score = [&](std::span<const std::size_t>) {
      ++calls;
      return 0.5;
    };
    const auto r = sequential_backward_selection(4, 4, score);
    CHECK(r.selected == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(r.trace.empty());
    CHECK(calls == 1);
  }

  TEST_CASE("argument checks") {
    auto score = [](std::span<const std::size_t>) { return 0.0; };
    CHECK_THROWS_AS(sequential_backward_selection(3, 0, score), Error);
    CHECK_THROWS_AS(sequential_backward_selection(3, 4, score), Error);
    auto nan_score = [](std::span<const std::size_t>) { return std::nan(""); };
    CHECK_THROWS_AS(sequential_backward_selection(3, 2, nan_score), Error);
  }

  TEST_CASE("observer sees every surviving set") {
    auto score = [](std::span<const std::size_t> s) { return static_cast<double>(s.front()); };
    std::vector<std::size_t> sizes;
    sequential_backward_selection(5, 2, score, [&](std::span<const std::size_t> s) { sizes.push_back(s.size()); });
    CHECK(sizes == std::vector<std::size_t>{5, 4, 3, 2});
  }

  TEST_CASE("a noise column is removed first") {
    Matrix x;
    std::vector<int> y;
    informative_data(x, y, 1, 21);
    const auto r = sbs(x, y, 3, 5);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].removed == 3);
    CHECK(r.selected == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("selections are nested and deterministic") {
    Matrix x;
    std::vector<int> y;
    informative_data(x, y, 6, 22);
    const auto wide = sbs(x, y, 6, 7);
    const auto narrow = sbs(x, y, 3, 7);
    CHECK(wide == sbs(x, y, 6, 7));
    for (auto i : narrow.selected) CHECK(std::find(wide.selected.begin(), wide.selected.end(), i) != wide.selected.end());
    REQUIRE(narrow.trace.size() > wide.trace.size());
    for (std::size_t s = 0; s < wide.trace.size(); ++s) CHECK(narrow.trace[s] == wide.trace[s]);
    CHECK(std::find(narrow.selected.begin(), narrow.selected.end(), 0) != narrow.selected.end());
  }

  TEST_CASE("scorer validates labels") {
    Matrix x(10, 2, 1.0);
    try {
      sbs(x, std::vector<int>(10, 1), 1, 0);
      FAIL("expected degenerate_labels");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate_labels);
    }
    CHECK_THROWS_AS(sbs(x, std::vector<int>(9, 1), 1, 0), Error);
  }

  TEST_CASE("selection profile counts blocks") {
    const std::vector<std::size_t> sel{0, 3, 39, 40, 55};
    const auto p = selection_profile(sel, 40);
    CHECK(p.eeg == 3);
    CHECK(p.music == 2);
    std::vector<std::size_t> split;
    for (std::size_t i = 0; i < 6; ++i) split.push_back(i * 5);
    for (std::size_t i = 0; i < 19; ++i) split.push_back(40 + i);
    const auto q = selection_profile(split, 40);
    CHECK(q.eeg == 6);
    CHECK(q.music == 19);
    CHECK(q.eeg + q.music == 25);
  }
}
