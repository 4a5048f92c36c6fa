#include <doctest.h>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoreg/eeg.hpp"
#include "emoreg/error.hpp"
#include "emoreg/random.hpp"
#include "oracles.hpp"

using namespace emoreg;
using namespace emoreg::eeg;

namespace {

constexpr double fs = sample_rate;

std::vector<std::string> all_channels() { return {emotiv_channels.begin(), emotiv_channels.end()}; }

Recording noise_recording(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::vector<std::vector<double>> samples(14, std::vector<double>(n));
  for (auto& ch : samples) {
    for (double& v : ch) v = rng.normal(0.0, sd);
  }
  return make_recording(all_channels(), std::move(samples));
}

double middle_power(const std::vector<double>& x) {
  const std::size_t q = x.size() / 4;
  return oracle::mean_square(std::span<const double>(x).subspan(q, x.size() - 2 * q));
}

std::vector<double> filter_one(const std::vector<double>& x) {
  auto rec = make_recording({"O1"}, {x});
  return bandpass_filter(rec).samples[0];
}

std::array<double, band_count>& slot(BandPowerTable& bp, std::string_view name) {
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    if (bp.channels[i] == name) return bp.power[i];
  }
  throw std::out_of_range(std::string(name));
}

Window window_of(const std::vector<std::vector<double>>& channels, const std::vector<std::string>& names) {
  Window w;
  w.channels = names;
  w.samples = channels;
  return w;
}

}  // namespace

TEST_SUITE("eeg") {
  TEST_CASE("band membership on shared edges") {
    CHECK(!band_of(7.5));
    CHECK(band_of(8.0) == Band::alpha);
    CHECK(band_of(12.0) == Band::alpha);
    CHECK(band_of(12.5) == Band::beta1);
    CHECK(band_of(16.0) == Band::beta1);
    CHECK(band_of(32.0) == Band::beta2);
    CHECK(band_of(32.5) == Band::gamma);
    CHECK(band_of(48.0) == Band::gamma);
    CHECK(!band_of(48.5));
  }

  TEST_CASE("band-pass keeps 10 Hz, removes 3 Hz and DC") {
    const std::size_t n = 10 * 128;
    const auto ten = oracle::sine(10.0, fs, n);
    CHECK(middle_power(filter_one(ten)) >= 0.9 * oracle::mean_square(ten));
    const auto three = oracle::sine(3.0, fs, n);
    CHECK(middle_power(filter_one(three)) <= 1e-4 * oracle::mean_square(three));
    const std::vector<double> dc(n, 4200.0);
    CHECK(middle_power(filter_one(dc)) <= 1e-4 * 4200.0 * 4200.0);
    const std::vector<double> zero(n, 0.0);
    for (double v : filter_one(zero)) CHECK(v == 0.0);
  }

  TEST_CASE("band-pass needs one second") {
    CHECK_THROWS_AS(filter_one(std::vector<double>(127, 1.0)), Error);
    try {
      filter_one(std::vector<double>(127, 1.0));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::input_too_short);
    }
  }

  TEST_CASE("recording validation") {
    CHECK_THROWS_AS(make_recording({"XX"}, {{1.0}}), Error);
    CHECK_THROWS_AS(make_recording({"O1", "O1"}, {{1.0}, {1.0}}), Error);
    CHECK_THROWS_AS(make_recording({"O1", "O2"}, {{1.0}, {1.0, 2.0}}), Error);
    CHECK_THROWS_AS(make_recording({"O1"}, {{NAN}}), Error);
  }

  TEST_CASE("Gaussian channels are not rejected; a spiky channel is") {
    auto rec = noise_recording(20 * 128, 3);
    for (double m : channel_deviation_measures(rec)) CHECK(m < 5.0);
    CHECK(reject_channels(rec).rejected_channels.empty());
    for (std::size_t i = 0; i < rec.length(); i += 192) rec.samples[4][i] += 800.0;
    const auto out = reject_channels(rec);
    CHECK(out.rejected_channels == std::set<std::string>{"T7"});
  }

  TEST_CASE("artifact windows") {
    auto rec = noise_recording(20 * 128, 5);
    CHECK(reject_artifacts(rec, 2).size() == 10);
    for (std::size_t i = 6 * 128; i < 8 * 128; ++i) rec.samples[2][i] *= 20.0;
    const auto clean = reject_artifacts(rec, 2);
    REQUIRE(clean.size() == 9);
    for (const auto& w : clean) CHECK(w.start != 6 * 128);

    auto single = noise_recording(2 * 128 + 50, 6);
    CHECK(reject_artifacts(single, 2).size() == 1);

    try {
      reject_artifacts(noise_recording(100, 7), 2);
      FAIL("expected input_too_short");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::input_too_short);
    }
    try {
      reject_artifacts(rec, 0);
      FAIL("expected window_size");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::window_size);
    }
  }

  TEST_CASE("bursts spread over channels can leave no clean window") {
    auto rec = noise_recording(3 * 2 * 128, 8);
    for (std::size_t w = 0; w < 3; ++w) {
      for (std::size_t i = w * 256; i < (w + 1) * 256; ++i) rec.samples[w][i] *= 30.0;
    }
    try {
      reject_artifacts(rec, 2);
      FAIL("expected no_clean_data");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_clean_data);
    }
  }

  TEST_CASE("band powers agree with the DFT oracle") {
    const std::array<double, 5> edges{8.0, 12.0, 16.0, 32.0, 48.0};
    for (int seconds : {2, 5, 10}) {
      const std::size_t n = static_cast<std::size_t>(seconds) * 128;
      Rng rng(static_cast<std::uint64_t>(seconds));
      std::vector<double> x(n);
      for (double& v : x) v = rng.normal();
      const auto table = band_powers(window_of({x}, {"O1"}), seconds);
      const auto p = oracle::one_sided_power(x);
      const auto expected =
          oracle::band_sums(oracle::moving_average(p, smoothing_points(seconds)), 1.0 / seconds, edges);
      for (std::size_t b = 0; b < 4; ++b) CHECK(table.power[0][b] == doctest::Approx(expected[b]).epsilon(1e-9));
    }
  }

  TEST_CASE("pure tones land in their band") {
    const std::array<double, 5> edges{8.0, 12.0, 16.0, 32.0, 48.0};
    const std::array<std::pair<double, Band>, 3> tones{{{10.0, Band::alpha}, {20.0, Band::beta2}, {40.0, Band::gamma}}};
    for (int seconds : {2, 5, 10}) {
      for (const auto& [hz, band] : tones) {
        const auto x = oracle::sine(hz, fs, static_cast<std::size_t>(seconds) * 128);
        const auto bp = band_powers(window_of({x}, {"O1"}), seconds).power[0];
        double total = 0.0;
        for (double v : bp) total += v;
        CHECK(bp[static_cast<std::size_t>(band)] >= 0.95 * total);
        const auto ref = oracle::band_sums(oracle::one_sided_power(x), 1.0 / seconds, edges);
        CHECK(ref[static_cast<std::size_t>(band)] == doctest::Approx(0.5).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("band powers respect Parseval") {
    for (int seconds : {2, 5, 10}) {
      const std::size_t n = static_cast<std::size_t>(seconds) * 128;
      Rng rng(40 + static_cast<std::uint64_t>(seconds));
      std::vector<double> noise(n), tones(n, 0.0);
      for (double& v : noise) v = rng.normal();
      for (double hz : {10.0, 20.0, 40.0}) {
        const auto t = oracle::sine(hz, fs, n, 1.0, hz);
        for (std::size_t i = 0; i < n; ++i) tones[i] += t[i];
      }
      for (const auto* x : {&noise, &tones}) {
        const auto p = oracle::one_sided_power(*x);
        double in_range = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double hz = static_cast<double>(k) / seconds;
          if (hz >= 8.0 && hz <= 49.0) in_range += p[k];
        }
        const auto bp = band_powers(window_of({*x}, {"O1"}), seconds).power[0];
        const double sum = bp[0] + bp[1] + bp[2] + bp[3];
        CHECK(sum <= 1.01 * in_range);
        if (x == &tones) CHECK(sum == doctest::Approx(in_range).epsilon(0.01));
      }
    }
  }

  TEST_CASE("window length is checked") {
    CHECK_THROWS_AS(smoothing_points(3), Error);
    const auto x = oracle::sine(10.0, fs, 200);
    CHECK_THROWS_AS(band_powers(window_of({x}, {"O1"}), 2), Error);
  }

  TEST_CASE("feature vector layout and symmetry") {
    CHECK(feature_count(Montage::full14) == 40);
    CHECK(feature_count(Montage::temporal_t7t8) == 8);
    CHECK(feature_names(Montage::full14).size() == 40);
    CHECK(feature_names(Montage::full14)[0] == "AF4-AF3_alpha");
    CHECK(feature_names(Montage::temporal_t7t8)[4] == "T8_alpha");

    BandPowerTable bp;
    bp.channels = all_channels();
    Rng rng(11);
    for (std::size_t i = 0; i < 14; ++i) {
      std::array<double, band_count> p{};
      for (double& v : p) v = rng.uniform(0.1, 2.0);
      bp.power.push_back(p);
    }
    // Mirror every right channel onto its left partner.
    auto symmetric = bp;
    for (const auto& [right, left] : asymmetry_pairs) {
      slot(symmetric, left) = slot(symmetric, right);
    }
    const auto fs_sym = eeg_feature_vector(symmetric);
    REQUIRE(fs_sym.size() == 40);
    for (std::size_t i = 0; i < 16; ++i) CHECK(fs_sym[i] == 0.0);

    auto swapped = bp;
    for (const auto& [right, left] : asymmetry_pairs) {
      std::swap(slot(swapped, left), slot(swapped, right));
    }
    const auto a = eeg_feature_vector(bp);
    const auto b = eeg_feature_vector(swapped);
    for (std::size_t i = 0; i < 16; ++i) CHECK(b[i] == doctest::Approx(-a[i]));
    for (std::size_t i = 16; i < 40; ++i) CHECK(b[i] == doctest::Approx(a[i]));

    const auto t = eeg_feature_vector(bp, Montage::temporal_t7t8);
    REQUIRE(t.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(t[i] == a[16 + i]);

    auto identical = bp;
    for (auto& p : identical.power) p = bp.power[0];
    const auto same = eeg_feature_vector(identical);
    for (std::size_t i = 36; i < 40; ++i) CHECK(same[i] == doctest::Approx(0.0));

    auto missing = bp;
    missing.channels.erase(missing.channels.begin() + 4);
    missing.power.erase(missing.power.begin() + 4);
    try {
      eeg_feature_vector(missing);
      FAIL("expected missing_channel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::missing_channel);
      CHECK(e.detail() == "T7");
    }
  }

  TEST_CASE("extract_features uses the last clean window") {
    auto rec = noise_recording(10 * 128, 12, 5.0);
    for (auto& ch : rec.samples) {
      for (std::size_t i = 8 * 128; i < 10 * 128; ++i) ch[i] *= 20.0;
    }
    const auto features = extract_features(rec, 2);
    const auto filtered = reject_channels(bandpass_filter(rec));
    const auto windows = reject_artifacts(filtered, 2);
    REQUIRE(windows.back().start == 6 * 128);
    CHECK(features == eeg_feature_vector(band_powers(windows.back(), 2)));
    CHECK(extract_features(rec, 2) == features);
    CHECK_THROWS_AS(extract_features(rec, 3), Error);
  }

  TEST_CASE("intra vs inter variance") {
    // Stationary process: the fraction hovers near one half.
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      Rng rng(100 + rep);
      std::vector<Matrix> exps;
      for (int e = 0; e < 6; ++e) {
        Matrix m(8, 40);
        for (std::size_t r = 0; r < 8; ++r) {
          for (std::size_t c = 0; c < 40; ++c) m(r, c) = rng.normal();
        }
        exps.push_back(m);
      }
      total += variance_analysis(exps).fraction;
    }
    CHECK(total / 20.0 == doctest::Approx(0.5).epsilon(0.2));

    // Experiment-level offsets make within-experiment variance smaller.
    Rng rng(7);
    std::vector<Matrix> shifted;
    for (int e = 0; e < 6; ++e) {
      Matrix m(8, 40);
      for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 40; ++c) m(r, c) = 10.0 * (e % 2) + 0.1 * rng.normal();
      }
      shifted.push_back(m);
    }
    const auto va = variance_analysis(shifted);
    CHECK(va.fraction == 1.0);

    CHECK_THROWS_AS(variance_analysis({shifted[0]}), Error);
  }
}
