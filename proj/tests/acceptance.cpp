// Acceptance run: one PASS/FAIL line per criterion. A criterion marked as a
// known gap still prints FAIL when it fails but does not change the exit
// status; any other FAIL exits 1.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "emoreg/audio_features.hpp"
#include "emoreg/eeg.hpp"
#include "emoreg/regulation.hpp"
#include "emoreg/selection.hpp"
#include "emoreg/simulation.hpp"
#include "emoreg/storage.hpp"
#include "emoreg/svm.hpp"
#include "oracles.hpp"

using namespace emoreg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failing check; later checks still run.
struct Checks {
  Outcome out;
  void expect(bool ok, const std::string& what) {
    if (!ok && out.pass) {
      out.pass = false;
      out.detail = what;
    }
  }
};

int failures = 0;
int known_failures = 0;

void run(const std::string& name, double budget_seconds, const std::function<Outcome()>& body,
         bool known_gap = false) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.pass && secs >= budget_seconds) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("over the time budget");
  }
  if (!o.pass) ++(known_gap ? known_failures : failures);
  std::printf("%s %s (%.2f s of %.0f s)%s%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, budget_seconds,
              o.detail.empty() ? "" : ": ", o.detail.c_str(), !o.pass && known_gap ? " [known gap]" : "");
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Outcome t_score_oracle() {
  Checks c;
  c.expect(t_score({{0, 0, 0, 1, 1}}) == 0.25, "t_score([0,0,0,1,1]) != 0.25");
  c.expect(t_score({{0, 1, 0, 1, 0}}) == 1.0, "t_score([0,1,0,1,0]) != 1.0");
  c.expect(t_score({{1, 1, 1, 1}}) == 0.0 && t_score({{0, 0, 0}}) == 0.0, "constant sequence is not 0");
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::vector<int>> seqs(1 + rng.uniform_index(4));
    for (auto& s : seqs) {
      s.resize(2 + rng.uniform_index(8));
      for (int& v : s) v = rng.uniform01() < 0.5;
    }
    const double t = t_score(seqs);
    c.expect(t >= 0.0 && t <= 1.0, "t_score outside [0, 1]");
  }
  return c.out;
}

Outcome pearson_recomputation() {
  const std::vector<double> t{0.24, 0.15, 0.22, 0.40, 0.07};
  const std::vector<double> big5{0.38, 0.43, 0.38, 0.52, 0.05};
  const double r = correlate_instability(t, big5);
  Checks c;
  c.expect(std::abs(r - 0.808) <= 0.005, "r = " + fmt(r));
  c.expect(std::abs(r - oracle::pearson(t, big5)) < 1e-12, "disagrees with the two-pass oracle");
  c.out.detail = c.out.pass ? "r = " + fmt(r) : c.out.detail;
  return c.out;
}

// Ten songs of chords with a slow amplitude envelope, 3 s each.
Outcome feature_counts() {
  Checks c;
  const audio::FrameParams params;
  Rng rng(3);
  for (int song = 0; song < 10; ++song) {
    const std::size_t n = static_cast<std::size_t>(3.0 * params.sample_rate);
    std::vector<double> x(n);
    const double f0 = 110.0 * std::pow(2.0, song / 12.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / params.sample_rate;
      const double env = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * 2.0 * t);
      x[i] = env * (std::sin(2.0 * std::numbers::pi * f0 * t) + 0.5 * std::sin(2.0 * std::numbers::pi * 1.5 * f0 * t)) +
             0.05 * rng.normal();
    }
    const auto frames = audio::extract_frame_features(x, params);
    c.expect(frames.values.cols() == 555, "frame dims " + std::to_string(frames.values.cols()));
    const auto agg = audio::aggregate_features(frames, "s" + std::to_string(song));
    c.expect(agg.values.size() == 1665, "aggregated dims " + std::to_string(agg.values.size()));
  }
  synthetic::EegConfig ec;
  ec.seed = 4;
  synthetic::EegUser user(ec);
  for (int e = 0; e < 3; ++e) {
    user.start_experiment();
    for (int w : {2, 5, 10}) {
      const auto f = eeg::extract_features(user.record(20.0), w);
      c.expect(f.size() == 40, "EEG vector " + std::to_string(f.size()));
    }
  }
  return c.out;
}

Outcome dsp_oracles() {
  Checks c;
  const std::array<double, 5> edges{8.0, 12.0, 16.0, 32.0, 48.0};
  const std::array<std::pair<double, eeg::Band>, 3> tones{
      {{10.0, eeg::Band::alpha}, {20.0, eeg::Band::beta2}, {40.0, eeg::Band::gamma}}};
  for (int seconds : {2, 5, 10}) {
    for (const auto& [hz, band] : tones) {
      const auto x = oracle::sine(hz, eeg::sample_rate, static_cast<std::size_t>(seconds) * 128);
      eeg::Window w;
      w.channels = {"O1"};
      w.samples = {x};
      const auto bp = eeg::band_powers(w, seconds).power[0];
      double total = 0.0;
      for (double v : bp) total += v;
      const auto b = static_cast<std::size_t>(band);
      c.expect(bp[b] >= 0.95 * total, fmt(hz) + " Hz tone share " + fmt(bp[b] / total));
      const auto ref = oracle::band_sums(
          oracle::moving_average(oracle::one_sided_power(x), eeg::smoothing_points(seconds)), 1.0 / seconds, edges);
      for (std::size_t k = 0; k < 4; ++k) {
        c.expect(std::abs(bp[k] - ref[k]) <= 1e-9 * std::max(1.0, std::abs(ref[k])), "band power differs from DFT");
      }
      double ref_total = 0.0;
      for (double v : ref) ref_total += v;
      c.expect(ref[b] >= 0.95 * ref_total, "DFT oracle share below 0.95");
    }
  }
  namespace L = audio::layout;
  Rng rng(17);
  const std::size_t frames = 1000;
  std::vector<double> x(2048 + (frames - 1) * 512);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal() * (1.0 + std::sin(static_cast<double>(i) * 1e-3));
  const auto m = audio::extract_frame_features(x);
  c.expect(m.frames() == frames, "frame count " + std::to_string(m.frames()));
  for (std::size_t f = 0; f < m.frames(); ++f) {
    for (std::size_t k = 1; k < L::rolloff_count; ++k) {
      c.expect(m.values(f, L::rolloff + k - 1) <= m.values(f, L::rolloff + k), "roll-off not monotone");
    }
  }
  return c.out;
}

// Columns 0..34 informative and independent; 35..39 constant; 40..44 with a
// 92% mode; 45..49 copies of 0..4.
Outcome reduction_filter() {
  Rng rng(5);
  const std::size_t n = 100;
  Matrix x(n, 50);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 35; ++j) x(i, j) = rng.normal();
    for (std::size_t j = 35; j < 40; ++j) x(i, j) = static_cast<double>(j);
    for (std::size_t j = 40; j < 45; ++j) x(i, j) = i < 92 ? -1.0 : rng.normal();
    for (std::size_t j = 45; j < 50; ++j) x(i, j) = x(i, j - 45);
  }
  const auto r = audio::reduce_features(x);
  std::vector<std::size_t> dropped;
  for (const auto* v : {&r.dropped_constant, &r.dropped_quasi_constant, &r.dropped_correlated}) {
    dropped.insert(dropped.end(), v->begin(), v->end());
  }
  std::sort(dropped.begin(), dropped.end());
  std::vector<std::size_t> expected;
  for (std::size_t j = 35; j < 50; ++j) expected.push_back(j);
  Checks c;
  c.expect(dropped == expected, "dropped " + std::to_string(dropped.size()) + " columns, not 35..49");
  c.expect(r.dropped_constant.size() == 5 && r.dropped_quasi_constant.size() == 5 && r.dropped_correlated.size() == 5,
           "wrong per-stage counts");
  c.expect(r.kept_indices.size() == 35, "kept " + std::to_string(r.kept_indices.size()));
  return c.out;
}

// Label is the sign of the sum of columns 0..2; the others are noise.
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

bool contains(const std::vector<std::size_t>& v, std::size_t i) { return std::find(v.begin(), v.end(), i) != v.end(); }

Outcome sbs_suite() {
  Checks c;
  Matrix x;
  std::vector<int> y;
  informative_data(x, y, 5, 31);
  const auto same = sbs(x, y, x.cols(), 1);
  c.expect(same.selected == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7} && same.trace.empty(),
           "target_k = dims is not the identity");

  std::size_t noise_first = 0, runs = 0;
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    informative_data(x, y, 1, seed);
    const auto r = sbs(x, y, 3, seed);
    ++runs;
    noise_first += !r.trace.empty() && r.trace[0].removed == 3;
  }
  c.expect(noise_first == runs, "noise column removed first in " + std::to_string(noise_first) + "/10 sets");

  informative_data(x, y, 6, 22);
  const auto wide = sbs(x, y, 6, 7);
  const auto narrow = sbs(x, y, 3, 7);
  for (auto i : narrow.selected) c.expect(contains(wide.selected, i), "selections are not nested");
  for (std::size_t s = 0; s < wide.trace.size() && s < narrow.trace.size(); ++s) {
    c.expect(narrow.trace[s] == wide.trace[s], "removal order differs between targets");
  }
  c.expect(sbs(x, y, 6, 7) == wide && sbs(x, y, 3, 7) == narrow, "not deterministic under a fixed seed");
  return c.out;
}

struct Clouds {
  Matrix x;
  std::vector<int> y;
};

Clouds clouds(std::size_t n_pos, std::size_t n_neg, std::size_t dims, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Clouds d{Matrix(n_pos + n_neg, dims), {}};
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const int label = i < n_pos ? 1 : -1;
    d.y.push_back(label);
    for (std::size_t j = 0; j < dims; ++j) d.x(i, j) = rng.normal(label * shift, 1.0);
  }
  return d;
}

double recall(const LinearModel& m, const Clouds& d, int label) {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (d.y[i] != label) continue;
    ++total;
    hit += m.predict(d.x.row(i)) == label;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

Outcome classifier_suite() {
  Checks c;
  {
    const auto d = clouds(40, 40, 2, 3.0, 1);
    const auto m = train_svm(d.x, d.y);
    c.expect(recall(m, d, 1) == 1.0 && recall(m, d, -1) == 1.0, "separable blobs not fit exactly");
  }
  {
    const auto d = clouds(20, 25, 3, 0.8, 3);
    auto flipped = d;
    for (int& v : flipped.y) v = -v;
    const auto a = train_svm(d.x, d.y);
    const auto b = train_svm(flipped.x, flipped.y);
    for (std::size_t j = 0; j < 3; ++j) {
      c.expect(std::abs(a.weights[j] + b.weights[j]) <= 1e-3 * std::max(1.0, std::abs(a.weights[j])),
               "sign flip does not negate the weights");
    }
    c.expect(std::abs(a.bias + b.bias) <= 1e-3 * std::max(1.0, std::abs(a.bias)), "sign flip does not negate the bias");
  }
  {
    const auto d = clouds(180, 20, 2, 0.5, 4);
    SvmParams plain;
    plain.class_weighting = false;
    const double weighted = recall(train_svm(d.x, d.y), d, -1);
    const double unweighted = recall(train_svm(d.x, d.y, plain), d, -1);
    c.expect(weighted > unweighted, "minority recall " + fmt(weighted) + " vs " + fmt(unweighted));
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(1000 + seed);
    Matrix x(70, 5);
    std::vector<int> y(70);
    for (std::size_t i = 0; i < 70; ++i) {
      for (std::size_t j = 0; j < 5; ++j) x(i, j) = rng.normal();
      y[i] = rng.uniform01() < 0.5 ? 1 : -1;
    }
    if (std::count(y.begin(), y.end(), 1) < 7 || std::count(y.begin(), y.end(), -1) < 7) y[0] = -y[0];
    total += cross_validate(x, y, 7, seed).mean;
  }
  const double mean = total / 50.0;
  c.expect(std::abs(mean - 0.5) <= 0.1, "noise-label CV mean " + fmt(mean));
  if (c.out.pass) c.out.detail = "noise-label CV mean " + fmt(mean);
  return c.out;
}

SimulationResult scenario_run(const std::string& responder_kind, int training_days, int testing_experiments,
                              std::uint64_t seed) {
  ScenarioConfig scfg;
  scfg.seed = seed;
  scfg.responder_kind = responder_kind;
  auto scenario = make_scenario(scfg);
  synthetic::EegUser user(scenario.eeg);
  auto responder = synthetic::make_responder(scenario.responder);
  SimulationConfig sc;
  sc.seed = seed;
  sc.training_days = training_days;
  sc.testing_experiments = testing_experiments;
  return run_simulation(scenario.library, scenario.music, user, *responder, sc);
}

Outcome closed_loop() {
  const auto r = scenario_run("linear", 6, 6, 1).report;
  Checks c;
  const double baseline = r.baseline_match_rate.value_or(1.0);
  c.expect(r.training_trials >= 100, "training trials " + std::to_string(r.training_trials));
  c.expect(r.testing_match_rate >= 0.85, "match rate " + fmt(r.testing_match_rate) + " < 0.85");
  c.expect(baseline <= 0.5, "baseline " + fmt(baseline) + " > 0.5");
  const std::string stats = "training " + std::to_string(r.training_trials) + ", testing " +
                            std::to_string(r.testing_trials) + ", match " + fmt(r.testing_match_rate) +
                            ", baseline " + fmt(baseline);
  c.out.detail = c.out.pass ? stats : c.out.detail + " (" + stats + ")";
  return c.out;
}

// Random labels make every selection fit slow to converge, so this run trains
// on two days; the criterion concerns the testing phase only.
Outcome random_responder() {
  const auto r = scenario_run("uniform_random", 2, 46, 2).report;
  Checks c;
  c.expect(r.testing_trials >= 1000, "testing trials " + std::to_string(r.testing_trials));
  c.expect(std::abs(r.testing_match_rate - 0.25) <= 0.05, "match rate " + fmt(r.testing_match_rate));
  if (c.out.pass) c.out.detail = std::to_string(r.testing_trials) + " trials, match " + fmt(r.testing_match_rate);
  return c.out;
}

// One latent matrix per trial set; each window length sees it through its
// own equal-variance noise, so no length is favoured.
Outcome window_study() {
  Rng rng(9);
  const std::size_t n = 84, dims = 40;
  Matrix latent(n, dims);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) latent(i, j) = rng.normal();
    y[i] = latent(i, 0) + latent(i, 1) - latent(i, 2) > 0.0 ? 1 : -1;
  }
  std::vector<LengthDataset> sets;
  for (int s : {10, 5, 2}) {
    Matrix x = latent;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dims; ++j) x(i, j) += 0.3 * rng.normal();
    }
    sets.push_back({s, x});
  }
  const auto r = window_length_study(sets, y, 7, 1);
  Checks c;
  c.expect(r.anova.p > 0.05, "p = " + fmt(r.anova.p));
  c.expect(r.recommended_seconds == 2, "recommends " + std::to_string(r.recommended_seconds) + " s");
  if (c.out.pass) c.out.detail = "F = " + fmt(r.anova.f) + ", p = " + fmt(r.anova.p);
  return c.out;
}

struct Run {
  Scenario scenario;
  std::string report;
  SimulationResult result;
};

Run small_run(std::uint64_t seed) {
  ScenarioConfig scfg;
  scfg.seed = seed;
  scfg.recording_seconds = 4.0;
  scfg.calibration_experiments = 4;
  Run r{make_scenario(scfg), {}, {}};
  SimulationConfig sc;
  sc.seed = seed;
  sc.training_days = 2;
  sc.testing_experiments = 1;
  sc.trials_per_testing_experiment = 8;
  sc.real_life_days = 1;
  sc.recording_seconds = 4.0;
  sc.training.combined_k = 8;
  synthetic::EegUser user(r.scenario.eeg);
  auto responder = synthetic::make_responder(r.scenario.responder);
  r.result = run_simulation(r.scenario.library, r.scenario.music, user, *responder, sc);
  r.report = report_to_json(r.result.report).dump(2);
  return r;
}

Outcome determinism() {
  const auto a = small_run(21);
  const auto b = small_run(21);
  Checks c;
  c.expect(a.report == b.report, "reports differ for the same seed");
  const auto text = storage::format_model_bundle(a.result.models);
  c.expect(text == storage::format_model_bundle(b.result.models), "bundles differ for the same seed");

  const auto restored = storage::parse_model_bundle(text);
  const auto& lib = a.scenario.library;
  const ModelPredictor before(a.result.models, lib), after(restored, lib);
  std::size_t same = 0;
  for (const auto& t : a.result.log) {
    for (const auto& song : lib.songs()) same += before.predict(t.eeg_features, song) == after.predict(t.eeg_features, song);
  }
  const std::size_t total = a.result.log.size() * lib.size();
  c.expect(total > 0 && same == total, std::to_string(total - same) + " predictions changed after the round trip");
  if (c.out.pass) c.out.detail = std::to_string(total) + " predictions compared";
  return c.out;
}

}  // namespace

int main() {
  run("t-score worked values, constants and range", 1, t_score_oracle);
  run("instability vs neuroticism correlation", 1, pearson_recomputation);
  run("feature counts 555 / 1665 / 40", 60, feature_counts);
  run("band-power tones and roll-off ordering", 60, dsp_oracles);
  run("reduction drops exactly the 15 planted columns", 10, reduction_filter);
  run("backward selection properties", 120, sbs_suite);
  run("classifier properties", 300, classifier_suite);
  run("closed-loop testing match rate", 600, closed_loop, true);
  run("random responder calibration", 120, random_responder);
  run("window-length study", 300, window_study);
  run("determinism and bundle persistence", 60, determinism);
  std::printf("%d unexpected failure(s), %d known gap(s)\n", failures, known_failures);
  return failures == 0 ? 0 : 1;
}
