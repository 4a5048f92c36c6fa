#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "emoreg/error.hpp"
#include "emoreg/regulation.hpp"
#include "emoreg/storage.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace emoreg;
namespace st = emoreg::storage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("emoreg_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::validation;
}

template <typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

void put_u16(std::string& s, std::uint16_t v) {
  s += static_cast<char>(v & 0xff);
  s += static_cast<char>(v >> 8);
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

// Hand-built RIFF header for interleaved little-endian samples.
std::string wav_bytes(const std::vector<std::int16_t>& interleaved, int channels, int rate, int bits = 16) {
  std::string s = "RIFF";
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * 2);
  put_u32(s, 36 + data_size);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, static_cast<std::uint16_t>(channels));
  put_u32(s, static_cast<std::uint32_t>(rate));
  put_u32(s, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put_u16(s, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(s, static_cast<std::uint16_t>(bits));
  s += "data";
  put_u32(s, data_size);
  for (auto v : interleaved) put_u16(s, static_cast<std::uint16_t>(v));
  return s;
}

}  // namespace

TEST_SUITE("storage") {
  TEST_CASE("sha-256 test vectors") {
    CHECK(st::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(st::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("atomic text writes") {
    TempDir dir;
    const auto p = dir.path / "a.txt";
    st::write_text_atomic(p, "one");
    st::write_text_atomic(p, "two\n");
    CHECK(st::read_text(p) == "two\n");
    CHECK(st::sha256_file(p) == st::sha256_hex("two\n"));
    CHECK(code_of([&] { st::read_text(dir.path / "missing"); }) == ErrorCode::io_error);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
    CHECK(files == 1);
  }

  TEST_CASE("song manifest parsing and rescaling") {
    const std::string text =
        "# format_version: 1\n"
        "song_id,audio_path,genre,valence_raw,arousal_raw\n"
        "s1,audio/s1.wav,Rock,7.5,2\n"
        "\n"
        "s2,audio/s2.wav,Classical,1,9\n";
    const auto songs = st::parse_song_manifest(text);
    REQUIRE(songs.size() == 2);
    CHECK(songs[0].genre == Genre::rock);
    CHECK(songs[0].rescaled_annotation.valence == 2.5);
    CHECK(songs[0].rescaled_annotation.arousal == -3.0);
    CHECK(songs[0].annotation_quadrant() == Quadrant::q4);
    CHECK(songs[1].annotation_quadrant() == Quadrant::q2);
    const auto again = st::parse_song_manifest(st::format_song_manifest(songs));
    REQUIRE(again.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(again[i].song_id == songs[i].song_id);
      CHECK(again[i].audio_path == songs[i].audio_path);
      CHECK(again[i].genre == songs[i].genre);
      CHECK(again[i].raw_annotation == songs[i].raw_annotation);
    }
  }

  TEST_CASE("song manifest errors name the line") {
    const std::string head = "song_id,audio_path,genre,valence_raw,arousal_raw\n";
    const auto dup = [&] { st::parse_song_manifest(head + "a,x.wav,Pop,5,5\nb,y.wav,Pop,5,5\na,z.wav,Pop,5,5\n"); };
    CHECK(code_of(dup) == ErrorCode::parse_error);
    CHECK(message_of(dup).find("line 4") != std::string::npos);
    CHECK(message_of(dup).find("first on line 2") != std::string::npos);
    CHECK(code_of([&] { st::parse_song_manifest(head + "a,x.wav,Polka,5,5\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_song_manifest(head + "a,x.wav,Pop,0,5\n"); }) == ErrorCode::invalid_annotation);
    CHECK(code_of([&] { st::parse_song_manifest(head + "a,x.wav,Pop,5\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_song_manifest(head + "a,x.wav,Pop,five,5\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_song_manifest("id,path\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_song_manifest("# format_version: 2\n" + head); }) == ErrorCode::version_mismatch);
    CHECK(code_of([&] { st::parse_song_manifest(""); }) == ErrorCode::parse_error);
  }

  TEST_CASE("music features round trip and attach") {
    TempDir dir;
    const std::map<std::string, std::vector<double>> feats{{"s1", {0.1, 2.0}}, {"s2", {-3.5, 1e-12}}};
    st::save_music_features(feats, dir.path / "f.json");
    CHECK(st::load_music_features(dir.path / "f.json") == feats);
    auto bad = st::music_features_to_json(feats);
    bad["songs"]["s2"] = {1.0};
    CHECK(code_of([&] { st::music_features_from_json(bad); }) == ErrorCode::validation);
    bad = st::music_features_to_json(feats);
    bad["version"] = 7;
    CHECK(code_of([&] { st::music_features_from_json(bad); }) == ErrorCode::version_mismatch);

    std::vector<SongRecord> songs{make_song("s1", "a", Genre::pop, 5, 5), make_song("s3", "b", Genre::pop, 5, 5)};
    const auto attached = st::attach_features(songs, feats);
    CHECK(attached[0].feature_vector == feats.at("s1"));
    CHECK(!attached[1].feature_vector);
  }

  TEST_CASE("feature cache keys on content and parameters") {
    TempDir dir;
    const auto a = dir.path / "a.wav", b = dir.path / "b.wav";
    st::write_text_atomic(a, "same bytes");
    st::write_text_atomic(b, "same bytes");
    st::FeatureCache cache(dir.path / "cache");
    CHECK(cache.key(a) == cache.key(b));
    CHECK(!cache.lookup(cache.key(a)));
    std::vector<double> values(audio::aggregated_dims);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.1 * static_cast<double>(i) - 3.0;
    cache.store(cache.key(a), values);
    CHECK(cache.lookup(cache.key(b)) == values);
    cache.store("short", {1.0, 2.5});
    CHECK(!cache.lookup("short"));
    audio::FrameParams other;
    other.hop = 256;
    CHECK(st::FeatureCache(dir.path / "cache", other).key(a) != cache.key(a));
    st::write_text_atomic(b, "other bytes");
    CHECK(cache.key(a) != cache.key(b));
  }

  TEST_CASE("WAV reading") {
    const std::vector<double> x{0.0, 0.5, -0.5, 0.25, -1.0};
    const auto round = st::parse_wav(st::format_wav(x, 22050));
    CHECK(round.sample_rate == 22050);
    CHECK(round.channels == 1);
    REQUIRE(round.mono.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(round.mono[i] - x[i]) <= 1.0 / 32768.0);

    const auto stereo = st::parse_wav(wav_bytes({16384, -16384, 8192, 8192}, 2, 44100));
    CHECK(stereo.channels == 2);
    REQUIRE(stereo.mono.size() == 2);
    CHECK(stereo.mono[0] == 0.0);
    CHECK(stereo.mono[1] == 0.25);

    CHECK(code_of([&] { st::parse_wav(wav_bytes({1, 2}, 1, 8000, 8)); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_wav("RIFX"); }) == ErrorCode::parse_error);
    auto truncated = wav_bytes({1, 2, 3, 4}, 1, 8000);
    truncated.resize(truncated.size() - 3);
    CHECK(code_of([&] { st::parse_wav(truncated); }) == ErrorCode::parse_error);
  }

  TEST_CASE("EEG CSV round trip and errors") {
    synthetic::EegConfig ec;
    synthetic::EegUser user(ec);
    user.start_experiment();
    const auto rec = user.record(2.0);
    const auto back = st::parse_eeg_csv(st::format_eeg_csv(rec));
    CHECK(back.channels == rec.channels);
    CHECK(back.samples == rec.samples);

    const auto ts = st::parse_eeg_csv("timestamp,O1,O2\n0.0,1,2\n0.0078125,3,4\n");
    CHECK(ts.channels == std::vector<std::string>{"O1", "O2"});
    CHECK(ts.samples[1] == std::vector<double>{2.0, 4.0});

    CHECK(code_of([&] { st::parse_eeg_csv("O1,XX\n1,2\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_eeg_csv("O1,O1\n1,2\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_eeg_csv("1,2\n3,4\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_eeg_csv(""); }) == ErrorCode::parse_error);
    const auto ragged = [&] { st::parse_eeg_csv("O1,O2\n1,2\n3\n"); };
    CHECK(code_of(ragged) == ErrorCode::parse_error);
    CHECK(message_of(ragged).find("row 2 has 1") != std::string::npos);
    CHECK(code_of([&] { st::parse_eeg_csv("O1,O2\n1,nan\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([&] { st::parse_eeg_csv("O1,O2\n"); }) == ErrorCode::input_too_short);
  }

  TEST_CASE("trial records and session logs") {
    auto t = make_trial(7, "u", 1234, {0.5, -1.25}, "s9", Quadrant::q2, {-1.5, 2.0}, Phase::testing);
    t.iteration_count = 3;
    t.matched = true;
    CHECK(st::trial_from_json(st::trial_to_json(t)) == t);
    const auto training = make_trial(8, "u", 1300, {0.1}, "s1", std::nullopt, {1.0, 1.0}, Phase::training);
    const auto j = st::trial_to_json(training);
    CHECK(j.at("designated_quadrant").is_null());
    CHECK(!j.contains("matched"));
    CHECK(st::trial_from_json(j) == training);

    auto wrong = st::trial_to_json(t);
    wrong["evaluated_quadrant"] = "Q1";
    CHECK(code_of([&] { st::trial_from_json(wrong); }) == ErrorCode::validation);
    auto out_of_range = st::trial_to_json(t);
    out_of_range["evaluated_score"]["valence"] = 6.0;
    CHECK(code_of([&] { st::trial_from_json(out_of_range); }) == ErrorCode::invalid_score);
    auto missing = st::trial_to_json(t);
    missing.erase("song_id");
    CHECK(code_of([&] { st::trial_from_json(missing); }) == ErrorCode::validation);

    TempDir dir;
    const auto log = dir.path / "session.jsonl";
    std::vector<TrialRecord> written;
    for (int i = 0; i < 5; ++i) {
      auto r = make_trial(static_cast<std::uint64_t>(i + 1), "u", i, {1.0 * i}, "s" + std::to_string(i),
                          all_quadrants[static_cast<std::size_t>(i) % 4], {i % 2 ? 1.0 : -1.0, 1.0}, Phase::testing);
      st::append_session_log(r, log);
      written.push_back(r);
    }
    const auto replay = st::load_session_log(log);
    CHECK(replay == written);
    CHECK(match_rate(replay) == match_rate(written));
    const auto bad_line = [&] { st::parse_session_log(st::trial_to_line(t) + "\n{oops\n"); };
    CHECK(code_of(bad_line) == ErrorCode::parse_error);
    CHECK(message_of(bad_line).find("line 2") != std::string::npos);
  }

  TEST_CASE("model bundle round trip and integrity") {
    const auto fx = fixture::trained();
    TempDir dir;
    const auto path = dir.path / "model.json";
    st::save_model_bundle(fx.models, path);
    const auto loaded = st::load_model_bundle(path);
    CHECK(loaded.user_id == fx.models.user_id);
    CHECK(loaded.arousal == fx.models.arousal);
    CHECK(loaded.valence == fx.models.valence);
    CHECK(loaded.music == fx.models.music);
    CHECK(loaded.digest == fx.models.digest);
    CHECK(st::format_model_bundle(loaded) == st::read_text(path));

    const ModelPredictor a(fx.models, fx.lib), b(loaded, fx.lib);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> eeg(40);
      for (double& v : eeg) v = rng.normal(1.0, 0.5);
      const auto& song = fx.lib.songs()[rng.uniform_index(fx.lib.size())];
      CHECK(a.predict(eeg, song) == b.predict(eeg, song));
    }

    auto doc = st::json::parse(st::read_text(path));
    doc["payload"]["user_id"] = "mallory";
    CHECK(code_of([&] { st::parse_model_bundle(doc.dump()); }) == ErrorCode::checksum_mismatch);
    doc = st::json::parse(st::read_text(path));
    doc["version"] = 2;
    CHECK(code_of([&] { st::parse_model_bundle(doc.dump()); }) == ErrorCode::version_mismatch);

    // A consistent checksum over an inconsistent payload still fails validation.
    auto payload = st::model_to_json(fx.models);
    payload["arousal"]["weights"].push_back(0.5);
    st::json forged = {{"format", "emoreg-model-bundle"},
                       {"version", 1},
                       {"checksum", "sha256:" + st::sha256_hex(payload.dump())},
                       {"payload", payload}};
    CHECK(code_of([&] { st::parse_model_bundle(forged.dump()); }) == ErrorCode::validation);
    CHECK(code_of([&] { st::parse_model_bundle("{}"); }) == ErrorCode::validation);
    CHECK(code_of([&] { st::parse_model_bundle("not json"); }) == ErrorCode::parse_error);
  }

  TEST_CASE("music pipeline round trip") {
    const auto lib = fixture::library();
    const auto p = build_music_pipeline(lib, {4, 2});
    CHECK(p.output_dims() == 4);
    TempDir dir;
    st::save_music_pipeline(p, dir.path / "music.json");
    const auto q = st::load_music_pipeline(dir.path / "music.json");
    CHECK(q == p);
    for (const auto& s : lib.songs()) CHECK(q.transform(*s.feature_vector) == p.transform(*s.feature_vector));
  }
}
