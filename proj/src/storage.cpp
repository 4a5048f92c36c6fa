#include "emoreg/storage.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "emoreg/error.hpp"

namespace emoreg::storage {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Lines without their terminators, numbered from 1.
std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double parse_number(std::string_view cell, std::size_t line, std::string_view what) {
  const auto t = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::parse_error,
                at_line(line) + std::string(what) + " '" + std::string(t) + "' is not a finite number");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::validation, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, std::string("field '") + key + "': " + e.what());
  }
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---- hashing ---------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io_error, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

// ---- text files ------------------------------------------------------------

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed for '" + path.string() + "'");
  return ss.str();
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot replace '" + path.string() + "'");
  }
}

// ---- song manifest ---------------------------------------------------------

std::vector<SongRecord> parse_song_manifest(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<SongRecord> songs;
  std::unordered_map<std::string, std::size_t> seen;  // id -> line
  bool header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      if (body.starts_with("format_version")) {
        body = trim(body.substr(std::strlen("format_version")));
        if (!body.empty() && (body.front() == ':' || body.front() == '=')) body = trim(body.substr(1));
        if (parse_number(body, ln, "format version") != format_version) {
          throw Error(ErrorCode::version_mismatch, at_line(ln) + "unsupported manifest format version " +
                                                       std::string(body));
        }
      }
      continue;
    }
    if (!header) {
      if (line != manifest_header) {
        throw Error(ErrorCode::parse_error, at_line(ln) + "expected header '" + std::string(manifest_header) + "'");
      }
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 5) {
      throw Error(ErrorCode::parse_error, at_line(ln) + "expected 5 fields, got " + std::to_string(cells.size()));
    }
    const std::string id(trim(cells[0]));
    if (id.empty()) throw Error(ErrorCode::parse_error, at_line(ln) + "empty song_id");
    if (const auto it = seen.find(id); it != seen.end()) {
      throw Error(ErrorCode::parse_error, at_line(ln) + "duplicate song_id '" + id + "' (first on line " +
                                              std::to_string(it->second) + ")");
    }
    seen.emplace(id, ln);
    Genre genre;
    try {
      genre = parse_genre(trim(cells[2]));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, at_line(ln) + "unknown genre '" + std::string(trim(cells[2])) + "'");
    }
    const double v = parse_number(cells[3], ln, "valence_raw");
    const double a = parse_number(cells[4], ln, "arousal_raw");
    try {
      songs.push_back(make_song(id, std::string(trim(cells[1])), genre, v, a));
    } catch (const Error& e) {
      throw Error(e.code(), at_line(ln) + "song '" + id + "': annotation outside [1, 9]");
    }
  }
  if (!header) throw Error(ErrorCode::parse_error, "manifest has no header");
  return songs;
}

std::vector<SongRecord> load_song_manifest(const fs::path& path) {
  try {
    return parse_song_manifest(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string format_song_manifest(std::span<const SongRecord> songs) {
  std::string out = "# format_version: 1\n";
  out += manifest_header;
  out += '\n';
  for (const auto& s : songs) {
    out += s.song_id + ',' + s.audio_path + ',' + std::string(to_string(s.genre)) + ',' +
           format_number(s.raw_annotation.valence) + ',' + format_number(s.raw_annotation.arousal) + '\n';
  }
  return out;
}

// ---- music feature file ----------------------------------------------------

json music_features_to_json(const std::map<std::string, std::vector<double>>& features) {
  json songs = json::object();
  std::size_t dims = 0;
  for (const auto& [id, v] : features) {
    songs[id] = v;
    dims = v.size();
  }
  return {{"format", "emoreg-music-features"}, {"version", format_version}, {"dims", dims}, {"songs", songs}};
}

std::map<std::string, std::vector<double>> music_features_from_json(const json& doc) {
  if (get<std::string>(doc, "format") != "emoreg-music-features") {
    throw Error(ErrorCode::validation, "not a music feature file");
  }
  if (get<int>(doc, "version") != format_version) {
    throw Error(ErrorCode::version_mismatch, "unsupported music feature file version");
  }
  const auto dims = get<std::size_t>(doc, "dims");
  auto out = get<std::map<std::string, std::vector<double>>>(doc, "songs");
  for (const auto& [id, v] : out) {
    if (v.size() != dims) throw Error(ErrorCode::validation, "song '" + id + "' has the wrong feature count");
  }
  return out;
}

void save_music_features(const std::map<std::string, std::vector<double>>& features, const fs::path& path) {
  write_text_atomic(path, music_features_to_json(features).dump() + "\n");
}

std::map<std::string, std::vector<double>> load_music_features(const fs::path& path) {
  return music_features_from_json(parse_json(read_text(path), path.string()));
}

std::vector<SongRecord> attach_features(std::vector<SongRecord> songs,
                                        const std::map<std::string, std::vector<double>>& features) {
  for (auto& s : songs) {
    if (const auto it = features.find(s.song_id); it != features.end()) s.feature_vector = it->second;
  }
  return songs;
}

// ---- feature cache ---------------------------------------------------------

FeatureCache::FeatureCache(fs::path dir, audio::FrameParams params)
    : dir_(std::move(dir)), params_hash_(parameter_hash(params)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create cache directory '" + dir_.string() + "'");
}

std::string FeatureCache::parameter_hash(const audio::FrameParams& params) {
  const std::string desc = "emoreg-audio-v1;sr=" + std::to_string(params.sample_rate) +
                           ";win=" + std::to_string(params.window) + ";hop=" + std::to_string(params.hop) +
                           ";dims=" + std::to_string(audio::aggregated_dims);
  return sha256_hex(desc);
}

std::string FeatureCache::key(const fs::path& audio_file) const {
  return sha256_file(audio_file) + "-" + params_hash_.substr(0, 16);
}

std::optional<std::vector<double>> FeatureCache::lookup(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  if (!fs::exists(path)) return std::nullopt;
  try {
    auto v = parse_json(read_text(path), path.string()).at("values").get<std::vector<double>>();
    if (v.size() != audio::aggregated_dims) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

void FeatureCache::store(const std::string& key, const std::vector<double>& values) const {
  write_text_atomic(dir_ / (key + ".json"), json{{"values", values}}.dump() + "\n");
}

// ---- audio -----------------------------------------------------------------

namespace {

std::uint32_t le32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

PcmAudio parse_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    throw Error(ErrorCode::parse_error, "not a RIFF/WAVE file");
  }
  PcmAudio out;
  int bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const auto id = b.substr(pos, 4);
    const std::size_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw Error(ErrorCode::parse_error, "truncated WAV chunk");
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorCode::parse_error, "short fmt chunk");
      const auto format = le16(b, body);
      out.channels = le16(b, body + 2);
      out.sample_rate = static_cast<int>(le32(b, body + 4));
      bits = le16(b, body + 14);
      if ((format != 1 && format != 0xFFFE) || bits != 16 || out.channels < 1) {
        throw Error(ErrorCode::parse_error, "only 16-bit PCM WAV is supported");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(ErrorCode::parse_error, "WAV data chunk before fmt chunk");
      const std::size_t ch = static_cast<std::size_t>(out.channels);
      const std::size_t frames = size / (2 * ch);
      out.mono.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < ch; ++c) {
          sum += static_cast<std::int16_t>(le16(b, body + 2 * (f * ch + c))) / 32768.0;
        }
        out.mono[f] = sum / static_cast<double>(ch);
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorCode::parse_error, "WAV file has no data chunk");
}

PcmAudio load_wav(const fs::path& path) {
  try {
    return parse_wav(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string format_wav(std::span<const double> mono, int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(mono.size() * 2);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double v : mono) {
    const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
  }
  return out;
}

void save_wav(std::span<const double> mono, int sample_rate, const fs::path& path) {
  write_text_atomic(path, format_wav(mono, sample_rate));
}

// ---- EEG CSV ---------------------------------------------------------------

eeg::Recording parse_eeg_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(ErrorCode::parse_error, "EEG file is empty; missing header");

  const auto header = split(lines[first], ',');
  std::vector<std::string> channels;
  std::vector<std::size_t> columns;
  std::set<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    if (lower(name) == "timestamp") continue;
    if (std::find(eeg::emotiv_channels.begin(), eeg::emotiv_channels.end(), name) == eeg::emotiv_channels.end()) {
      throw Error(ErrorCode::parse_error, at_line(first + 1) + (name.empty() || std::isdigit(static_cast<unsigned char>(name[0])) || name[0] == '-'
                                                                    ? "missing header of channel labels"
                                                                    : "unknown channel label '" + name + "'"));
    }
    if (!names.insert(name).second) {
      throw Error(ErrorCode::parse_error, at_line(first + 1) + "duplicate channel '" + name + "'");
    }
    channels.push_back(name);
    columns.push_back(c);
  }
  if (channels.empty()) throw Error(ErrorCode::parse_error, at_line(first + 1) + "header names no channels");

  std::vector<std::vector<double>> samples(channels.size());
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::parse_error, at_line(i + 1) + "row " + std::to_string(i - first) + " has " +
                                              std::to_string(cells.size()) + " fields, header has " +
                                              std::to_string(header.size()));
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
      samples[k].push_back(parse_number(cells[columns[k]], i + 1, channels[k]));
    }
  }
  if (samples.front().empty()) throw Error(ErrorCode::input_too_short, "EEG file has no samples");
  return eeg::make_recording(std::move(channels), std::move(samples));
}

eeg::Recording load_eeg_csv(const fs::path& path) {
  try {
    return parse_eeg_csv(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string format_eeg_csv(const eeg::Recording& rec) {
  std::string out;
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    if (c) out += ',';
    out += rec.channels[c];
  }
  out += '\n';
  for (std::size_t i = 0; i < rec.length(); ++i) {
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
      if (c) out += ',';
      out += format_number(rec.samples[c][i]);
    }
    out += '\n';
  }
  return out;
}

void save_eeg_csv(const eeg::Recording& rec, const fs::path& path) { write_text_atomic(path, format_eeg_csv(rec)); }

// ---- trial records / session logs -----------------------------------------

json trial_to_json(const TrialRecord& t) {
  json j = {{"trial_id", t.trial_id},
            {"user_id", t.user_id},
            {"timestamp", t.timestamp},
            {"eeg_features", t.eeg_features},
            {"song_id", t.song_id},
            {"designated_quadrant", nullptr},
            {"evaluated_score", {{"valence", t.evaluated_score.valence}, {"arousal", t.evaluated_score.arousal}}},
            {"evaluated_quadrant", to_string(t.evaluated_quadrant)},
            {"phase", to_string(t.phase)}};
  if (t.designated_quadrant) j["designated_quadrant"] = to_string(*t.designated_quadrant);
  if (t.iteration_count) j["iteration_count"] = *t.iteration_count;
  if (t.matched) j["matched"] = *t.matched;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "trial record must be a JSON object");
  const auto& score = j.contains("evaluated_score") ? j.at("evaluated_score") : json();
  std::optional<Quadrant> designated;
  if (j.contains("designated_quadrant") && !j.at("designated_quadrant").is_null()) {
    designated = parse_quadrant(get<std::string>(j, "designated_quadrant"));
  }
  auto t = make_trial(get<std::uint64_t>(j, "trial_id"), get<std::string>(j, "user_id"),
                      get<std::int64_t>(j, "timestamp"), get<std::vector<double>>(j, "eeg_features"),
                      get<std::string>(j, "song_id"), designated,
                      make_score(get<double>(score, "valence"), get<double>(score, "arousal")),
                      parse_phase(get<std::string>(j, "phase")));
  if (parse_quadrant(get<std::string>(j, "evaluated_quadrant")) != t.evaluated_quadrant) {
    throw Error(ErrorCode::validation, "evaluated_quadrant disagrees with evaluated_score");
  }
  for (double v : t.eeg_features) {
    if (!std::isfinite(v)) throw Error(ErrorCode::validation, "EEG features must be finite");
  }
  if (j.contains("iteration_count")) t.iteration_count = get<int>(j, "iteration_count");
  if (j.contains("matched")) t.matched = get<bool>(j, "matched");
  return t;
}

std::string trial_to_line(const TrialRecord& t) { return trial_to_json(t).dump(); }

void append_session_log(const TrialRecord& record, const fs::path& path) {
  const std::string line = trial_to_line(record) + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "': " + std::strerror(errno));
  const ssize_t written = ::write(fd, line.data(), line.size());
  const int saved = errno;
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size())) {
    throw Error(ErrorCode::io_error, "append to '" + path.string() + "' failed: " +
                                         (written < 0 ? std::strerror(saved) : "short write"));
  }
}

std::vector<TrialRecord> parse_session_log(std::string_view text) {
  std::vector<TrialRecord> out;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      out.push_back(trial_from_json(parse_json(lines[i], "session log")));
    } catch (const Error& e) {
      throw Error(e.code(), at_line(i + 1) + e.detail());
    }
  }
  return out;
}

std::vector<TrialRecord> load_session_log(const fs::path& path) {
  try {
    return parse_session_log(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

// ---- model bundle ----------------------------------------------------------

namespace {

json scaler_to_json(const FeatureScaler& s) {
  return {{"scheme", s.scheme == ScalingScheme::min_max ? "min_max" : "z_score"},
          {"offset", s.offset},
          {"spread", s.spread},
          {"clamp_limit", s.clamp_limit}};
}

FeatureScaler scaler_from_json(const json& j) {
  FeatureScaler s;
  const auto scheme = get<std::string>(j, "scheme");
  if (scheme == "min_max") s.scheme = ScalingScheme::min_max;
  else if (scheme == "z_score") s.scheme = ScalingScheme::z_score;
  else throw Error(ErrorCode::validation, "unknown scaling scheme '" + scheme + "'");
  s.offset = get<std::vector<double>>(j, "offset");
  s.spread = get<std::vector<double>>(j, "spread");
  s.clamp_limit = get<double>(j, "clamp_limit");
  if (s.offset.size() != s.spread.size()) throw Error(ErrorCode::validation, "scaler offset/spread length differ");
  return s;
}

json sbs_to_json(const SbsResult& r) {
  json trace = json::array();
  for (const auto& step : r.trace) trace.push_back(json::array({step.removed, step.score}));
  return {{"selected", r.selected}, {"trace", trace}, {"final_score", r.final_score}};
}

SbsResult sbs_from_json(const json& j) {
  SbsResult r;
  r.selected = get<std::vector<std::size_t>>(j, "selected");
  for (const auto& step : get<json>(j, "trace")) {
    if (!step.is_array() || step.size() != 2) throw Error(ErrorCode::validation, "malformed selection trace");
    r.trace.push_back({step[0].get<std::size_t>(), step[1].get<double>()});
  }
  r.final_score = get<double>(j, "final_score");
  if (!std::is_sorted(r.selected.begin(), r.selected.end()) ||
      std::adjacent_find(r.selected.begin(), r.selected.end()) != r.selected.end()) {
    throw Error(ErrorCode::validation, "selected indices must be strictly ascending");
  }
  return r;
}

CvResult cv_from_json(const json& j) {
  return {get<std::vector<double>>(j, "fold_accuracy"), get<double>(j, "mean"), get<double>(j, "stddev")};
}

json axis_to_json(const AxisModel& m) {
  return {{"weights", m.svm.weights},
          {"bias", m.svm.bias},
          {"cost_positive", m.svm.cost_positive},
          {"cost_negative", m.svm.cost_negative},
          {"c", m.svm.c},
          {"epochs", m.svm.epochs},
          {"converged", m.svm.converged},
          {"selection", sbs_to_json(m.selection)},
          {"cv", cv_to_json(m.cv)}};
}

AxisModel axis_from_json(const json& j, std::string_view name, std::size_t combined_dims) {
  AxisModel m;
  m.svm.weights = get<std::vector<double>>(j, "weights");
  m.svm.bias = get<double>(j, "bias");
  m.svm.cost_positive = get<double>(j, "cost_positive");
  m.svm.cost_negative = get<double>(j, "cost_negative");
  m.svm.c = get<double>(j, "c");
  m.svm.epochs = get<int>(j, "epochs");
  m.svm.converged = get<bool>(j, "converged");
  m.selection = sbs_from_json(get<json>(j, "selection"));
  m.cv = cv_from_json(get<json>(j, "cv"));
  if (m.selection.selected.size() != m.svm.weights.size()) {
    throw Error(ErrorCode::validation, std::string(name) + " model has " +
                                           std::to_string(m.selection.selected.size()) + " selected features but " +
                                           std::to_string(m.svm.weights.size()) + " weights");
  }
  if (!m.selection.selected.empty() && m.selection.selected.back() >= combined_dims) {
    throw Error(ErrorCode::validation, std::string(name) + " model selects an index beyond the feature vector");
  }
  for (double w : m.svm.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::validation, std::string(name) + " model has non-finite weights");
  }
  return m;
}

std::vector<std::size_t> index_list(const json& j, const char* key) { return get<std::vector<std::size_t>>(j, key); }

}  // namespace

json cv_to_json(const CvResult& cv) {
  return {{"fold_accuracy", cv.fold_accuracy}, {"mean", cv.mean}, {"stddev", cv.stddev}};
}

json reduction_to_json(const audio::ReductionReport& r) {
  return {{"kept_indices", r.kept_indices},
          {"dropped_constant", r.dropped_constant},
          {"dropped_quasi_constant", r.dropped_quasi_constant},
          {"dropped_correlated", r.dropped_correlated}};
}

json music_pipeline_to_json(const MusicPipeline& p) {
  return {{"input_dims", p.input_dims},
          {"reduction", reduction_to_json(p.reduction)},
          {"scaler", scaler_to_json(p.scaler)},
          {"selection", sbs_to_json(p.selection)}};
}

MusicPipeline music_pipeline_from_json(const json& j) {
  MusicPipeline p;
  p.input_dims = get<std::size_t>(j, "input_dims");
  const auto& r = get<json>(j, "reduction");
  p.reduction.kept_indices = index_list(r, "kept_indices");
  p.reduction.dropped_constant = index_list(r, "dropped_constant");
  p.reduction.dropped_quasi_constant = index_list(r, "dropped_quasi_constant");
  p.reduction.dropped_correlated = index_list(r, "dropped_correlated");
  p.scaler = scaler_from_json(get<json>(j, "scaler"));
  p.selection = sbs_from_json(get<json>(j, "selection"));
  for (std::size_t i : p.reduction.kept_indices) {
    if (i >= p.input_dims) throw Error(ErrorCode::validation, "kept music index beyond input width");
  }
  if (p.scaler.dims() != p.reduction.kept_indices.size()) {
    throw Error(ErrorCode::validation, "music scaler width differs from the kept column count");
  }
  if (!p.selection.selected.empty() && p.selection.selected.back() >= p.scaler.dims()) {
    throw Error(ErrorCode::validation, "music selection index beyond the kept columns");
  }
  return p;
}

void save_music_pipeline(const MusicPipeline& p, const fs::path& path) {
  const json doc = {{"format", "emoreg-music-pipeline"}, {"version", format_version},
                    {"pipeline", music_pipeline_to_json(p)}};
  write_text_atomic(path, doc.dump(2) + "\n");
}

MusicPipeline load_music_pipeline(const fs::path& path) {
  const auto doc = parse_json(read_text(path), path.string());
  if (get<std::string>(doc, "format") != "emoreg-music-pipeline") {
    throw Error(ErrorCode::validation, path.string() + ": not a music pipeline file");
  }
  if (get<int>(doc, "version") != format_version) {
    throw Error(ErrorCode::version_mismatch, path.string() + ": unsupported music pipeline version");
  }
  return music_pipeline_from_json(get<json>(doc, "pipeline"));
}

json model_to_json(const VAModelPair& m) {
  return {{"user_id", m.user_id},
          {"created_at", m.created_at},
          {"montage", m.montage == eeg::Montage::full14 ? "full14" : "t7t8"},
          {"eeg_scaler", scaler_to_json(m.eeg_scaler)},
          {"music", music_pipeline_to_json(m.music)},
          {"arousal", axis_to_json(m.arousal)},
          {"valence", axis_to_json(m.valence)},
          {"training_digest", {{"count", m.digest.count}, {"sha256", m.digest.sha256}}}};
}

VAModelPair model_from_json(const json& j) {
  VAModelPair m;
  m.user_id = get<std::string>(j, "user_id");
  m.created_at = get<std::string>(j, "created_at");
  const auto montage = get<std::string>(j, "montage");
  if (montage == "full14") m.montage = eeg::Montage::full14;
  else if (montage == "t7t8") m.montage = eeg::Montage::temporal_t7t8;
  else throw Error(ErrorCode::validation, "unknown montage '" + montage + "'");
  m.eeg_scaler = scaler_from_json(get<json>(j, "eeg_scaler"));
  if (m.eeg_scaler.dims() != eeg::feature_count(m.montage)) {
    throw Error(ErrorCode::validation, "EEG scaler width does not match the montage");
  }
  m.music = music_pipeline_from_json(get<json>(j, "music"));
  const std::size_t combined = m.eeg_dims() + m.music.output_dims();
  m.arousal = axis_from_json(get<json>(j, "arousal"), "arousal", combined);
  m.valence = axis_from_json(get<json>(j, "valence"), "valence", combined);
  const auto& d = get<json>(j, "training_digest");
  m.digest = {get<std::size_t>(d, "count"), get<std::string>(d, "sha256")};
  return m;
}

std::string format_model_bundle(const VAModelPair& models) {
  const json payload = model_to_json(models);
  const json doc = {{"format", "emoreg-model-bundle"},
                    {"version", format_version},
                    {"checksum", "sha256:" + sha256_hex(payload.dump())},
                    {"payload", payload}};
  return doc.dump(2) + "\n";
}

VAModelPair parse_model_bundle(std::string_view text) {
  const auto doc = parse_json(text, "model bundle");
  if (!doc.is_object() || get<std::string>(doc, "format") != "emoreg-model-bundle") {
    throw Error(ErrorCode::validation, "not a model bundle");
  }
  const int version = get<int>(doc, "version");
  if (version != format_version) {
    throw Error(ErrorCode::version_mismatch, "bundle version " + std::to_string(version) + " is not supported (expected " +
                                                 std::to_string(format_version) + ")");
  }
  const auto& payload = get<json>(doc, "payload");
  if (get<std::string>(doc, "checksum") != "sha256:" + sha256_hex(payload.dump())) {
    throw Error(ErrorCode::checksum_mismatch, "bundle payload does not match its checksum");
  }
  return model_from_json(payload);
}

void save_model_bundle(const VAModelPair& models, const fs::path& path) {
  write_text_atomic(path, format_model_bundle(models));
}

VAModelPair load_model_bundle(const fs::path& path) {
  try {
    return parse_model_bundle(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace emoreg::storage
