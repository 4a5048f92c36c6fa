#include "emoreg/service.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include <httplib.h>

#include "emoreg/error.hpp"
#include "emoreg/random.hpp"
#include "emoreg/storage.hpp"

namespace emoreg {

using nlohmann::json;
namespace fs = std::filesystem;

struct SessionService::Server {
  httplib::Server http;
};

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error:
      return 400;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::protocol_order:
      return 409;
    case ErrorCode::io_error:
      return 500;
    default:
      return 422;
  }
}

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(ErrorCode code, const std::string& message) {
  return json_response(http_status(code), {{"error", to_string(code)}, {"message", message}});
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::parse_error, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T field(const json& body, const char* name) {
  if (!body.contains(name)) throw Error(ErrorCode::validation, std::string("missing field '") + name + "'");
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::validation, std::string("field '") + name + "' has the wrong type");
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stats_json(const SessionStats& s) {
  return {{"trial_count", s.trial_count},
          {"match_rate", optional_json(s.match_rate)},
          {"t_arousal", optional_json(s.t_arousal)},
          {"t_valence", optional_json(s.t_valence)}};
}

std::string session_id(std::uint64_t seed, std::uint64_t counter) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix_seed(seed, counter)));
  return buf;
}

// Resolves a client-supplied relative path, refusing anything outside root.
fs::path resolve_under(const fs::path& root, const std::string& ref) {
  if (root.empty()) throw Error(ErrorCode::config_error, "no replay directory configured");
  const fs::path rel(ref);
  if (rel.is_absolute()) throw Error(ErrorCode::validation, "replay reference must be relative");
  const auto base = fs::weakly_canonical(root);
  const auto full = fs::weakly_canonical(base / rel);
  const auto [b, f] = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
  if (b != base.end()) throw Error(ErrorCode::validation, "replay reference leaves the replay directory");
  if (!fs::is_regular_file(full)) throw Error(ErrorCode::not_found, "replay file '" + ref + "' not found");
  return full;
}

}  // namespace

SessionService::SessionService(const SongLibrary& library, const VAModelPair* models, ServiceConfig config)
    : library_(library), models_(models), config_(std::move(config)), server_(std::make_unique<Server>()) {
  if (models_) predictor_ = std::make_unique<ModelPredictor>(*models_, library_);
  if (!config_.clock) {
    config_.clock = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (!config_.log_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.log_dir, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create log directory '" + config_.log_dir.string() + "'");
  }
}

SessionService::~SessionService() = default;

std::int64_t SessionService::now() const { return config_.clock(); }

std::size_t SessionService::session_count() {
  std::lock_guard lock(mutex_);
  expire_idle(now());
  return sessions_.size();
}

void SessionService::expire_idle(std::int64_t t) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (t - it->second->last_seen >= config_.idle_timeout.count()) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto t = now();
  expire_idle(t);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown or expired session '" + id + "'");
  it->second->last_seen = t;
  return it->second;
}

json SessionService::start(const json& body) {
  SessionConfig sc;
  sc.user_id = field<std::string>(body, "user_id");
  if (sc.user_id.empty()) throw Error(ErrorCode::validation, "user_id must not be empty");
  sc.phase = parse_phase(body.contains("phase") ? field<std::string>(body, "phase") : "testing");
  sc.window_seconds = config_.window_seconds;
  if (models_) sc.montage = models_->montage;

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(mutex_);
    const auto t = now();
    expire_idle(t);
    do {
      id = session_id(config_.seed, ++counter_);
    } while (sessions_.count(id));
    sc.seed = body.contains("seed") ? field<std::uint64_t>(body, "seed") : mix_seed(config_.seed, counter_);
    const EmotionPredictor* predictor = sc.phase == Phase::training ? nullptr : predictor_.get();
    if (sc.phase != Phase::training && !predictor) {
      throw Error(ErrorCode::config_error, "no trained model loaded; only training sessions are available");
    }
    entry->session = std::make_unique<Session>(sc, library_, predictor);
    entry->last_seen = t;
    if (!config_.log_dir.empty()) entry->log_path = config_.log_dir / (id + ".jsonl");
    sessions_.emplace(id, entry);
  }
  return {{"session_id", id},
          {"user_id", sc.user_id},
          {"phase", to_string(sc.phase)},
          {"seed", sc.seed},
          {"idle_timeout_seconds", config_.idle_timeout.count()}};
}

json SessionService::session_call(Entry& entry, const std::string& action, const json& body) {
  std::lock_guard lock(entry.mutex);
  Session& s = *entry.session;
  if (action == "designate") {
    const auto q = parse_quadrant(field<std::string>(body, "quadrant"));
    s.designate(q);
    return {{"designated_quadrant", to_string(q)}};
  }
  if (action == "eeg") {
    const int given = static_cast<int>(body.contains("csv")) + static_cast<int>(body.contains("replay")) +
                      static_cast<int>(body.contains("features"));
    if (given != 1) throw Error(ErrorCode::validation, "give exactly one of 'csv', 'replay' or 'features'");
    std::string source;
    if (body.contains("features")) {
      s.submit_eeg_features(field<std::vector<double>>(body, "features"));
      source = "features";
    } else if (body.contains("csv")) {
      s.submit_eeg(storage::parse_eeg_csv(field<std::string>(body, "csv")));
      source = "csv";
    } else {
      s.submit_eeg(storage::load_eeg_csv(resolve_under(config_.replay_root, field<std::string>(body, "replay"))));
      source = "replay";
    }
    return {{"accepted", true}, {"source", source}, {"feature_count", s.state().current_eeg_features->size()}};
  }
  if (action == "queue") {
    s.queue_song(field<std::string>(body, "song_id"));
    return {{"queued", s.state().playlist.size()}};
  }
  if (action == "next") {
    const auto& p = s.next_song();
    json out{{"song_id", p.song_id}, {"audio_url", "/audio/" + p.song_id}};
    out["iteration_count"] = p.iteration_count ? json(*p.iteration_count) : json(nullptr);
    out["matched"] = p.matched ? json(*p.matched) : json(nullptr);
    return out;
  }
  if (action == "report") {
    const VAScore score{field<double>(body, "valence"), field<double>(body, "arousal")};
    const auto ts = body.contains("timestamp") ? field<std::int64_t>(body, "timestamp") : now();
    const auto& record = s.report(score, ts);
    if (!entry.log_path.empty()) storage::append_session_log(record, entry.log_path);
    return storage::trial_to_json(record);
  }
  if (action == "state") {
    const auto& st = s.state();
    json out{{"user_id", st.user_id},
             {"phase", to_string(st.phase)},
             {"designated_quadrant", st.designated_quadrant ? json(to_string(*st.designated_quadrant)) : json(nullptr)},
             {"has_eeg", st.current_eeg_features.has_value()},
             {"pending_song", s.pending() ? json(s.pending()->song_id) : json(nullptr)},
             {"played", st.played},
             {"queued", std::vector<std::string>(st.playlist.begin(), st.playlist.end())},
             {"trial_count", st.trial_log.size()}};
    return out;
  }
  if (action == "stats") return stats_json(s.stats());
  throw Error(ErrorCode::not_found, "no route for '" + action + "'");
}

HttpResponse SessionService::audio(const std::string& song_id) const {
  const auto& song = library_.at(song_id);
  const fs::path p = fs::path(song.audio_path).is_absolute() ? fs::path(song.audio_path)
                                                              : config_.audio_root / song.audio_path;
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::not_found, "audio for '" + song_id + "' is not available");
  const auto ext = p.extension().string();
  const std::string type = ext == ".wav" ? "audio/wav" : ext == ".mp3" ? "audio/mpeg" : "application/octet-stream";
  return {200, type, storage::read_text(p)};
}

HttpResponse SessionService::handle(const HttpRequest& request) {
  static const std::regex session_route(R"(^/session/([0-9a-f]+)/(designate|eeg|queue|next|report|state)$)");
  static const std::regex audio_route(R"(^/audio/([^/]+)$)");
  try {
    std::smatch m;
    const auto& path = request.path;
    if (path == "/session/start") {
      if (request.method != "POST") return error_response(ErrorCode::not_found, "use POST " + path);
      return json_response(201, start(parse_body(request.body)));
    }
    if (std::regex_match(path, m, session_route)) {
      const std::string action = m[2];
      const bool is_get = action == "state";
      if (request.method != (is_get ? "GET" : "POST")) {
        return error_response(ErrorCode::not_found, std::string("use ") + (is_get ? "GET " : "POST ") + path);
      }
      const auto body = parse_body(request.body);
      auto entry = find(m[1]);
      return json_response(200, session_call(*entry, action, body));
    }
    if (path == "/stats") {
      if (request.method != "GET") return error_response(ErrorCode::not_found, "use GET /stats");
      const auto it = request.query.find("session_id");
      if (it == request.query.end()) throw Error(ErrorCode::validation, "missing query parameter 'session_id'");
      auto entry = find(it->second);
      return json_response(200, session_call(*entry, "stats", json::object()));
    }
    if (std::regex_match(path, m, audio_route)) {
      if (request.method != "GET") return error_response(ErrorCode::not_found, "use GET " + path);
      return audio(m[1]);
    }
    return error_response(ErrorCode::not_found, "no route for " + request.method + " " + path);
  } catch (const Error& e) {
    return error_response(e.code(), e.detail());
  } catch (const std::exception& e) {
    return json_response(500, {{"error", "internal"}, {"message", e.what()}});
  }
}

void SessionService::serve(const std::string& host, int port, const std::function<void(int)>& on_listen) {
  auto& http = server_->http;
  auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  const std::string any = R"(/.*)";
  http.Get(any, adapter);
  http.Post(any, adapter);
  const int bound = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  if (on_listen) on_listen(bound);
  http.listen_after_bind();
}

void SessionService::stop() { server_->http.stop(); }

}  // namespace emoreg
