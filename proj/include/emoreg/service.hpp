#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "emoreg/error.hpp"
#include "emoreg/library.hpp"
#include "emoreg/session.hpp"
#include "emoreg/training.hpp"

namespace emoreg {

struct ServiceConfig {
  std::filesystem::path audio_root;   // song audio_path values resolve against this
  std::filesystem::path replay_root;  // EEG replay references resolve against this
  std::filesystem::path log_dir;      // one <session_id>.jsonl per session; empty = no logs
  std::chrono::seconds idle_timeout{30 * 60};
  std::uint64_t seed = 0;             // session ids and default session seeds
  int window_seconds = 2;
  // Seconds since the epoch; replaceable so tests can advance time.
  std::function<std::int64_t()> clock;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Session protocol over HTTP-shaped requests. handle() holds the routing and
// status mapping; serve() binds it to a listening socket. Sessions expire
// after idle_timeout without requests.
class SessionService {
 public:
  // models may be null; testing and real-life sessions then fail to start.
  SessionService(const SongLibrary& library, const VAModelPair* models, ServiceConfig config);
  ~SessionService();

  HttpResponse handle(const HttpRequest& request);

  // Blocks until stop() is called from another thread. port 0 picks a free
  // port, reported through on_listen before accepting connections.
  void serve(const std::string& host, int port, const std::function<void(int)>& on_listen = {});
  void stop();

  std::size_t session_count();

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
    std::int64_t last_seen = 0;
    std::filesystem::path log_path;
  };

  std::int64_t now() const;
  void expire_idle(std::int64_t now);
  std::shared_ptr<Entry> find(const std::string& id);

  nlohmann::json start(const nlohmann::json& body);
  nlohmann::json session_call(Entry& entry, const std::string& action, const nlohmann::json& body);
  HttpResponse audio(const std::string& song_id) const;

  const SongLibrary& library_;
  const VAModelPair* models_;
  std::unique_ptr<ModelPredictor> predictor_;
  ServiceConfig config_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
  struct Server;
  std::unique_ptr<Server> server_;
};

// HTTP status for a library error code.
int http_status(ErrorCode code);

}  // namespace emoreg
