#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "tpis/pipeline.h"

namespace httplib {
class Server;
}

namespace tpis {

struct ServiceOptions {
  double session_ttl_seconds = 900.0;
  std::size_t max_sessions = 10000;
  // Seconds on a monotonic clock; replaceable in tests.
  std::function<double()> clock;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// Request handling for the triage API, independent of the transport.
//
//   GET  /health    {"status": "ok", "model_loaded": bool}
//   GET  /v1/model  model metadata; 503 without a model
//   POST /v1/step1  body: the 18 step-1 fields by name (number or null)
//   POST /v1/step2  body: {"session_id": s} or {"meta2": [...]}, plus
//                   "features": the 10 step-2 fields by name
//
// Errors come back as {"error": message} with 400 (bad body; the message
// names the missing or unexpected fields), 404 (unknown route or session)
// or 503 (no model loaded).
class TriageService {
 public:
  explicit TriageService(ServiceOptions options = {});

  // Replaces the served model; in-flight requests finish on the old one.
  // Sessions from the previous model are dropped.
  void SetModel(std::shared_ptr<const TpisModel> model);
  std::shared_ptr<const TpisModel> model() const;

  ServiceResponse Handle(std::string_view method, std::string_view path, std::string_view body);

  ServiceResponse Health() const;
  ServiceResponse ModelInfo() const;
  ServiceResponse StepOne(std::string_view body);
  ServiceResponse StepTwo(std::string_view body);

  std::size_t session_count() const;

 private:
  struct Session {
    VotePanel meta2;
    Verdict verdict;
    double cs;
    bool routed;
    double expires;
  };

  double Now() const;
  void PruneLocked(double now);

  ServiceOptions options_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const TpisModel> model_;
  std::string model_id_;

  mutable std::mutex session_mutex_;
  std::map<std::string, Session> sessions_;
};

// Serves a TriageService over HTTP on a background thread.
class HttpServer {
 public:
  explicit HttpServer(TriageService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws kIoError.
  int Start(const std::string& host, int port);
  // Blocks in the calling thread until Stop() is called from elsewhere.
  void Run(const std::string& host, int port);
  void Stop();

 private:
  void Install();

  TriageService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

// Hex FNV-1a 64 of a byte string.
std::string Fingerprint(std::string_view bytes);

}  // namespace tpis
