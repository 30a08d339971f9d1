#include "tpis/service.h"

#include <chrono>
#include <cstdio>
#include <set>

#include "httplib.h"
#include "tpis/error.h"
#include "tpis/storage.h"

namespace tpis {

namespace {

using nlohmann::json;

ServiceResponse Reply(int status, json body) { return {status, std::move(body)}; }

ServiceResponse ErrorReply(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

json PanelJson(const VotePanel& panel) { return panel.probs; }

std::string Join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

// Reads exactly the named fields from an object. Values may be numbers,
// booleans or null (missing). Returns an error message, empty on success.
template <std::size_t N>
std::string ReadFields(const json& doc, const std::array<std::string_view, N>& names,
                       std::array<double, N>& out) {
  if (!doc.is_object()) return "feature document must be a JSON object";
  std::vector<std::string> absent, extra, bad;
  std::set<std::string_view> known(names.begin(), names.end());
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) extra.push_back(key);
  }
  for (std::size_t i = 0; i < N; ++i) {
    const std::string key(names[i]);
    if (!doc.contains(key)) {
      absent.push_back(key);
      continue;
    }
    const json& v = doc[key];
    if (v.is_null()) {
      out[i] = kMissing;
    } else if (v.is_boolean()) {
      out[i] = v.get<bool>() ? 1.0 : 0.0;
    } else if (v.is_number()) {
      out[i] = v.get<double>();
    } else {
      bad.push_back(key);
    }
  }
  std::string message;
  const auto add = [&message](const char* what, const std::vector<std::string>& names) {
    if (names.empty()) return;
    if (!message.empty()) message += "; ";
    message += what + Join(names);
  };
  add("missing fields: ", absent);
  add("unexpected fields: ", extra);
  add("fields must be numbers or null: ", bad);
  return message;
}

bool ParseBody(std::string_view body, json& doc, std::string& error) {
  try {
    doc = json::parse(body.begin(), body.end());
    return true;
  } catch (const json::parse_error& e) {
    error = std::string("request body is not valid JSON: ") + e.what();
    return false;
  }
}

std::vector<std::string> LearnerNames(const EnsembleLayer& layer) {
  std::vector<std::string> out;
  for (const auto& l : layer.learners()) out.emplace_back(LearnerKindName(l->kind()));
  return out;
}

}  // namespace

std::string Fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TriageService::TriageService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }
}

double TriageService::Now() const { return options_.clock(); }

void TriageService::SetModel(std::shared_ptr<const TpisModel> model) {
  const std::string id = model ? Fingerprint(SerializeModel(*model)) : std::string();
  {
    std::lock_guard lock(model_mutex_);
    model_ = std::move(model);
    model_id_ = id;
  }
  std::lock_guard lock(session_mutex_);
  sessions_.clear();
}

std::shared_ptr<const TpisModel> TriageService::model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

std::size_t TriageService::session_count() const {
  std::lock_guard lock(session_mutex_);
  return sessions_.size();
}

void TriageService::PruneLocked(double now) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    it = it->second.expires <= now ? sessions_.erase(it) : std::next(it);
  }
}

ServiceResponse TriageService::Health() const {
  return Reply(200, {{"status", "ok"}, {"model_loaded", model() != nullptr}});
}

ServiceResponse TriageService::ModelInfo() const {
  std::shared_ptr<const TpisModel> m;
  std::string id;
  {
    std::lock_guard lock(model_mutex_);
    m = model_;
    id = model_id_;
  }
  if (!m) return ErrorReply(503, "no model loaded");
  return Reply(200, {{"format_version", kModelFormatVersion},
                     {"model_id", id},
                     {"seed", m->seed},
                     {"folds", m->folds},
                     {"epsilon", m->policy.epsilon},
                     {"route_threshold", m->policy.route_threshold},
                     {"layers",
                      {{"layer1", LearnerNames(m->layer1)},
                       {"layer2", LearnerNames(m->layer2)},
                       {"step2", LearnerNames(m->step2_layer)}}},
                     {"step1_features", std::vector<std::string>(kStepOneFeatureNames.begin(),
                                                                 kStepOneFeatureNames.end())},
                     {"step2_features", std::vector<std::string>(kStepTwoFeatureNames.begin(),
                                                                 kStepTwoFeatureNames.end())}});
}

ServiceResponse TriageService::StepOne(std::string_view body) {
  std::shared_ptr<const TpisModel> m;
  std::string model_id;
  {
    std::lock_guard lock(model_mutex_);
    m = model_;
    model_id = model_id_;
  }
  if (!m) return ErrorReply(503, "no model loaded");
  json doc;
  std::string error;
  if (!ParseBody(body, doc, error)) return ErrorReply(400, error);

  PatientRecord record;
  record.id = "request";
  error = ReadFields(doc, kStepOneFeatureNames, record.step1.values);
  if (!error.empty()) return ErrorReply(400, error);
  try {
    ValidateRecord(record);
  } catch (const Error& e) {
    return ErrorReply(400, e.what());
  }

  EarlyDiagnosis d;
  try {
    d = EarlyDiagnose(*m, record.step1);
  } catch (const Error& e) {
    return ErrorReply(400, e.what());
  }
  const VoteTally tally = TallyVotes(d.meta2, m->policy);
  const std::string session_id = Fingerprint(model_id + "|" + doc.dump());

  const double now = Now();
  {
    std::lock_guard lock(session_mutex_);
    PruneLocked(now);
    if (sessions_.size() >= options_.max_sessions && !sessions_.count(session_id)) {
      auto oldest = sessions_.begin();
      for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
        if (it->second.expires < oldest->second.expires) oldest = it;
      }
      sessions_.erase(oldest);
    }
    sessions_[session_id] = {d.meta2, d.verdict, d.cs, d.routed,
                             now + options_.session_ttl_seconds};
  }

  return Reply(200, {{"label", VerdictCode(d.verdict)},
                     {"cs", d.cs},
                     {"routed", d.routed},
                     {"route_threshold", m->policy.route_threshold},
                     {"tally", {{"tb", tally.tb}, {"p", tally.pneumonia}}},
                     {"meta1", PanelJson(d.meta1)},
                     {"meta2", PanelJson(d.meta2)},
                     {"session_id", session_id}});
}

ServiceResponse TriageService::StepTwo(std::string_view body) {
  std::shared_ptr<const TpisModel> m = model();
  if (!m) return ErrorReply(503, "no model loaded");
  json doc;
  std::string error;
  if (!ParseBody(body, doc, error)) return ErrorReply(400, error);
  if (!doc.is_object()) return ErrorReply(400, "request body must be a JSON object");

  std::vector<std::string> extra;
  for (const auto& [key, _] : doc.items()) {
    if (key != "session_id" && key != "meta2" && key != "features") extra.push_back(key);
  }
  if (!extra.empty()) return ErrorReply(400, "unexpected fields: " + Join(extra));
  const bool has_session = doc.contains("session_id");
  const bool has_meta = doc.contains("meta2");
  if (has_session == has_meta) {
    return ErrorReply(400, "exactly one of session_id and meta2 is required");
  }
  if (!doc.contains("features")) return ErrorReply(400, "missing fields: features");

  PatientRecord record;
  record.id = "request";
  StepTwoFeatures features;
  error = ReadFields(doc["features"], kStepTwoFeatureNames, features.values);
  if (!error.empty()) return ErrorReply(400, error);
  record.step2 = features;
  try {
    ValidateRecord(record);
  } catch (const Error& e) {
    return ErrorReply(400, e.what());
  }

  VotePanel meta2;
  if (has_session) {
    if (!doc["session_id"].is_string()) return ErrorReply(400, "session_id must be a string");
    const auto id = doc["session_id"].get<std::string>();
    std::lock_guard lock(session_mutex_);
    PruneLocked(Now());
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return ErrorReply(404, "unknown or expired session '" + id + "'");
    meta2 = it->second.meta2;
  } else {
    const json& v = doc["meta2"];
    if (!v.is_array()) return ErrorReply(400, "meta2 must be an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) return ErrorReply(400, "meta2 must be an array of numbers");
      const double p = x.get<double>();
      if (!(p >= 0.0 && p <= 1.0)) return ErrorReply(400, "meta2 entries must be in [0, 1]");
      meta2.probs.push_back(p);
    }
  }

  FinalDecision decision;
  try {
    decision = FinalDiagnose(*m, meta2, features);
  } catch (const Error& e) {
    return ErrorReply(400, e.what());
  }
  const Verdict verdict = VoteLabel(meta2, m->policy);
  const double cs = ConfidenceScore(meta2, m->policy);
  const bool routed = ShouldRoute(verdict, cs, m->policy.route_threshold);

  json out = {{"final_label", LabelCode(decision.label)},
              {"votes", PanelJson(decision.votes)},
              {"tb_votes", decision.tb_votes},
              {"step1_label", VerdictCode(verdict)},
              {"step1_cs", cs},
              {"step1_confident", !routed}};
  if (!routed) {
    out["warning"] = "step 1 was already confident (cs " + std::to_string(cs) +
                     " >= threshold " + std::to_string(m->policy.route_threshold) + ")";
  }
  return Reply(200, std::move(out));
}

ServiceResponse TriageService::Handle(std::string_view method, std::string_view path,
                                      std::string_view body) {
  try {
    if (path == "/health" && method == "GET") return Health();
    if (path == "/v1/model" && method == "GET") return ModelInfo();
    if (path == "/v1/step1" && method == "POST") return StepOne(body);
    if (path == "/v1/step2" && method == "POST") return StepTwo(body);
    if (path == "/health" || path == "/v1/model" || path == "/v1/step1" || path == "/v1/step2") {
      return ErrorReply(405, "method not allowed");
    }
    return ErrorReply(404, "no route for " + std::string(path));
  } catch (const std::exception& e) {
    return ErrorReply(500, e.what());
  }
}

HttpServer::HttpServer(TriageService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  Install();
}

HttpServer::~HttpServer() { Stop(); }

void HttpServer::Install() {
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = service_.Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  for (const char* path : {"/health", "/v1/model", "/v1/step1", "/v1/step2"}) {
    server_->Get(path, handler);
    server_->Post(path, handler);
  }
  server_->set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      res.set_content(json{{"error", "no route for " + req.path}}.dump(), "application/json");
    }
  });
}

int HttpServer::Start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::Run(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace tpis
