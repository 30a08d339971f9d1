#include "tpis/service.h"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "test_util.h"

namespace tpis {
namespace {

using nlohmann::json;
using testing::Cohort199;
using testing::DefaultModel;

std::shared_ptr<const TpisModel> SharedModel() {
  static const auto m = std::make_shared<const TpisModel>(DefaultModel());
  return m;
}

json StepOneBody(const StepOneFeatures& f) {
  json j = json::object();
  for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
    const std::string key(kStepOneFeatureNames[i]);
    j[key] = IsMissing(f.values[i]) ? json(nullptr) : json(f.values[i]);
  }
  return j;
}

json StepTwoFeaturesBody(const StepTwoFeatures& f) {
  json j = json::object();
  for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
    const std::string key(kStepTwoFeatureNames[i]);
    j[key] = IsMissing(f.values[i]) ? json(nullptr) : json(f.values[i]);
  }
  return j;
}

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() : service_(Options()) { service_.SetModel(SharedModel()); }

  ServiceOptions Options() {
    ServiceOptions o;
    o.session_ttl_seconds = 60;
    o.max_sessions = 3;
    o.clock = [this] { return now_; };
    return o;
  }

  ServiceResponse Post(const std::string& path, const json& body) {
    return service_.Handle("POST", path, body.dump());
  }

  double now_ = 1000.0;
  TriageService service_;
};

TEST_F(ServiceTest, Health) {
  const ServiceResponse r = service_.Handle("GET", "/health", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "ok");
  EXPECT_EQ(r.body["model_loaded"], true);
  TriageService empty;
  EXPECT_EQ(empty.Health().body["model_loaded"], false);
}

TEST_F(ServiceTest, NoModel) {
  TriageService empty;
  EXPECT_EQ(empty.Handle("GET", "/v1/model", "").status, 503);
  EXPECT_EQ(empty.Handle("POST", "/v1/step1", "{}").status, 503);
  EXPECT_EQ(empty.Handle("POST", "/v1/step2", "{}").status, 503);
}

TEST_F(ServiceTest, ModelInfo) {
  const ServiceResponse r = service_.Handle("GET", "/v1/model", "");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["format_version"], 1);
  EXPECT_EQ(r.body["epsilon"], 0.4);
  EXPECT_EQ(r.body["route_threshold"], 0.51);
  EXPECT_EQ(r.body["step1_features"].size(), kStepOneFeatureCount);
  EXPECT_EQ(r.body["step2_features"].size(), kStepTwoFeatureCount);
  EXPECT_EQ(r.body["model_id"].get<std::string>().size(), 16u);
}

TEST_F(ServiceTest, StepOneMatchesLibrary) {
  for (std::size_t i = 0; i < 20; ++i) {
    const PatientRecord& rec = Cohort199()[i];
    const ServiceResponse r = Post("/v1/step1", StepOneBody(rec.step1));
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const EarlyDiagnosis d = EarlyDiagnose(DefaultModel(), rec.step1);
    EXPECT_EQ(r.body["label"], std::string(VerdictCode(d.verdict)));
    EXPECT_EQ(r.body["cs"].get<double>(), d.cs);
    EXPECT_EQ(r.body["routed"], d.routed);
    EXPECT_EQ(r.body["meta2"].get<std::vector<double>>(), d.meta2.probs);
    EXPECT_EQ(r.body["meta1"].get<std::vector<double>>(), d.meta1.probs);
    const VoteTally t = TallyVotes(d.meta2, DefaultModel().policy);
    EXPECT_EQ(r.body["tally"]["tb"], t.tb);
    EXPECT_EQ(r.body["tally"]["p"], t.pneumonia);
  }
}

TEST_F(ServiceTest, StepOneFieldErrors) {
  json body = StepOneBody(Cohort199()[0].step1);
  body.erase("fever");
  body.erase("age");
  ServiceResponse r = Post("/v1/step1", body);
  EXPECT_EQ(r.status, 400);
  const std::string msg = r.body["error"];
  EXPECT_NE(msg.find("missing fields"), std::string::npos) << msg;
  EXPECT_NE(msg.find("age"), std::string::npos) << msg;
  EXPECT_NE(msg.find("fever"), std::string::npos) << msg;

  body = StepOneBody(Cohort199()[0].step1);
  body["height"] = 180;
  r = Post("/v1/step1", body);
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(r.body["error"].get<std::string>().find("unexpected fields: height"),
            std::string::npos);

  body = StepOneBody(Cohort199()[0].step1);
  body["cough"] = "yes";
  r = Post("/v1/step1", body);
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(r.body["error"].get<std::string>().find("cough"), std::string::npos);

  body = StepOneBody(Cohort199()[0].step1);
  body["cough"] = 3;
  EXPECT_EQ(Post("/v1/step1", body).status, 400);
  EXPECT_EQ(service_.Handle("POST", "/v1/step1", "{oops").status, 400);
  EXPECT_EQ(service_.Handle("POST", "/v1/step1", "[1]").status, 400);
}

TEST_F(ServiceTest, StepOneAcceptsBooleansAndNulls) {
  json body = StepOneBody(Cohort199()[0].step1);
  body["cough"] = true;
  body["fever"] = nullptr;
  EXPECT_EQ(Post("/v1/step1", body).status, 200);
}

TEST_F(ServiceTest, StepTwoBySessionAndByMeta) {
  const PatientRecord& rec = Cohort199()[3];
  ASSERT_TRUE(rec.step2.has_value());
  const ServiceResponse s1 = Post("/v1/step1", StepOneBody(rec.step1));
  ASSERT_EQ(s1.status, 200);
  const json features = StepTwoFeaturesBody(*rec.step2);
  const ServiceResponse a =
      Post("/v1/step2", {{"session_id", s1.body["session_id"]}, {"features", features}});
  ASSERT_EQ(a.status, 200) << a.body.dump();
  const ServiceResponse b =
      Post("/v1/step2", {{"meta2", s1.body["meta2"]}, {"features", features}});
  ASSERT_EQ(b.status, 200);
  EXPECT_EQ(a.body, b.body);

  const EarlyDiagnosis d = EarlyDiagnose(DefaultModel(), rec.step1);
  const FinalDecision f = FinalDiagnose(DefaultModel(), d.meta2, *rec.step2);
  EXPECT_EQ(a.body["final_label"], std::string(LabelCode(f.label)));
  EXPECT_EQ(a.body["tb_votes"], f.tb_votes);
  EXPECT_EQ(a.body["votes"].get<std::vector<double>>(), f.votes.probs);
  EXPECT_EQ(a.body["step1_confident"], !d.routed);
  EXPECT_EQ(a.body.contains("warning"), !d.routed);
}

TEST_F(ServiceTest, StepTwoErrors) {
  const json features = StepTwoFeaturesBody(*Cohort199()[3].step2);
  EXPECT_EQ(Post("/v1/step2", {{"session_id", "nope"}, {"features", features}}).status, 404);
  EXPECT_EQ(Post("/v1/step2", {{"features", features}}).status, 400);
  EXPECT_EQ(Post("/v1/step2", {{"session_id", "x"}, {"meta2", {0.1, 0.2, 0.3, 0.4, 0.5}},
                               {"features", features}})
                .status,
            400);
  EXPECT_EQ(Post("/v1/step2", {{"meta2", {0.1, 0.2}}, {"features", features}}).status, 400);
  EXPECT_EQ(Post("/v1/step2", {{"meta2", {0.1, 0.2, 0.3, 0.4, 1.5}}, {"features", features}})
                .status,
            400);
  EXPECT_EQ(Post("/v1/step2", {{"meta2", {0.1, 0.2, 0.3, 0.4, 0.5}}}).status, 400);
  json partial = features;
  partial.erase("crp");
  const ServiceResponse r =
      Post("/v1/step2", {{"meta2", {0.1, 0.2, 0.3, 0.4, 0.5}}, {"features", partial}});
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(r.body["error"].get<std::string>().find("crp"), std::string::npos);
  EXPECT_EQ(Post("/v1/step2", {{"meta2", {0.1, 0.2, 0.3, 0.4, 0.5}}, {"features", features},
                               {"extra", 1}})
                .status,
            400);
}

TEST_F(ServiceTest, SessionsExpire) {
  const ServiceResponse s1 = Post("/v1/step1", StepOneBody(Cohort199()[0].step1));
  const json req = {{"session_id", s1.body["session_id"]},
                    {"features", StepTwoFeaturesBody(*Cohort199()[3].step2)}};
  now_ += 59;
  EXPECT_EQ(Post("/v1/step2", req).status, 200);
  now_ += 2;
  EXPECT_EQ(Post("/v1/step2", req).status, 404);
  EXPECT_EQ(service_.session_count(), 0u);
}

TEST_F(ServiceTest, SessionCapEvictsOldest) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 4; ++i) {
    now_ += 1;
    ids.push_back(Post("/v1/step1", StepOneBody(Cohort199()[i].step1)).body["session_id"]);
  }
  EXPECT_EQ(service_.session_count(), 3u);
  const json features = StepTwoFeaturesBody(*Cohort199()[3].step2);
  EXPECT_EQ(Post("/v1/step2", {{"session_id", ids[0]}, {"features", features}}).status, 404);
  EXPECT_EQ(Post("/v1/step2", {{"session_id", ids[3]}, {"features", features}}).status, 200);
}

TEST_F(ServiceTest, SameRequestSameSession) {
  const json body = StepOneBody(Cohort199()[0].step1);
  EXPECT_EQ(Post("/v1/step1", body).body["session_id"], Post("/v1/step1", body).body["session_id"]);
}

TEST_F(ServiceTest, RoutesAndMethods) {
  EXPECT_EQ(service_.Handle("GET", "/nope", "").status, 404);
  EXPECT_EQ(service_.Handle("GET", "/v1/step1", "").status, 405);
  EXPECT_EQ(service_.Handle("POST", "/health", "").status, 405);
}

TEST_F(ServiceTest, SwappingModelDropsSessions) {
  Post("/v1/step1", StepOneBody(Cohort199()[0].step1));
  EXPECT_EQ(service_.session_count(), 1u);
  service_.SetModel(SharedModel());
  EXPECT_EQ(service_.session_count(), 0u);
}

TEST_F(ServiceTest, ConcurrentRequestsAgreeWithSerialOnes) {
  std::vector<json> expected;
  for (std::size_t i = 0; i < 16; ++i) {
    expected.push_back(Post("/v1/step1", StepOneBody(Cohort199()[i].step1)).body);
  }
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int rep = 0; rep < 10; ++rep) {
        const std::size_t i = (t * 7 + rep) % 16;
        const ServiceResponse r = Post("/v1/step1", StepOneBody(Cohort199()[i].step1));
        if (r.status != 200 || r.body != expected[i]) ++mismatches;
        if (rep == 5 && t == 0) service_.SetModel(SharedModel());
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(HttpServerTest, EndToEnd) {
  TriageService service;
  service.SetModel(SharedModel());
  HttpServer server(service);
  const int port = server.Start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  const PatientRecord& rec = Cohort199()[5];
  auto s1 = client.Post("/v1/step1", StepOneBody(rec.step1).dump(), "application/json");
  ASSERT_TRUE(s1);
  ASSERT_EQ(s1->status, 200) << s1->body;
  const json step1 = json::parse(s1->body);
  EXPECT_EQ(step1["cs"].get<double>(), EarlyDiagnose(DefaultModel(), rec.step1).cs);

  const json req = {{"session_id", step1["session_id"]},
                    {"features", StepTwoFeaturesBody(*rec.step2)}};
  auto s2 = client.Post("/v1/step2", req.dump(), "application/json");
  ASSERT_TRUE(s2);
  EXPECT_EQ(s2->status, 200) << s2->body;
  EXPECT_TRUE(json::parse(s2->body).contains("final_label"));

  auto bad = client.Post("/v1/step1", "{}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_TRUE(json::parse(bad->body).contains("error"));

  auto missing = client.Get("/v2/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(json::parse(missing->body).contains("error"));

  auto info = client.Get("/v1/model");
  ASSERT_TRUE(info);
  EXPECT_EQ(info->status, 200);
  server.Stop();
}

TEST(FingerprintTest, KnownVectors) {
  EXPECT_EQ(Fingerprint(""), "cbf29ce484222325");
  EXPECT_EQ(Fingerprint("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace tpis
