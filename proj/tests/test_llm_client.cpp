#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "ftp/llm_client.hpp"
#include "ftp/predictors.hpp"
#include "support.hpp"

using namespace ftp;
using namespace ftp::llm;
using json = nlohmann::json;

namespace {

prompt::PromptRecord inference_prompt(std::uint64_t seed, int horizon) {
  fixtures::Rng rng(seed);
  return prompt::build_prompt(fixtures::random_window(rng, horizon), false);
}

/// Chat-completions stand-in on an ephemeral local port.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply_body(const std::string& content) {
  return json{{"choices", json::array({json{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}})}}
      .dump();
}

}  // namespace

TEST(RequestBody, CarriesModelMessagesAndSampling) {
  EndpointConfig cfg;
  cfg.model = "m1";
  cfg.temperature = 0.5;
  cfg.max_tokens = 77;
  const auto rec = inference_prompt(1, 4);
  const json j = json::parse(build_request_body(rec, cfg));
  EXPECT_EQ(j["model"], "m1");
  EXPECT_EQ(j["temperature"], 0.5);
  EXPECT_EQ(j["max_tokens"], 77);
  ASSERT_EQ(j["messages"].size(), 2u);
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][0]["content"], rec.system);
  EXPECT_EQ(j["messages"][1]["role"], "user");
  EXPECT_EQ(j["messages"][1]["content"], rec.user);
}

TEST(ResponseBody, ExtractsFirstChoice) {
  EXPECT_EQ(parse_response_body(reply_body("(1, 2)")), "(1, 2)");
  EXPECT_EQ(parse_response_body(R"({"choices":[{"message":{"content":null}}]})"), "");
  EXPECT_THROW(parse_response_body("{}"), ClientError);
  EXPECT_THROW(parse_response_body("not json"), ClientError);
}

TEST(CompletionsPath, JoinsBaseUrlPath) {
  EndpointConfig cfg;
  cfg.base_url = "http://host:9/v1/";
  EXPECT_EQ(completions_path(cfg), "/v1/chat/completions");
  cfg.base_url = "https://host";
  EXPECT_EQ(completions_path(cfg), "/chat/completions");
}

TEST(Backoff, DoublesWithJitter) {
  EndpointConfig cfg;
  cfg.backoff_base_seconds = 1.0;
  for (int i = 0; i < 200; ++i) {
    for (int r = 0; r < 4; ++r) {
      const double b = backoff_seconds(cfg, r);
      EXPECT_GE(b, 0.75 * (1 << r));
      EXPECT_LE(b, 1.0 * (1 << r));
    }
  }
}

TEST(Complete, SendsWireFormatAndBearerToken) {
  std::string seen_auth;
  json seen_body;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    res.set_content(reply_body("(103.00000, 30.00000, 9000.000, 800.000, 90.00)"), "application/json");
  });
  EndpointConfig cfg;
  cfg.base_url = server.base_url();
  cfg.model = "served";
  cfg.auth_token = "secret";
  const auto rec = inference_prompt(2, 1);
  const auto r = complete(rec, cfg);
  EXPECT_EQ(r.text, "(103.00000, 30.00000, 9000.000, 800.000, 90.00)");
  EXPECT_EQ(r.attempts, 1);
  EXPECT_GE(r.latency_seconds, 0.0);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_body["model"], "served");
  EXPECT_EQ(seen_body["messages"][1]["content"], rec.user);
}

TEST(Complete, NonSuccessStatusIsNotRetried) {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  EndpointConfig cfg;
  cfg.base_url = server.base_url();
  cfg.retries = 3;
  try {
    complete(inference_prompt(3, 1), cfg);
    FAIL() << "expected a status error";
  } catch (const ClientError& e) {
    EXPECT_EQ(e.kind(), ClientErrorKind::Status);
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(Complete, UnreachableRetriesThenFails) {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.retries = 1;
  cfg.timeout_seconds = 2;
  cfg.backoff_base_seconds = 0.01;
  try {
    complete(inference_prompt(4, 1), cfg);
    FAIL() << "expected an unreachable error";
  } catch (const ClientError& e) {
    EXPECT_TRUE(e.kind() == ClientErrorKind::Unreachable || e.kind() == ClientErrorKind::Timeout);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(Complete, AssistantPartMustBeEmpty) {
  fixtures::Rng rng(5);
  const auto rec = prompt::build_prompt(fixtures::random_window(rng, 1), true);
  try {
    complete(rec, EndpointConfig{});
    FAIL() << "expected a precondition error";
  } catch (const ClientError& e) {
    EXPECT_EQ(e.kind(), ClientErrorKind::Precondition);
  }
}

TEST(Complete, InvalidConfigRejected) {
  EndpointConfig cfg;
  cfg.retries = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = EndpointConfig{};
  cfg.max_in_flight = 0;
  EXPECT_THROW(EndpointBackend{cfg}, Error);
}

TEST(Mock, KinematicMatchesDeadReckoning) {
  fixtures::Rng rng(6);
  const Window w = fixtures::random_window(rng, 4);
  const auto r = mock_complete(prompt::build_prompt(w, false), MockBehavior::Kinematic);
  const auto o = prompt::parse_completion(r.text, 4, w);
  ASSERT_TRUE(o.ok());
  const auto expected = predictors::predict_kinematic(w, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(o.waypoints()[k], round_waypoint(expected[k]));
  }
  EXPECT_EQ(r.attempts, 1);
}

TEST(Mock, BehaviorsMapToFailureKinds) {
  fixtures::Rng rng(7);
  const Window w = fixtures::random_window(rng, 1);
  const auto rec = prompt::build_prompt(w, false);
  EXPECT_EQ(prompt::parse_completion(mock_complete(rec, MockBehavior::Empty).text, 1, w).failure().kind,
            prompt::FailureKind::MissingTrajectory);
  EXPECT_EQ(prompt::parse_completion(mock_complete(rec, MockBehavior::Garbled).text, 1, w).failure().kind,
            prompt::FailureKind::UnexpectedFormat);
  EXPECT_EQ(prompt::parse_completion(mock_complete(rec, MockBehavior::SignFlip).text, 1, w).failure().kind,
            prompt::FailureKind::SevereDeviation);
}

TEST(Mock, LatencyIsOneMillisecondPerToken) {
  const auto rec = inference_prompt(8, 8);
  const auto a = mock_complete(rec, MockBehavior::Kinematic);
  const auto b = mock_complete(rec, MockBehavior::Kinematic);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.latency_seconds, b.latency_seconds);
  const auto tokens = prompt::estimate_tokens(rec.system, prompt::TokenScheme::NumberAtomic) +
                      prompt::estimate_tokens(rec.user, prompt::TokenScheme::NumberAtomic) +
                      prompt::estimate_tokens(a.text, prompt::TokenScheme::NumberAtomic);
  EXPECT_DOUBLE_EQ(a.latency_seconds, 1e-3 * static_cast<double>(tokens));
  EXPECT_GT(a.latency_seconds, mock_complete(inference_prompt(8, 1), MockBehavior::Kinematic).latency_seconds);
}

TEST(Mock, MalformedPromptRejected) {
  auto rec = inference_prompt(9, 1);
  rec.user = "(1.0, 2.0, 3.0, 4.0, 5.0)";
  EXPECT_THROW(mock_complete(rec, MockBehavior::Kinematic), ClientError);
  rec = inference_prompt(9, 1);
  rec.system = "no horizon here";
  EXPECT_THROW(mock_complete(rec, MockBehavior::Empty), ClientError);
}

TEST(Mock, BehaviorNamesRoundTrip) {
  for (auto b : {MockBehavior::Kinematic, MockBehavior::Empty, MockBehavior::Garbled, MockBehavior::SignFlip}) {
    EXPECT_EQ(parse_mock_behavior(to_string(b)), b);
  }
  EXPECT_FALSE(parse_mock_behavior("nope"));
}

namespace {

class SlowBackend final : public Backend {
 public:
  CompletionResult complete(const prompt::PromptRecord& record) override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active_;
    if (record.user == "boom") throw Error("boom");
    return CompletionResult{record.user, 0.0, 1};
  }
  std::string name() const override { return "slow"; }
  int max_in_flight() const override { return 3; }
  int peak() const { return peak_.load(); }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

}  // namespace

TEST(CompleteAll, KeepsOrderBoundsConcurrencyAndCapturesErrors) {
  std::vector<prompt::PromptRecord> recs(20);
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].user = i == 7 ? "boom" : std::to_string(i);
  SlowBackend backend;
  const auto out = complete_all(backend, recs);
  ASSERT_EQ(out.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i == 7) {
      EXPECT_FALSE(out[i].result);
      EXPECT_EQ(out[i].error, "boom");
    } else {
      ASSERT_TRUE(out[i].result);
      EXPECT_EQ(out[i].result->text, std::to_string(i));
    }
  }
  EXPECT_LE(backend.peak(), 3);
  EXPECT_GE(backend.peak(), 2);
}

TEST(CompleteAll, EmptyInput) {
  SlowBackend backend;
  EXPECT_TRUE(complete_all(backend, {}).empty());
}
