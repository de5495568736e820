#include "ftp/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <fmt/format.h>
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "ftp/predictors.hpp"

namespace ftp::llm {

using json = nlohmann::ordered_json;

void EndpointConfig::validate() const {
  if (retries < 0) throw Error("retry count must be >= 0");
  if (!(timeout_seconds > 0.0)) throw Error("timeout must be > 0");
  if (!(temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (max_tokens < 1) throw Error("max tokens must be >= 1");
  if (max_in_flight < 1) throw Error("in-flight limit must be >= 1");
  if (!(backoff_base_seconds >= 0.0)) throw Error("backoff base must be >= 0");
}

std::optional<std::string> token_from_env() {
  const char* v = std::getenv(kTokenEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string_view to_string(ClientErrorKind k) {
  switch (k) {
    case ClientErrorKind::Precondition: return "precondition";
    case ClientErrorKind::MalformedPrompt: return "malformed prompt";
    case ClientErrorKind::Unreachable: return "endpoint unreachable";
    case ClientErrorKind::Timeout: return "timeout";
    case ClientErrorKind::Status: return "status";
    case ClientErrorKind::Protocol: return "protocol";
  }
  return "?";
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "" or "/v1"
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_start);
  SplitUrl s;
  s.origin = url.substr(0, slash);
  if (slash != std::string::npos) s.path = url.substr(slash);
  while (!s.path.empty() && s.path.back() == '/') s.path.pop_back();
  return s;
}

class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(const EndpointConfig& cfg) : client_(split_url(cfg.base_url).origin) {
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(cfg.timeout_seconds));
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
    client_.set_write_timeout(timeout);
  }

  std::variant<HttpResponse, TransportFailure> post(const std::string& path, const std::string& body,
                                                    const std::multimap<std::string, std::string>& headers) override {
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client_.Post(path, h, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      return TransportFailure{timeout, httplib::to_string(err)};
    }
    return HttpResponse{res->status, res->body};
  }

 private:
  httplib::Client client_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg) {
  return std::make_unique<HttplibTransport>(cfg);
}

std::string completions_path(const EndpointConfig& cfg) { return split_url(cfg.base_url).path + "/chat/completions"; }

std::string build_request_body(const prompt::PromptRecord& record, const EndpointConfig& cfg) {
  json j;
  j["model"] = cfg.model;
  j["messages"] = json::array({json{{"role", "system"}, {"content", record.system}},
                               json{{"role", "user"}, {"content", record.user}}});
  j["temperature"] = cfg.temperature;
  j["max_tokens"] = cfg.max_tokens;
  return j.dump();
}

std::string parse_response_body(std::string_view body) {
  try {
    const json j = json::parse(body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ClientError(ClientErrorKind::Protocol, fmt::format("unexpected completion body: {}", e.what()));
  }
}

double backoff_seconds(const EndpointConfig& cfg, int retry) {
  thread_local std::mt19937 rng(std::random_device{}());
  std::uniform_real_distribution<double> jitter(0.75, 1.0);
  return cfg.backoff_base_seconds * std::pow(2.0, retry) * jitter(rng);
}

CompletionResult complete(const prompt::PromptRecord& record, const EndpointConfig& cfg, Transport& transport) {
  if (!record.assistant.empty()) {
    throw ClientError(ClientErrorKind::Precondition, "inference prompt must have an empty assistant part");
  }
  cfg.validate();
  const std::string body = build_request_body(record, cfg);
  const std::string path = completions_path(cfg);
  std::multimap<std::string, std::string> headers;
  if (cfg.auth_token) headers.emplace("Authorization", "Bearer " + *cfg.auth_token);

  for (int attempt = 1;; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    auto outcome = transport.post(path, body, headers);
    const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (auto* failure = std::get_if<TransportFailure>(&outcome)) {
      if (attempt <= cfg.retries) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff_seconds(cfg, attempt - 1)));
        continue;
      }
      const auto kind = failure->timeout ? ClientErrorKind::Timeout : ClientErrorKind::Unreachable;
      throw ClientError(kind,
                        fmt::format("{} after {} attempt(s): {}", to_string(kind), attempt, failure->message),
                        attempt);
    }
    const auto& res = std::get<HttpResponse>(outcome);
    if (res.status < 200 || res.status >= 300) {
      throw ClientError(ClientErrorKind::Status,
                        fmt::format("endpoint returned status {}: {}", res.status, res.body.substr(0, 200)), attempt,
                        res.status);
    }
    return CompletionResult{parse_response_body(res.body), latency, attempt};
  }
}

CompletionResult complete(const prompt::PromptRecord& record, const EndpointConfig& cfg) {
  auto transport = make_http_transport(cfg);
  return complete(record, cfg, *transport);
}

std::string_view to_string(MockBehavior b) {
  switch (b) {
    case MockBehavior::Kinematic: return "kinematic";
    case MockBehavior::Empty: return "empty";
    case MockBehavior::Garbled: return "garbled";
    case MockBehavior::SignFlip: return "signflip";
  }
  return "?";
}

std::optional<MockBehavior> parse_mock_behavior(std::string_view s) {
  for (auto b : {MockBehavior::Kinematic, MockBehavior::Empty, MockBehavior::Garbled, MockBehavior::SignFlip}) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

CompletionResult mock_complete(const prompt::PromptRecord& record, MockBehavior behavior) {
  const auto horizon = prompt::parse_horizon(record.system);
  if (!horizon || *horizon < 1) {
    throw ClientError(ClientErrorKind::MalformedPrompt, "malformed prompt: no horizon in system text");
  }
  const auto tuples = prompt::extract_tuples(record.user);
  if (tuples.size() != static_cast<std::size_t>(kInputSteps) ||
      !std::all_of(tuples.begin(), tuples.end(), [](const auto& t) { return t.values.has_value(); })) {
    throw ClientError(ClientErrorKind::MalformedPrompt,
                      fmt::format("malformed prompt: expected {} waypoint tuples in user text", kInputSteps));
  }
  Window w;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& v = *tuples[i].values;
    w.inputs.push_back(Waypoint{static_cast<std::int64_t>(i) * kStepSeconds, v[0], v[1], v[2], v[3], v[4]});
  }

  std::string text;
  switch (behavior) {
    case MockBehavior::Empty:
      break;
    case MockBehavior::Garbled:
      text = kGarbledReply;
      break;
    case MockBehavior::Kinematic:
    case MockBehavior::SignFlip: {
      std::vector<Waypoint> pred;
      try {
        pred = predictors::predict_kinematic(w, *horizon);
      } catch (const Error& e) {
        throw ClientError(ClientErrorKind::MalformedPrompt, fmt::format("malformed prompt: {}", e.what()));
      }
      for (Waypoint& p : pred) {
        p = round_waypoint(p);
        if (behavior == MockBehavior::SignFlip) p.longitude = -p.longitude;
      }
      text = prompt::serialize_waypoints(pred);
      break;
    }
  }
  const auto tokens = prompt::estimate_tokens(record.system, prompt::TokenScheme::NumberAtomic) +
                      prompt::estimate_tokens(record.user, prompt::TokenScheme::NumberAtomic) +
                      prompt::estimate_tokens(text, prompt::TokenScheme::NumberAtomic);
  return CompletionResult{std::move(text), static_cast<double>(tokens) * 1e-3, 1};
}

EndpointBackend::EndpointBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

CompletionResult EndpointBackend::complete(const prompt::PromptRecord& record) {
  return llm::complete(record, cfg_);
}

std::string MockBackend::name() const { return fmt::format("mock-{}", to_string(behavior_)); }

std::vector<BatchItem> complete_all(Backend& backend, std::span<const prompt::PromptRecord> records) {
  std::vector<BatchItem> out(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        out[i].result = backend.complete(records[i]);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, backend.max_in_flight())),
                                             records.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return out;
}

}  // namespace ftp::llm
