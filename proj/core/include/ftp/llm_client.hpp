#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ftp/domain.hpp"
#include "ftp/prompt_codec.hpp"

namespace ftp::llm {

/// Environment variable holding the bearer token.
inline constexpr const char* kTokenEnv = "FTP_LLM_TOKEN";

struct EndpointConfig {
  /// Everything before "/chat/completions", e.g. "http://127.0.0.1:8000/v1".
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "default";
  double temperature = 0.0;
  int max_tokens = 512;
  double timeout_seconds = 60.0;
  int retries = 2;
  std::optional<std::string> auth_token;
  /// First retry waits about this long; each later retry doubles it.
  double backoff_base_seconds = 1.0;
  int max_in_flight = 4;

  /// Throws Error when a field is out of range.
  void validate() const;
};

/// Reads kTokenEnv; nullopt when unset or empty.
std::optional<std::string> token_from_env();

struct CompletionResult {
  std::string text;
  /// Wall clock from request send to full response of the successful
  /// attempt.
  double latency_seconds = 0.0;
  int attempts = 1;
};

enum class ClientErrorKind { Precondition, MalformedPrompt, Unreachable, Timeout, Status, Protocol };

std::string_view to_string(ClientErrorKind k);

class ClientError : public Error {
 public:
  ClientError(ClientErrorKind kind, const std::string& what, int attempts = 0, int status = 0)
      : Error(what), kind_(kind), attempts_(attempts), status_(status) {}

  ClientErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  int status() const { return status_; }

 private:
  ClientErrorKind kind_;
  int attempts_;
  int status_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct TransportFailure {
  bool timeout = false;
  std::string message;
};

/// One HTTP round trip. Implementations report connection-level failures
/// as TransportFailure and never throw for them.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::variant<HttpResponse, TransportFailure> post(const std::string& path, const std::string& body,
                                                            const std::multimap<std::string, std::string>& headers) = 0;
};

/// cpp-httplib transport bound to the scheme/host/port of cfg.base_url.
std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg);

/// Path component of base_url with "/chat/completions" appended.
std::string completions_path(const EndpointConfig& cfg);

/// Chat-completions request: model, [system, user] messages, temperature,
/// max_tokens.
std::string build_request_body(const prompt::PromptRecord& record, const EndpointConfig& cfg);

/// First choice's message content, verbatim (null content is "").
/// Throws ClientError(Protocol) on an unexpected body.
std::string parse_response_body(std::string_view body);

/// Backoff before retry number `retry` (0-based): base * 2^retry, scaled by
/// a jitter factor in [0.75, 1].
double backoff_seconds(const EndpointConfig& cfg, int retry);

/// Sends an inference prompt, retrying transport failures with backoff.
/// Non-2xx responses are not retried.
CompletionResult complete(const prompt::PromptRecord& record, const EndpointConfig& cfg, Transport& transport);
CompletionResult complete(const prompt::PromptRecord& record, const EndpointConfig& cfg);

enum class MockBehavior { Kinematic, Empty, Garbled, SignFlip };

std::string_view to_string(MockBehavior b);
std::optional<MockBehavior> parse_mock_behavior(std::string_view s);

/// Prose returned by MockBehavior::Garbled.
inline constexpr std::string_view kGarbledReply =
    "Based on the recent trajectory, the aircraft should hold its current track and pass near "
    "(103.2, 30.5, 10000) before any further change.";

/// Deterministic stand-in for a served model. Kinematic dead-reckons the
/// user waypoints for the horizon named in the system text; SignFlip does
/// the same with longitudes negated. Latency is 1 ms per number-atomic
/// token of system + user + reply.
///
/// Throws ClientError(MalformedPrompt) when the prompt cannot be decoded.
CompletionResult mock_complete(const prompt::PromptRecord& record, MockBehavior behavior);

/// Anything that turns an inference prompt into a completion.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const prompt::PromptRecord& record) = 0;
  virtual std::string name() const = 0;
  /// Concurrent requests the backend tolerates.
  virtual int max_in_flight() const { return 1; }
};

class EndpointBackend final : public Backend {
 public:
  explicit EndpointBackend(EndpointConfig cfg);
  CompletionResult complete(const prompt::PromptRecord& record) override;
  std::string name() const override { return cfg_.model; }
  int max_in_flight() const override { return cfg_.max_in_flight; }

 private:
  EndpointConfig cfg_;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockBehavior behavior) : behavior_(behavior) {}
  CompletionResult complete(const prompt::PromptRecord& record) override {
    return mock_complete(record, behavior_);
  }
  std::string name() const override;
  int max_in_flight() const override { return 4; }

 private:
  MockBehavior behavior_;
};

struct BatchItem {
  std::optional<CompletionResult> result;
  std::string error;
};

/// Runs every record through `backend` with at most backend.max_in_flight()
/// requests outstanding. Results keep input order; per-record failures are
/// captured in BatchItem::error.
std::vector<BatchItem> complete_all(Backend& backend, std::span<const prompt::PromptRecord> records);

}  // namespace ftp::llm
