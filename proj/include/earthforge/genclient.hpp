// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "earthforge/error.hpp"

namespace earthforge {

struct GeneratorRequest {
  std::string model;
  std::vector<std::string> image_refs;
  std::string prompt;
  int max_tokens = 512;
  double timeout_s = 60.0;

  /// Throws InvalidArgument on an empty prompt or non-positive max_tokens.
  void validate() const;
};

struct GeneratorResponse {
  std::string text;
  double latency_s = 0.0;
  int transport_retries = 0;
};

/// Anything that turns a prompt into generated text. Implementations are
/// safe to call from several threads.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual GeneratorResponse complete(const GeneratorRequest& request) = 0;
};

/// Caps concurrent requests; waiters are admitted strictly in arrival order.
class AdmissionGate {
 public:
  explicit AdmissionGate(int max_in_flight);

  class Pass {
   public:
    explicit Pass(AdmissionGate* gate) : gate_(gate) {}
    Pass(Pass&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
    Pass(const Pass&) = delete;
    Pass& operator=(const Pass&) = delete;
    Pass& operator=(Pass&&) = delete;
    ~Pass() {
      if (gate_) gate_->leave();
    }

   private:
    AdmissionGate* gate_;
  };

  Pass enter();
  int in_flight() const;
  int limit() const noexcept { return limit_; }

 private:
  void leave();

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
  int in_flight_ = 0;
  int limit_;
};

enum class ImageTransport { Base64, Url };

struct HttpGeneratorConfig {
  std::string base_url;
  std::string model = "internlm-xcomposer2";
  double timeout_s = 60.0;
  int max_tokens = 512;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  std::string bearer_token;
  ImageTransport image_transport = ImageTransport::Base64;
  int max_in_flight = 4;
};

/// Delay before retry k (k = 1..attempts-1): base * 2^(k-1).
std::vector<std::chrono::milliseconds> backoff_schedule(int max_attempts,
                                                        std::chrono::milliseconds base);

/// {"model", "messages":[{"role":"user","content":[text part, image parts...]}],
///  "max_tokens"}. Base64 transport inlines each image file as a data URL.
nlohmann::ordered_json build_chat_body(const GeneratorRequest& request, ImageTransport transport);

/// choices[0].message.content, or MalformedResponse.
std::string extract_completion_text(std::string_view body);

/// POSTs to <base_url>/v1/chat/completions. Connection failures, timeouts
/// and 5xx responses are retried with exponential backoff. After the last
/// attempt a 5xx surfaces as HttpError with its status, anything else as
/// TransportError. Other non-200 statuses raise HttpError immediately.
class HttpGeneratorClient final : public GeneratorClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpGeneratorClient(HttpGeneratorConfig config, Sleeper sleeper = {});
  GeneratorResponse complete(const GeneratorRequest& request) override;

  const HttpGeneratorConfig& config() const noexcept { return config_; }

 private:
  HttpGeneratorConfig config_;
  Sleeper sleeper_;
  AdmissionGate gate_;
  std::string origin_;
  std::string path_;
};

/// One scripted reply: generated text, or a failure of the given kind.
struct MockStep {
  std::string text;
  bool fails = false;
  ErrorKind failure = ErrorKind::TransportError;

  static MockStep reply(std::string text) { return {std::move(text), false, {}}; }
  static MockStep fail(ErrorKind kind = ErrorKind::TransportError, std::string message = "scripted failure") {
    return {std::move(message), true, kind};
  }
};

/// Replays a script, one step per call; ScriptExhausted past the end.
class MockGenerator final : public GeneratorClient {
 public:
  explicit MockGenerator(std::vector<MockStep> script);
  GeneratorResponse complete(const GeneratorRequest& request) override;

  int call_count() const;
  std::vector<GeneratorRequest> requests() const;

 private:
  std::vector<MockStep> script_;
  std::vector<GeneratorRequest> requests_;
  mutable std::mutex mutex_;
};

std::unique_ptr<MockGenerator> mock_generator(std::vector<MockStep> script);

/// Offline responder for `mock://` URLs: answers every prompt with a
/// well-formed pair about the prompt's subject.
class TemplateGenerator final : public GeneratorClient {
 public:
  GeneratorResponse complete(const GeneratorRequest& request) override;
};

/// "mock://..." yields a TemplateGenerator, anything else an HTTP client.
std::unique_ptr<GeneratorClient> make_generator(const HttpGeneratorConfig& config);

}  // namespace earthforge
