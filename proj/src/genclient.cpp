// SPDX-License-Identifier: Apache-2.0
#include "earthforge/genclient.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <thread>

#include "httplib.h"

namespace earthforge {
namespace {

std::string mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

std::string data_url(const std::string& ref) {
  std::ifstream in(ref, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read image " + ref);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return "data:" + mime_type(ref) + ";base64," + httplib::detail::base64_encode(bytes);
}

/// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorKind::InvalidArgument, "generator URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

void GeneratorRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorKind::InvalidArgument, "generator prompt is empty");
  if (max_tokens <= 0) throw Error(ErrorKind::InvalidArgument, "max_tokens must be positive");
}

AdmissionGate::AdmissionGate(int max_in_flight) : limit_(max_in_flight) {
  if (max_in_flight < 1) throw Error(ErrorKind::InvalidArgument, "max_in_flight must be >= 1");
}

AdmissionGate::Pass AdmissionGate::enter() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == serving_ && in_flight_ < limit_; });
  ++serving_;
  ++in_flight_;
  cv_.notify_all();
  return Pass(this);
}

void AdmissionGate::leave() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_all();
}

int AdmissionGate::in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

std::vector<std::chrono::milliseconds> backoff_schedule(int max_attempts,
                                                        std::chrono::milliseconds base) {
  std::vector<std::chrono::milliseconds> delays;
  for (int k = 1; k < max_attempts; ++k) delays.push_back(base * (1LL << (k - 1)));
  return delays;
}

nlohmann::ordered_json build_chat_body(const GeneratorRequest& request, ImageTransport transport) {
  nlohmann::ordered_json content = nlohmann::ordered_json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& ref : request.image_refs) {
    const std::string url = transport == ImageTransport::Base64 ? data_url(ref) : ref;
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", content}}});
  body["max_tokens"] = request.max_tokens;
  return body;
}

std::string extract_completion_text(std::string_view body) {
  const auto json = nlohmann::json::parse(body, nullptr, false);
  if (json.is_discarded()) throw Error(ErrorKind::MalformedResponse, "response is not JSON");
  const auto choices = json.find("choices");
  if (choices == json.end() || !choices->is_array() || choices->empty())
    throw Error(ErrorKind::MalformedResponse, "response has no choices array");
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string())
    throw Error(ErrorKind::MalformedResponse, "first choice has no message content");
  return first["message"]["content"].get<std::string>();
}

HttpGeneratorClient::HttpGeneratorClient(HttpGeneratorConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      gate_(config_.max_in_flight) {
  if (config_.max_attempts < 1) throw Error(ErrorKind::InvalidArgument, "max_attempts must be >= 1");
  std::tie(origin_, path_) = split_url(config_.base_url);
  path_ += "/v1/chat/completions";
}

GeneratorResponse HttpGeneratorClient::complete(const GeneratorRequest& request) {
  request.validate();
  const std::string body = build_chat_body(request, config_.image_transport).dump();
  const auto delays = backoff_schedule(config_.max_attempts, config_.backoff_base);
  const auto pass = gate_.enter();

  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(request.timeout_s > 0 ? request.timeout_s
                                                                           : config_.timeout_s);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(micros);
  client.set_read_timeout(micros);
  client.set_write_timeout(micros);
  httplib::Headers headers;
  if (!config_.bearer_token.empty())
    headers.emplace("Authorization", "Bearer " + config_.bearer_token);

  std::string last_failure;
  int last_status = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    auto result = client.Post(path_, headers, body, "application/json");
    if (result && result->status == 200) {
      GeneratorResponse response;
      response.text = extract_completion_text(result->body);
      response.transport_retries = attempt - 1;
      response.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return response;
    }
    if (result && result->status < 500)
      throw HttpStatusError(result->status, "generator returned HTTP " +
                                                std::to_string(result->status));
    last_status = result ? result->status : 0;
    last_failure = result ? "HTTP " + std::to_string(result->status)
                          : httplib::to_string(result.error());
    if (attempt < config_.max_attempts) sleeper_(delays[static_cast<std::size_t>(attempt - 1)]);
  }
  if (last_status != 0)
    throw HttpStatusError(last_status, "generator returned HTTP " + std::to_string(last_status) +
                                           " on all " + std::to_string(config_.max_attempts) +
                                           " attempts");
  throw Error(ErrorKind::TransportError, "generator unreachable after " +
                                             std::to_string(config_.max_attempts) +
                                             " attempts: " + last_failure);
}

MockGenerator::MockGenerator(std::vector<MockStep> script) : script_(std::move(script)) {
  if (script_.empty()) throw Error(ErrorKind::InvalidArgument, "mock script is empty");
}

GeneratorResponse MockGenerator::complete(const GeneratorRequest& request) {
  std::lock_guard lock(mutex_);
  if (requests_.size() >= script_.size())
    throw Error(ErrorKind::ScriptExhausted, "mock generator called " +
                                                std::to_string(requests_.size() + 1) +
                                                " times with a script of " +
                                                std::to_string(script_.size()));
  const MockStep& step = script_[requests_.size()];
  requests_.push_back(request);
  if (step.fails) throw Error(step.failure, step.text);
  return {step.text, 0.0, 0};
}

int MockGenerator::call_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(requests_.size());
}

std::vector<GeneratorRequest> MockGenerator::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::unique_ptr<MockGenerator> mock_generator(std::vector<MockStep> script) {
  return std::make_unique<MockGenerator>(std::move(script));
}

GeneratorResponse TemplateGenerator::complete(const GeneratorRequest& request) {
  request.validate();
  constexpr std::string_view kLead = "following subject: ";
  std::string subject = "scene";
  if (const auto at = request.prompt.find(kLead); at != std::string::npos) {
    const auto begin = at + kLead.size();
    const auto end = request.prompt.find(", which is visible", begin);
    subject = request.prompt.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
  }
  return {"Question: Where is the " + subject + " in this image? Answer: The " + subject +
              " is visible in the image.",
          0.0, 0};
}

std::unique_ptr<GeneratorClient> make_generator(const HttpGeneratorConfig& config) {
  if (config.base_url.rfind("mock://", 0) == 0) return std::make_unique<TemplateGenerator>();
  return std::make_unique<HttpGeneratorClient>(config);
}

}  // namespace earthforge
