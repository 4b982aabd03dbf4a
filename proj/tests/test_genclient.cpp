// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <atomic>
#include <thread>

#include "earthforge/genclient.hpp"
#include "fixtures.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"
#include "json.hpp"

using namespace earthforge;
using namespace std::chrono_literals;

namespace {

/// Chat-completions stand-in on a loopback port. `handler` sees the parsed
/// request body and the attempt number (1-based).
class FakeServer {
 public:
  using Handler = std::function<void(const nlohmann::json&, int, httplib::Response&)>;

  explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/api/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      handler_(nlohmann::json::parse(req.body), ++hits_, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api"; }
  int hits() const { return hits_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  Handler handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_auth_;
};

std::string completion(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

GeneratorRequest request_for(std::vector<std::string> images = {}) {
  GeneratorRequest r;
  r.model = "m";
  r.prompt = "hello";
  r.image_refs = std::move(images);
  r.timeout_s = 5;
  return r;
}

}  // namespace

TEST_CASE("backoff doubles from the base") {
  const auto s = backoff_schedule(4, 500ms);
  CHECK(s == std::vector<std::chrono::milliseconds>{500ms, 1000ms, 2000ms});
  CHECK(backoff_schedule(1, 500ms).empty());
}

TEST_CASE("chat body layout") {
  fixtures::TempDir dir("body");
  fixtures::spit(dir / "a.png", std::string("\x89PNG", 4));
  const auto req = request_for({(dir / "a.png").string()});
  const auto body = build_chat_body(req, ImageTransport::Base64);
  CHECK(body["model"] == "m");
  CHECK(body["max_tokens"] == 512);
  const auto& content = body["messages"][0]["content"];
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(content[0]["type"] == "text");
  CHECK(content[0]["text"] == "hello");
  CHECK(content[1]["image_url"]["url"] == "data:image/png;base64,iVBORw==");
  const auto by_url = build_chat_body(request_for({"https://x/y.jpg"}), ImageTransport::Url);
  CHECK(by_url["messages"][0]["content"][1]["image_url"]["url"] == "https://x/y.jpg");
}

TEST_CASE("completion text extraction") {
  CHECK(extract_completion_text(completion("hi")) == "hi");
  CHECK_THROWS_AS(extract_completion_text("{}"), Error);
  CHECK_THROWS_AS(extract_completion_text("not json"), Error);
}

TEST_CASE("http client success, retry and failure") {
  std::vector<std::chrono::milliseconds> slept;
  HttpGeneratorConfig cfg;
  cfg.max_attempts = 3;
  cfg.bearer_token = "tok";
  const auto sleeper = [&](std::chrono::milliseconds d) { slept.push_back(d); };

  SUBCASE("first call succeeds") {
    FakeServer server([](const nlohmann::json& body, int, httplib::Response& res) {
      res.set_content(completion("echo " + body["messages"][0]["content"][0]["text"].get<std::string>()),
                      "application/json");
    });
    cfg.base_url = server.url();
    HttpGeneratorClient client(cfg, sleeper);
    const auto r = client.complete(request_for());
    CHECK(r.text == "echo hello");
    CHECK(r.transport_retries == 0);
    CHECK(server.last_auth() == "Bearer tok");
    CHECK(slept.empty());
  }
  SUBCASE("5xx is retried") {
    FakeServer server([](const nlohmann::json&, int attempt, httplib::Response& res) {
      if (attempt < 3) res.status = 503;
      else res.set_content(completion("ok"), "application/json");
    });
    cfg.base_url = server.url();
    const auto r = HttpGeneratorClient(cfg, sleeper).complete(request_for());
    CHECK(r.text == "ok");
    CHECK(r.transport_retries == 2);
    CHECK(slept == std::vector<std::chrono::milliseconds>{500ms, 1000ms});
  }
  SUBCASE("persistent 5xx surfaces its status after the last attempt") {
    FakeServer server([](const nlohmann::json&, int, httplib::Response& res) { res.status = 502; });
    cfg.base_url = server.url();
    try {
      HttpGeneratorClient(cfg, sleeper).complete(request_for());
      FAIL("expected HttpError");
    } catch (const HttpStatusError& e) {
      CHECK(e.kind() == ErrorKind::HttpError);
      CHECK(e.status() == 502);
    }
    CHECK(server.hits() == 3);
    CHECK(slept.size() == 2);
  }
  SUBCASE("4xx fails at once") {
    FakeServer server([](const nlohmann::json&, int, httplib::Response& res) { res.status = 401; });
    cfg.base_url = server.url();
    try {
      HttpGeneratorClient(cfg, sleeper).complete(request_for());
      FAIL("expected HttpError");
    } catch (const HttpStatusError& e) {
      CHECK(e.status() == 401);
    }
    CHECK(server.hits() == 1);
  }
  SUBCASE("malformed body") {
    FakeServer server([](const nlohmann::json&, int, httplib::Response& res) {
      res.set_content("{\"choices\":[]}", "application/json");
    });
    cfg.base_url = server.url();
    try {
      HttpGeneratorClient(cfg, sleeper).complete(request_for());
      FAIL("expected MalformedResponse");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MalformedResponse);
    }
  }
  SUBCASE("nobody listening") {
    cfg.base_url = "http://127.0.0.1:1";
    try {
      HttpGeneratorClient(cfg, sleeper).complete(request_for());
      FAIL("expected TransportError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TransportError);
    }
    CHECK(slept.size() == 2);
  }
}

TEST_CASE("admission gate caps concurrency") {
  AdmissionGate gate(2);
  std::atomic<int> peak{0}, now{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      const auto pass = gate.enter();
      const int n = ++now;
      int p = peak.load();
      while (n > p && !peak.compare_exchange_weak(p, n)) {
      }
      std::this_thread::sleep_for(5ms);
      --now;
    });
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(gate.in_flight() == 0);
  CHECK_THROWS_AS(AdmissionGate(0), Error);
}

TEST_CASE("mock and template generators") {
  MockGenerator mock({MockStep::reply("a"), MockStep::fail(ErrorKind::HttpError)});
  CHECK(mock.complete(request_for()).text == "a");
  CHECK_THROWS_AS(mock.complete(request_for()), Error);
  try {
    mock.complete(request_for());
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScriptExhausted);
  }
  auto gen = make_generator(HttpGeneratorConfig{"mock://"});
  GeneratorRequest req = request_for();
  req.prompt = "... the following subject: pond, which is visible ...";
  CHECK(gen->complete(req).text == "Question: Where is the pond in this image? Answer: The pond is visible in the image.");
  req.prompt.clear();
  CHECK_THROWS_AS(gen->complete(req), Error);
}
