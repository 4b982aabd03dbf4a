// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <map>

#include "earthforge/config.hpp"
#include "earthforge/curate.hpp"
#include "fixtures.hpp"

using namespace earthforge;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const char* name) -> std::optional<std::string> {
    const auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an earthforge::Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("toml overrides defaults") {
  AppConfig c;
  apply_config_toml(c, R"(
[generator]
url = "http://localhost:9000"
max_attempts = 4

[filter]
lum_max = 0.7

[fusion]
aggregate = "mean"
reduced_rows = 2
reduced_cols = 2

[run]
seed = 7
)");
  CHECK(c.generator.base_url == "http://localhost:9000");
  CHECK(c.generator.max_attempts == 4);
  CHECK(c.image_filter.lum_max == 0.7);
  CHECK(c.image_filter.cov_min == 0.5);
  CHECK(c.fusion.aggregate == Aggregate::Mean);
  CHECK(c.fusion.reduced_rows == 2);
  CHECK(c.seed == 7);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("typos and bad values are rejected") {
  AppConfig c;
  CHECK(kind_of([&] { apply_config_toml(c, "[filter]\nlum_mx = 0.5\n"); }) == ErrorKind::SchemaViolation);
  CHECK(kind_of([&] { apply_config_toml(c, "[filtre]\nlum_max = 0.5\n"); }) == ErrorKind::SchemaViolation);
  CHECK(kind_of([&] { apply_config_toml(c, "[filter\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { apply_config_json(c, nlohmann::json::parse(R"({"filter":{"lum_max":"high"}})")); }) ==
        ErrorKind::SchemaViolation);
  AppConfig bad;
  bad.image_filter.cov_min = 2.0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidRange);
}

TEST_CASE("precedence: defaults < file < env") {
  fixtures::TempDir dir("cfg");
  fixtures::spit(dir / "a.json", R"({"generator":{"url":"http://file","model":"file-model"},"metrics":{"iou":0.7}})");
  AppConfig c;
  apply_config_file(c, dir / "a.json");
  CHECK(c.generator.base_url == "http://file");
  apply_env(c, env_of({{"GENERATOR_URL", "http://env"}, {"GENERATOR_TIMEOUT_S", "12.5"}, {"GENERATOR_TOKEN", "s3cret"}}));
  CHECK(c.generator.base_url == "http://env");
  CHECK(c.generator.model == "file-model");
  CHECK(c.generator.timeout_s == 12.5);
  CHECK(c.iou == 0.7);
  CHECK(kind_of([&] { apply_env(c, env_of({{"GENERATOR_TIMEOUT_S", "soon"}})); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { apply_config_file(c, dir / "missing.toml"); }) == ErrorKind::IoError);
}

TEST_CASE("echo redacts the token and omits jobs") {
  AppConfig c;
  c.generator.bearer_token = "s3cret";
  c.jobs = 8;
  const auto j = config_to_json(c);
  CHECK(j["generator"]["token"] == "present");
  CHECK(j.dump().find("s3cret") == std::string::npos);
  CHECK_FALSE(j["run"].contains("jobs"));
}

TEST_CASE("parallel_for fills slots in index order and reports the first failure") {
  std::vector<int> out(100);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error("bad " + std::to_string(i));
    });
    FAIL("expected a failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "bad 7");
  }
}
