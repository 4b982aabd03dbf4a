// SPDX-License-Identifier: Apache-2.0
#include "earthforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace earthforge {
namespace {

using json = nlohmann::json;

template <typename T>
T as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::SchemaViolation, "config key '" + key + "' has the wrong type");
  }
}

/// Section visitor: every key must be consumed by `apply`.
template <typename Apply>
void each_key(const json& doc, const std::string& section, Apply apply) {
  if (!doc.is_object())
    throw Error(ErrorKind::SchemaViolation, "config section [" + section + "] must be a table");
  for (const auto& [key, value] : doc.items())
    if (!apply(key, value))
      throw Error(ErrorKind::SchemaViolation, "unknown config key '" + section + "." + key + "'");
}

ReduceStrategy parse_reduce(const std::string& s) {
  if (s == "bilinear") return ReduceStrategy::Bilinear;
  if (s == "average") return ReduceStrategy::Average;
  throw Error(ErrorKind::SchemaViolation, "fusion.reduce must be \"bilinear\" or \"average\"");
}

Aggregate parse_aggregate(const std::string& s) {
  if (s == "concat") return Aggregate::Concat;
  if (s == "mean") return Aggregate::Mean;
  throw Error(ErrorKind::SchemaViolation, "fusion.aggregate must be \"concat\" or \"mean\"");
}

UnknownLabelPolicy parse_policy(const std::string& s) {
  if (s == "error") return UnknownLabelPolicy::Error;
  if (s == "count-as-wrong") return UnknownLabelPolicy::CountAsWrong;
  throw Error(ErrorKind::SchemaViolation, "metrics.unknown_labels must be \"error\" or \"count-as-wrong\"");
}

double parse_double(const std::string& text, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " is not a number: '" + text + "'");
  return v;
}

}  // namespace

void AppConfig::validate() const {
  const auto range = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidRange, what);
  };
  range(generator.timeout_s > 0, "generator timeout must be positive");
  range(generator.max_tokens > 0, "generator max_tokens must be positive");
  range(generator.max_attempts >= 1, "generator max_attempts must be >= 1");
  range(generator.backoff_base.count() >= 0, "generator backoff must be >= 0");
  range(generator.max_in_flight >= 1, "generator max_in_flight must be >= 1");
  range(min_labels >= 1, "min_labels must be >= 1");
  image_filter.validate();
  range(max_retries >= 1, "max_retries must be >= 1");
  range(max_subjects >= 1, "max_subjects must be >= 1");
  tiler.validate();
  range(fusion.reduced_rows >= 1 && fusion.reduced_cols >= 1, "reduced grid must be at least 1x1");
  range(fusion.tokens_per_tile >= 1, "tokens_per_tile must be >= 1");
  range(fusion.max_timesteps >= 1, "max_timesteps must be >= 1");
  range(iou > 0 && iou < 1, "iou must lie in (0,1)");
  range(jobs >= 0, "jobs must be >= 0");
}

void apply_config_json(AppConfig& c, const json& doc) {
  each_key(doc, "", [&](const std::string& section, const json& body) {
    if (section == "generator") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        const std::string key = section + "." + k;
        if (k == "url") c.generator.base_url = as<std::string>(v, key);
        else if (k == "model") c.generator.model = as<std::string>(v, key);
        else if (k == "timeout_s") c.generator.timeout_s = as<double>(v, key);
        else if (k == "max_tokens") c.generator.max_tokens = as<int>(v, key);
        else if (k == "max_attempts") c.generator.max_attempts = as<int>(v, key);
        else if (k == "backoff_ms") c.generator.backoff_base = std::chrono::milliseconds(as<long>(v, key));
        else if (k == "max_in_flight") c.generator.max_in_flight = as<int>(v, key);
        else if (k == "image_transport") {
          const auto t = as<std::string>(v, key);
          if (t != "base64" && t != "url")
            throw Error(ErrorKind::SchemaViolation, "generator.image_transport must be \"base64\" or \"url\"");
          c.generator.image_transport = t == "url" ? ImageTransport::Url : ImageTransport::Base64;
        } else return false;
        return true;
      });
    } else if (section == "filter") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "min_labels") c.min_labels = as<int>(v, "filter.min_labels");
        else if (k == "lum_max") c.image_filter.lum_max = as<double>(v, "filter.lum_max");
        else if (k == "cov_min") c.image_filter.cov_min = as<double>(v, "filter.cov_min");
        else return false;
        return true;
      });
    } else if (section == "generation") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "max_retries") c.max_retries = as<int>(v, "generation.max_retries");
        else if (k == "exemplar") c.exemplar = as<std::string>(v, "generation.exemplar");
        else if (k == "max_subjects") c.max_subjects = as<int>(v, "generation.max_subjects");
        else return false;
        return true;
      });
    } else if (section == "tiler") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "tile_size") c.tiler.tile_size = as<Index>(v, "tiler.tile_size");
        else if (k == "min_tiles") c.tiler.min_tiles = as<int>(v, "tiler.min_tiles");
        else if (k == "max_tiles") c.tiler.max_tiles = as<int>(v, "tiler.max_tiles");
        else if (k == "use_thumbnail") c.tiler.use_thumbnail = as<bool>(v, "tiler.use_thumbnail");
        else return false;
        return true;
      });
    } else if (section == "fusion") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "reduce") c.fusion.reduce_strategy = parse_reduce(as<std::string>(v, "fusion.reduce"));
        else if (k == "reduced_rows") c.fusion.reduced_rows = as<Index>(v, "fusion.reduced_rows");
        else if (k == "reduced_cols") c.fusion.reduced_cols = as<Index>(v, "fusion.reduced_cols");
        else if (k == "aggregate") c.fusion.aggregate = parse_aggregate(as<std::string>(v, "fusion.aggregate"));
        else if (k == "tokens_per_tile") c.fusion.tokens_per_tile = as<Index>(v, "fusion.tokens_per_tile");
        else if (k == "max_timesteps") c.fusion.max_timesteps = as<int>(v, "fusion.max_timesteps");
        else return false;
        return true;
      });
    } else if (section == "metrics") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "iou") c.iou = as<double>(v, "metrics.iou");
        else if (k == "unknown_labels") c.unknown_labels = parse_policy(as<std::string>(v, "metrics.unknown_labels"));
        else return false;
        return true;
      });
    } else if (section == "run") {
      each_key(body, section, [&](const std::string& k, const json& v) {
        if (k == "jobs") c.jobs = as<int>(v, "run.jobs");
        else if (k == "seed") c.seed = as<std::uint64_t>(v, "run.seed");
        else return false;
        return true;
      });
    } else {
      throw Error(ErrorKind::SchemaViolation, "unknown config section [" + section + "]");
    }
    return true;
  });
}

void apply_config_toml(AppConfig& config, std::string_view toml_text) {
  toml::table table;
  try {
    table = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream where;
    where << e.source().begin;
    throw Error(ErrorKind::ParseError, "config: " + std::string(e.description()) + " at " + where.str());
  }
  std::ostringstream as_json;
  as_json << toml::json_formatter{table};
  apply_config_json(config, json::parse(as_json.str()));
}

void apply_config_file(AppConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (path.extension() == ".json") {
    const json doc = json::parse(text.str(), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::ParseError, "config " + path.string() + " is not JSON");
    apply_config_json(config, doc);
  } else {
    apply_config_toml(config, text.str());
  }
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
  };
}

void apply_env(AppConfig& config, const EnvLookup& env) {
  if (auto v = env("GENERATOR_URL")) config.generator.base_url = *v;
  if (auto v = env("GENERATOR_MODEL")) config.generator.model = *v;
  if (auto v = env("GENERATOR_TIMEOUT_S")) config.generator.timeout_s = parse_double(*v, "GENERATOR_TIMEOUT_S");
  if (auto v = env("GENERATOR_TOKEN")) config.generator.bearer_token = *v;
}

nlohmann::ordered_json config_to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["generator"] = {
      {"url", c.generator.base_url},
      {"model", c.generator.model},
      {"timeout_s", c.generator.timeout_s},
      {"max_tokens", c.generator.max_tokens},
      {"max_attempts", c.generator.max_attempts},
      {"backoff_ms", c.generator.backoff_base.count()},
      {"max_in_flight", c.generator.max_in_flight},
      {"image_transport", c.generator.image_transport == ImageTransport::Url ? "url" : "base64"},
      {"token", c.generator.bearer_token.empty() ? "absent" : "present"}};
  j["filter"] = {{"min_labels", c.min_labels},
                 {"lum_max", c.image_filter.lum_max},
                 {"cov_min", c.image_filter.cov_min}};
  j["generation"] = {{"max_retries", c.max_retries},
                     {"exemplar", c.exemplar},
                     {"max_subjects", c.max_subjects}};
  j["tiler"] = {{"tile_size", c.tiler.tile_size},
                {"min_tiles", c.tiler.min_tiles},
                {"max_tiles", c.tiler.max_tiles},
                {"use_thumbnail", c.tiler.use_thumbnail}};
  j["fusion"] = {{"reduce", c.fusion.reduce_strategy == ReduceStrategy::Bilinear ? "bilinear" : "average"},
                 {"reduced_rows", c.fusion.reduced_rows},
                 {"reduced_cols", c.fusion.reduced_cols},
                 {"aggregate", c.fusion.aggregate == Aggregate::Concat ? "concat" : "mean"},
                 {"tokens_per_tile", c.fusion.tokens_per_tile},
                 {"max_timesteps", c.fusion.max_timesteps}};
  j["metrics"] = {{"iou", c.iou},
                  {"unknown_labels",
                   c.unknown_labels == UnknownLabelPolicy::Error ? "error" : "count-as-wrong"}};
  // Worker count is left out: it never changes results.
  j["run"] = {{"seed", c.seed}};
  return j;
}

}  // namespace earthforge
