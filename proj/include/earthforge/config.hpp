// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

#include "earthforge/evaluate.hpp"
#include "earthforge/fusion.hpp"
#include "earthforge/genclient.hpp"
#include "earthforge/instruct.hpp"
#include "earthforge/tiler.hpp"

namespace earthforge {

/// Every tunable the CLI exposes, fully resolved. Layers apply in order
/// defaults < config file < environment < command-line flags.
struct AppConfig {
  HttpGeneratorConfig generator;
  int min_labels = 3;
  ImageFilter image_filter;
  int max_retries = 5;
  std::string exemplar = std::string(kDefaultExemplar);
  int max_subjects = 1;  // generated records per kept sample
  TilerConfig tiler;
  FusionConfig fusion;
  double iou = 0.5;
  UnknownLabelPolicy unknown_labels = UnknownLabelPolicy::CountAsWrong;
  int jobs = 0;  // 0: hardware concurrency
  std::uint64_t seed = 0;

  /// InvalidRange / InvalidArgument on any out-of-range value.
  void validate() const;
};

/// Applies a JSON document shaped like the TOML file:
///   [generator] url, model, timeout_s, max_tokens, max_attempts, backoff_ms,
///               max_in_flight, image_transport ("base64" | "url")
///   [filter]    min_labels, lum_max, cov_min
///   [generation] max_retries, exemplar, max_subjects
///   [tiler]     tile_size, min_tiles, max_tiles, use_thumbnail
///   [fusion]    reduce ("bilinear" | "average"), reduced_rows, reduced_cols,
///               aggregate ("concat" | "mean"), tokens_per_tile, max_timesteps
///   [metrics]   iou, unknown_labels ("error" | "count-as-wrong")
///   [run]       jobs, seed
/// Unknown sections or keys are rejected (SchemaViolation) so typos surface.
void apply_config_json(AppConfig& config, const nlohmann::json& doc);

/// Parses `earthdial.toml`-style text (ParseError on bad TOML).
void apply_config_toml(AppConfig& config, std::string_view toml_text);

void apply_config_file(AppConfig& config, const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
EnvLookup process_env();

/// GENERATOR_URL, GENERATOR_MODEL, GENERATOR_TIMEOUT_S and GENERATOR_TOKEN.
void apply_env(AppConfig& config, const EnvLookup& env);

/// The resolved configuration as echoed into artifacts. The bearer token
/// is reported only as present or absent.
nlohmann::ordered_json config_to_json(const AppConfig& config);

}  // namespace earthforge
