// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "earthforge/curate.hpp"
#include "earthforge/evaluate.hpp"
#include "earthforge/fusion.hpp"
#include "earthforge/instruct.hpp"
#include "earthforge/raster_io.hpp"
#include "earthforge/tiler.hpp"

namespace earthforge::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

/// Flags shared by every subcommand.
struct CommonFlags {
  std::string config_toml;
  std::string config_json;
  std::optional<int> jobs;
  bool to_stdout = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_toml, "TOML config file (earthdial.toml)");
  cmd->add_option("--config-json", f.config_json, "JSON config file, same schema as the TOML file");
  cmd->add_option("--jobs", f.jobs, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--stdout", f.to_stdout, "Write the result artifact to standard output");
}

/// defaults < config file < environment; flags are applied by the caller.
AppConfig base_config(const CommonFlags& f, const EnvLookup& env) {
  AppConfig config;
  if (!f.config_toml.empty()) apply_config_file(config, f.config_toml);
  if (!f.config_json.empty()) {
    std::filesystem::path p(f.config_json);
    const std::string text = [&] {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw Error(ErrorKind::IoError, "cannot read config " + p.string());
      std::ostringstream s;
      s << in.rdbuf();
      return s.str();
    }();
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::ParseError, "config " + p.string() + " is not JSON");
    apply_config_json(config, doc);
  }
  apply_env(config, env);
  if (f.jobs) config.jobs = *f.jobs;
  return config;
}

template <typename T>
void override(T& target, const std::optional<T>& flag) {
  if (flag) target = *flag;
}

void emit(const std::string& text, const std::string& path, bool to_stdout, std::ostream& out) {
  if (!path.empty()) write_file_atomic(path, text);
  if (to_stdout || path.empty()) out << text;
}

std::pair<Index, Index> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) {
      std::size_t a = 0, b = 0;
      const long rows = std::stol(text.substr(0, x), &a);
      const long cols = std::stol(text.substr(x + 1), &b);
      if (a == x && b == text.size() - x - 1 && rows > 0 && cols > 0) return {rows, cols};
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidArgument, "--reduced expects ROWSxCOLS, got '" + text + "'");
}

// ---- curate ----------------------------------------------------------------

struct CurateFlags {
  std::string samples;
  std::optional<int> min_labels;
  std::optional<double> lum_max;
  std::optional<double> cov_min;
  std::optional<std::string> generator_url;
  std::optional<std::string> generator_model;
  std::optional<int> max_retries;
  std::optional<int> max_subjects;
  std::string out;
  std::string manifest;
  std::optional<std::size_t> sample_audit;
  std::optional<std::uint64_t> seed;
  bool filter_only = false;
};

int run_curate(const CommonFlags& common, const CurateFlags& f, const EnvLookup& env, std::ostream& out,
               std::ostream& err) {
  AppConfig config = base_config(common, env);
  override(config.min_labels, f.min_labels);
  override(config.image_filter.lum_max, f.lum_max);
  override(config.image_filter.cov_min, f.cov_min);
  override(config.generator.base_url, f.generator_url);
  override(config.generator.model, f.generator_model);
  override(config.max_retries, f.max_retries);
  override(config.max_subjects, f.max_subjects);
  override(config.seed, f.seed);
  config.validate();
  if (f.out.empty() && !common.to_stdout)
    throw Error(ErrorKind::InvalidArgument, "curate needs --out or --stdout");

  const std::filesystem::path dir(f.samples);
  const auto samples = load_samples_jsonl(samples_file(dir));
  std::unique_ptr<GeneratorClient> client;
  if (!f.filter_only) {
    if (config.generator.base_url.empty())
      throw Error(ErrorKind::InvalidArgument,
                  "no generator URL: pass --generator-url, set GENERATOR_URL, or use --filter-only");
    client = make_generator(config.generator);
  }
  err << "curate: " << samples.size() << " samples from " << samples_file(dir).string() << "\n";
  const CurationResult result = curate(samples, dir, config, client.get());
  err << "curate: kept " << result.counts.kept_samples << ", records " << result.counts.records
      << ", format-exhausted " << result.counts.format_exhausted << "\n";

  std::string body;
  if (f.filter_only) {
    for (const auto& s : result.kept) body += sample_to_json_line(s) + "\n";
  } else {
    for (const auto& r : result.records) body += record_to_json_line(r) + "\n";
  }
  emit(body, f.out, common.to_stdout, out);
  if (!f.manifest.empty()) write_file_atomic(f.manifest, manifest_json(result, config, f.filter_only).dump(2) + "\n");
  if (f.sample_audit && !f.filter_only) {
    if (f.out.empty()) throw Error(ErrorKind::InvalidArgument, "--sample-audit needs --out");
    std::string audit;
    for (const auto& r : audit_sample(result.records, *f.sample_audit, config.seed))
      audit += record_to_json_line(r) + "\n";
    write_file_atomic(f.out + ".audit.jsonl", audit);
  }
  return kOk;
}

// ---- plan-tiles ------------------------------------------------------------

struct TilerFlags {
  std::optional<int> min_tiles;
  std::optional<int> max_tiles;
  std::optional<Index> tile_size;
  bool no_thumbnail = false;
  bool inference = false;
};

void add_tiler_flags(CLI::App* cmd, TilerFlags& t) {
  cmd->add_option("--min-tiles", t.min_tiles, "Fewest tiles a grid may use");
  cmd->add_option("--max-tiles", t.max_tiles, "Most tiles a grid may use");
  cmd->add_option("--tile-size", t.tile_size, "Tile edge in pixels");
  cmd->add_flag("--no-thumbnail", t.no_thumbnail, "Never append the whole-image thumbnail");
  cmd->add_flag("--inference", t.inference, "Use the inference tile budget (up to 40 tiles)");
}

void apply_tiler_flags(AppConfig& config, const TilerFlags& t) {
  if (t.inference) config.tiler.max_tiles = TilerConfig::inference().max_tiles;
  override(config.tiler.min_tiles, t.min_tiles);
  override(config.tiler.max_tiles, t.max_tiles);
  override(config.tiler.tile_size, t.tile_size);
  if (t.no_thumbnail) config.tiler.use_thumbnail = false;
}

struct PlanFlags {
  std::optional<Index> width;
  std::optional<Index> height;
  std::string image;
  std::string out;
  TilerFlags tiler;
};

ordered_json plan_json(const TilePlan& plan) {
  ordered_json crops = ordered_json::array();
  for (const auto& r : plan.crop_rects) crops.push_back({r.x, r.y, r.w, r.h});
  ordered_json j;
  j["source"] = {{"width", plan.source_width}, {"height", plan.source_height}};
  j["grid"] = {{"cols", plan.cols}, {"rows", plan.rows}};
  j["tile_size"] = plan.tile_size;
  j["resized"] = {{"width", plan.resized_width}, {"height", plan.resized_height}};
  j["crops"] = std::move(crops);
  j["thumbnail"] = plan.thumbnail_included;
  j["image_count"] = plan.image_count();
  return j;
}

int run_plan(const CommonFlags& common, const PlanFlags& f, const EnvLookup& env, std::ostream& out) {
  AppConfig config = base_config(common, env);
  apply_tiler_flags(config, f.tiler);
  config.validate();
  Index width = 0, height = 0;
  if (!f.image.empty()) {
    const Raster raster = load_raster(f.image);
    width = raster.width();
    height = raster.height();
  } else {
    if (!f.width || !f.height)
      throw Error(ErrorKind::InvalidArgument, "plan-tiles needs --width and --height, or --image");
    width = *f.width;
    height = *f.height;
  }
  ordered_json j;
  j["schema"] = "earthdial-tileplan/1";
  j["config"] = {{"tiler", config_to_json(config)["tiler"]}};
  const ordered_json plan = plan_json(plan_tiles(width, height, config.tiler));
  for (const auto& [k, v] : plan.items()) j[k] = v;
  emit(j.dump(2) + "\n", f.out, common.to_stdout, out);
  return kOk;
}

// ---- tokens ----------------------------------------------------------------

struct TokenFlags {
  Index bands = 3;
  std::optional<Index> width;
  std::optional<Index> height;
  int timesteps = 1;
  std::optional<std::string> reduce;
  std::optional<std::string> reduced;
  std::optional<std::string> aggregate;
  std::optional<Index> tokens_per_tile;
  std::string out;
  TilerFlags tiler;
};

int run_tokens(const CommonFlags& common, const TokenFlags& f, const EnvLookup& env, std::ostream& out) {
  AppConfig config = base_config(common, env);
  apply_tiler_flags(config, f.tiler);
  if (f.reduce) {
    if (*f.reduce != "bilinear" && *f.reduce != "average")
      throw Error(ErrorKind::InvalidArgument, "--reduce must be bilinear or average");
    config.fusion.reduce_strategy = *f.reduce == "average" ? ReduceStrategy::Average : ReduceStrategy::Bilinear;
  }
  if (f.reduced) std::tie(config.fusion.reduced_rows, config.fusion.reduced_cols) = parse_grid(*f.reduced);
  if (f.aggregate) {
    if (*f.aggregate != "concat" && *f.aggregate != "mean")
      throw Error(ErrorKind::InvalidArgument, "--aggregate must be concat or mean");
    config.fusion.aggregate = *f.aggregate == "mean" ? Aggregate::Mean : Aggregate::Concat;
  }
  override(config.fusion.tokens_per_tile, f.tokens_per_tile);
  config.validate();
  if (f.bands < 1) throw Error(ErrorKind::InvalidArgument, "--bands must be >= 1");
  if (f.timesteps < 1) throw Error(ErrorKind::InvalidArgument, "--timesteps must be >= 1");
  const Index width = f.width.value_or(config.tiler.tile_size);
  const Index height = f.height.value_or(config.tiler.tile_size);

  const TilePlan plan = plan_tiles(width, height, config.tiler);
  const auto segments = predict_layout(plan, f.bands, f.timesteps, config.fusion);
  ordered_json layout = ordered_json::array();
  for (const auto& s : segments)
    layout.push_back({{"time", s.provenance.time_index},
                      {"tile", s.provenance.tile_index},
                      {"group", s.provenance.group_index},
                      {"count", s.count}});
  ordered_json j;
  j["schema"] = "earthdial-tokens/1";
  const auto echo = config_to_json(config);
  j["config"] = {{"tiler", echo["tiler"]}, {"fusion", echo["fusion"]}};
  j["input"] = {{"bands", f.bands}, {"width", width}, {"height", height}, {"timesteps", f.timesteps}};
  j["path"] = f.bands == 3 ? "tiled" : "channel-groups";
  j["groups"] = f.bands == 3 ? 1 : static_cast<long>(group_channels(f.bands).size());
  j["tokens"] = token_budget(plan, f.bands, f.timesteps, config.fusion);
  j["layout"] = std::move(layout);
  emit(j.dump(2) + "\n", f.out, common.to_stdout, out);
  return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalFlags {
  std::string task;
  std::string preds;
  std::string gts;
  std::optional<double> iou;
  std::string report;
  bool strict_labels = false;
  std::vector<std::string> classes;
};

int run_eval(const CommonFlags& common, const EvalFlags& f, const EnvLookup& env, std::ostream& out,
             std::ostream& err) {
  AppConfig config = base_config(common, env);
  override(config.iou, f.iou);
  if (f.strict_labels) config.unknown_labels = UnknownLabelPolicy::Error;
  config.validate();
  const auto task = parse_eval_task(f.task);
  if (!task) throw Error(ErrorKind::InvalidArgument, "unknown --task '" + f.task + "'");
  EvalOptions options;
  options.iou = config.iou;
  options.unknown_labels = config.unknown_labels;
  options.classes = f.classes;
  ordered_json report = evaluate_files(*task, f.preds, f.gts, options);
  report["config"] = config_to_json(config)["metrics"];
  err << "eval: " << f.task << " over " << report["sample_count"].get<std::size_t>() << " samples\n";
  emit(report.dump(2) + "\n", f.report, common.to_stdout, out);
  return kOk;
}

// ---- stats -----------------------------------------------------------------

struct StatsFlags {
  std::string records;
  bool json = false;
  std::string out;
};

int run_stats(const CommonFlags& common, const StatsFlags& f, std::ostream& out) {
  const auto records = load_jsonl(f.records);
  const StageManifest manifest = assemble_stage_manifest(records);
  std::string text;
  if (f.json) {
    ordered_json stages = ordered_json::array();
    for (const auto& [key, count] : manifest.counts)
      stages.push_back({{"stage", key.stage}, {"dataset", key.dataset}, {"tags", key.tags}, {"records", count}});
    ordered_json j;
    j["schema"] = "earthdial-manifest/1";
    j["stages"] = std::move(stages);
    j["total"] = manifest.total();
    text = j.dump(2) + "\n";
  } else {
    text = render_manifest_table(manifest);
  }
  emit(text, f.out, common.to_stdout, out);
  return kOk;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view message, int code) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  err << j.dump() << "\n";
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::TransportError:
    case ErrorKind::HttpError:
    case ErrorKind::MalformedResponse: return kIo;
    default: return kValidation;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Geospatial instruction-dataset forge and evaluation toolkit", "earthforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "earthforge 0.1.0");

  CommonFlags common;

  CurateFlags curate_flags;
  auto* curate_cmd = app.add_subcommand("curate", "Filter labelled samples and generate instruction records");
  curate_cmd->add_option("--samples", curate_flags.samples, "Directory holding samples.jsonl and its images")->required();
  curate_cmd->add_option("--min-labels", curate_flags.min_labels, "Drop samples with fewer labels (default 3)");
  curate_cmd->add_option("--lum-max", curate_flags.lum_max, "Drop images brighter than this mean luminance (default 0.8)");
  curate_cmd->add_option("--cov-min", curate_flags.cov_min, "Drop images with less valid coverage (default 0.5)");
  curate_cmd->add_option("--generator-url", curate_flags.generator_url, "Chat-completions base URL, or mock:// for the offline responder");
  curate_cmd->add_option("--generator-model", curate_flags.generator_model, "Model name sent to the generator");
  curate_cmd->add_option("--max-retries", curate_flags.max_retries, "Generator calls allowed per record (default 5)");
  curate_cmd->add_option("--max-subjects", curate_flags.max_subjects, "Records generated per kept sample (default 1)");
  curate_cmd->add_option("--out", curate_flags.out, "Output JSONL: records, or kept samples with --filter-only");
  curate_cmd->add_option("--manifest", curate_flags.manifest, "Manifest JSON with curation counts and stage totals");
  curate_cmd->add_option("--sample-audit", curate_flags.sample_audit, "Also write N randomly drawn records to <out>.audit.jsonl");
  curate_cmd->add_option("--seed", curate_flags.seed, "Seed for --sample-audit");
  curate_cmd->add_flag("--filter-only", curate_flags.filter_only, "Apply the filters without calling a generator");
  add_common(curate_cmd, common);

  PlanFlags plan_flags;
  auto* plan_cmd = app.add_subcommand("plan-tiles", "Choose the tile grid for an image");
  plan_cmd->add_option("--width", plan_flags.width, "Image width in pixels")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--height", plan_flags.height, "Image height in pixels")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--image", plan_flags.image, "Read the size from a .png or .bgrid file");
  plan_cmd->add_option("--out", plan_flags.out, "Write the plan JSON here");
  add_tiler_flags(plan_cmd, plan_flags.tiler);
  add_common(plan_cmd, common);

  TokenFlags token_flags;
  auto* tokens_cmd = app.add_subcommand("tokens", "Predict the visual token budget and layout");
  tokens_cmd->add_option("--bands", token_flags.bands, "Band count (3: tiled RGB path)")->capture_default_str();
  tokens_cmd->add_option("--width", token_flags.width, "Image width (default: one tile)");
  tokens_cmd->add_option("--height", token_flags.height, "Image height (default: one tile)");
  tokens_cmd->add_option("--timesteps", token_flags.timesteps, "Images in the temporal sequence")->capture_default_str();
  tokens_cmd->add_option("--reduce", token_flags.reduce, "bilinear or average");
  tokens_cmd->add_option("--reduced", token_flags.reduced, "Reduced token grid, ROWSxCOLS (default 4x4)");
  tokens_cmd->add_option("--aggregate", token_flags.aggregate, "concat or mean");
  tokens_cmd->add_option("--tokens-per-tile", token_flags.tokens_per_tile, "Encoder tokens per RGB tile (default 256)");
  tokens_cmd->add_option("--out", token_flags.out, "Write the budget JSON here");
  add_tiler_flags(tokens_cmd, token_flags.tiler);
  add_common(tokens_cmd, common);

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--task", eval_flags.task, "caption|region-caption|grounding|detect|classify|multilabel|vqa|changedet")->required();
  eval_cmd->add_option("--preds", eval_flags.preds, "Predictions JSONL")->required();
  eval_cmd->add_option("--gts", eval_flags.gts, "Ground-truth JSONL")->required();
  eval_cmd->add_option("--iou", eval_flags.iou, "IoU threshold for detection tasks (default 0.5)");
  eval_cmd->add_option("--report", eval_flags.report, "Write the report JSON here");
  eval_cmd->add_flag("--strict-labels", eval_flags.strict_labels, "Fail on predicted labels outside the class set");
  eval_cmd->add_option("--classes", eval_flags.classes, "Closed class set for classify (default: labels in the ground truth)");
  add_common(eval_cmd, common);

  StatsFlags stats_flags;
  auto* stats_cmd = app.add_subcommand("stats", "Per-stage record counts of an instruction JSONL file");
  stats_cmd->add_option("--records", stats_flags.records, "Instruction records JSONL")->required();
  stats_cmd->add_flag("--json", stats_flags.json, "Print the manifest as JSON instead of a table");
  stats_cmd->add_option("--out", stats_flags.out, "Write the manifest here");
  add_common(stats_cmd, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help, --version
    print_error(err, "UsageError", e.what(), kValidation);
    return kValidation;
  }

  try {
    if (curate_cmd->parsed()) return run_curate(common, curate_flags, env, out, err);
    if (plan_cmd->parsed()) return run_plan(common, plan_flags, env, out);
    if (tokens_cmd->parsed()) return run_tokens(common, token_flags, env, out);
    if (eval_cmd->parsed()) return run_eval(common, eval_flags, env, out, err);
    if (stats_cmd->parsed()) return run_stats(common, stats_flags, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    print_error(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what(), kIo);
    return kIo;
  }
  return kValidation;
}

}  // namespace earthforge::cli
