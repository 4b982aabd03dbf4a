// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "earthforge/genclient.hpp"
#include "earthforge/geometry.hpp"
#include "earthforge/raster.hpp"
#include "earthforge/tags.hpp"

namespace earthforge {

inline constexpr std::string_view kRecordSchema = "earthdial-instruct/1";
inline constexpr std::string_view kImagePlaceholder = "<ImageHere>";
inline constexpr std::string_view kDefaultExemplar =
    "Subject: parking lot. Question: How does the parking lot contribute to environmental "
    "sustainability? Answer: The parking lot in the lower left seems to be equipped with solar "
    "panel canopies, promoting renewable energy use.";

struct LabelGeometry {
  enum class Kind : std::uint8_t { Point, Polygon, Box };
  Kind kind = Kind::Point;
  /// Point: x,y. Polygon: x1,y1,x2,y2,... (>= 3 vertices). Box: x1,y1,x2,y2[,theta].
  std::vector<double> coords;

  friend bool operator==(const LabelGeometry&, const LabelGeometry&) = default;
};

std::string_view name(LabelGeometry::Kind kind) noexcept;

struct Label {
  std::string category;
  LabelGeometry geometry;
  std::string position;
  std::map<std::string, std::string> attributes;

  friend bool operator==(const Label&, const Label&) = default;
};

/// Source imagery plus its sparse annotations, the raw material for a
/// generated question/answer pair.
struct LabeledSample {
  std::string sample_id;
  std::vector<std::string> image_refs;
  std::string source;  // "NAIP", "Sentinel2", "Landsat", "SkyScript", "Sentinel1" or a dataset name
  std::vector<Label> labels;

  /// SchemaViolation on an empty id, no images, an empty category or a
  /// geometry with the wrong number of coordinates.
  void validate() const;

  /// Distinct label categories in first-appearance order.
  std::vector<std::string> keywords() const;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

enum class Role : std::uint8_t { User, Assistant };
std::string_view name(Role role) noexcept;

struct Turn {
  Role role = Role::User;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct InstructionRecord {
  std::string record_id;
  int stage = 1;
  std::string dataset;
  TaskKind task_kind = TaskKind::PretrainCaption;
  TagSet tags;
  std::vector<std::string> image_refs;
  std::vector<Turn> turns;

  /// SchemaViolation unless the id and images are present, turns alternate
  /// user/assistant starting with the user in complete pairs, and
  /// (stage, dataset, tags, task_kind) names a row of the stage table.
  void validate() const;

  /// The row this record is filed under; validate() guarantees it exists.
  const StageRow& row() const;

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

// ---- curation filters ------------------------------------------------------

/// Samples with at least `min_labels` labels, order preserved.
std::vector<LabeledSample> filter_labels(std::span<const LabeledSample> samples, int min_labels = 3);

struct ImageFilter {
  double lum_max = 0.8;
  double cov_min = 0.5;

  /// InvalidRange unless both thresholds lie in [0,1].
  void validate() const;
};

/// Precomputed statistics so large corpora need not re-read shared images.
struct ImageStats {
  double luminance = 0.0;
  double coverage = 0.0;
};

template <typename Scalar>
ImageStats image_stats(const BasicRaster<Scalar>& raster) {
  return {mean_luminance(raster), valid_coverage(raster)};
}

inline bool passes(const ImageStats& stats, const ImageFilter& filter) {
  return stats.luminance <= filter.lum_max && stats.coverage >= filter.cov_min;
}

/// keep <=> mean luminance <= lum_max and valid coverage >= cov_min.
template <typename Scalar>
bool filter_image(const BasicRaster<Scalar>& raster, const ImageFilter& filter = {}) {
  filter.validate();
  return passes(image_stats(raster), filter);
}

// ---- generation ------------------------------------------------------------

/// The generation prompt: image placeholder, then the instruction, the
/// exemplar, the sample's keyword list and the subject. UnknownSubject when
/// `subject` is not one of the sample's label categories.
std::string render_prompt(const LabeledSample& sample, std::string_view subject,
                          std::string_view exemplar = kDefaultExemplar);

struct QaPair {
  std::string question;
  std::string answer;
};

/// Exactly one "Question:" followed by exactly one "Answer:", both non-empty
/// after trimming. Text before "Question:" is ignored. FormatError otherwise.
QaPair validate_qa_format(std::string_view text);

struct GenerateOptions {
  int max_retries = 5;  // total generator calls allowed per record
  std::string model = "internlm-xcomposer2";
  std::string exemplar = std::string(kDefaultExemplar);
  int max_tokens = 512;
  double timeout_s = 60.0;
  std::string record_id;  // empty: "<sample_id>/<subject>"
};

/// Stage row a sample source is generated under: the stage-1 pretraining
/// rows for optical sources, the stage-3 SAR row for Sentinel1.
/// InvalidArgument for any other source.
const StageRow& generation_row(std::string_view source);

/// Prompts `client` until its reply passes validate_qa_format, resending
/// the same prompt, for at most `max_retries` calls. FormatExhausted when
/// every reply is malformed; client errors propagate unchanged.
InstructionRecord generate_record(const LabeledSample& sample, std::string_view subject,
                                  GeneratorClient& client, const GenerateOptions& options = {});

// ---- task templates --------------------------------------------------------

inline constexpr std::array<std::string_view, 3> kUhiClasses = {"cooler", "mildly hot",
                                                                "extremely hot"};
inline constexpr std::array<std::string_view, 6> kDisasterTypes = {
    "flood", "wind", "fire", "tsunami", "earthquake", "volcano"};

/// Inputs for the fixed per-task templates. Each task reads only the fields
/// it needs; see render_task_record.
struct TaskInputs {
  std::string record_id;
  std::vector<std::string> image_refs;
  std::optional<int> stage;        // default: the task's default row
  std::optional<std::string> dataset;
  std::optional<TagSet> tags;

  std::optional<std::string> class_label;   // classification, lcz, tree_species, uhi, disaster
  std::vector<std::string> class_options;   // classification: listed in the question
  std::optional<std::string> caption;       // pretrain_caption, caption, change_detection
  std::optional<std::string> object;        // detection: what to locate
  std::optional<std::string> referring;     // grounding: referring expression
  std::vector<RotatedBox> boxes;            // detection, grounding, methane
  std::optional<std::string> question;      // vqa
  std::optional<std::string> answer;        // vqa
  std::optional<bool> plume_present;        // methane
  std::optional<double> emission_rate_kg_h; // methane
  std::optional<std::string> uhi_factors;   // uhi follow-up turn
  std::optional<std::string> uhi_mitigation;// uhi follow-up turn
};

/// Deterministic record from the task's template. MissingField when a
/// required input is absent, InvalidClassLabel when a closed-vocabulary
/// label (uhi, disaster) is outside its vocabulary, SchemaViolation when
/// the stage/dataset/tag override names no table row.
InstructionRecord render_task_record(TaskKind kind, const TaskInputs& inputs);

// ---- manifests -------------------------------------------------------------

struct ManifestKey {
  int stage = 1;
  std::string dataset;
  std::string tags;  // row-specific printed form

  friend auto operator<=>(const ManifestKey&, const ManifestKey&) = default;
};

struct StageManifest {
  std::map<ManifestKey, std::uint64_t> counts;

  std::uint64_t total() const noexcept;
};

StageManifest assemble_stage_manifest(std::span<const InstructionRecord> records);

/// Fixed-width text table: stage, dataset, tags, count, with a total line.
std::string render_manifest_table(const StageManifest& manifest);

// ---- serialization ---------------------------------------------------------

/// Key order: schema, record_id, stage, dataset, task_kind, tags,
/// tags_display, image_refs, turns[{role, text}].
std::string record_to_json_line(const InstructionRecord& record);
/// ParseError on malformed JSON, a wrong schema or a record failing validate().
InstructionRecord record_from_json_line(std::string_view line);

std::string sample_to_json_line(const LabeledSample& sample);
LabeledSample sample_from_json_line(std::string_view line);

/// Atomic: written to a sibling temp file, then renamed. IoError on failure.
void emit_jsonl(std::span<const InstructionRecord> records, const std::filesystem::path& path);
/// ParseLineError (ParseError kind) naming the 1-based line on bad input.
std::vector<InstructionRecord> load_jsonl(const std::filesystem::path& path);
std::vector<LabeledSample> load_samples_jsonl(const std::filesystem::path& path);

/// Atomic whole-file write shared by every artifact writer.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace earthforge
