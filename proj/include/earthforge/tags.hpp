// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace earthforge {

/// Imaging modality token. The numeric suffix is the ground-sample distance.
enum class Modality : std::uint8_t {
  HrRgb05,      // hr_rgb_0.5
  S2Rgb10,      // s2_rgb_10
  L8Rgb30,      // l8_rgb_30
  S1Vh10,       // s1_vh_10
  S2Ms30,       // s2_ms_30
  HrRgbi05,     // hr_rgbi_0.5
  HyperRgb3,    // hyper_rgb_3
  L8Ms30,       // l8_ms_30
  HrRgbTemp05,  // hr_rgb_temp_0.5
};

inline constexpr std::array<Modality, 9> kAllModalities = {
    Modality::HrRgb05,  Modality::S2Rgb10,   Modality::L8Rgb30,
    Modality::S1Vh10,   Modality::S2Ms30,    Modality::HrRgbi05,
    Modality::HyperRgb3, Modality::L8Ms30,   Modality::HrRgbTemp05};

enum class TaskTag : std::uint8_t { Caption, ChangeDet, TreeClassify, Uhi };

inline constexpr std::array<TaskTag, 4> kAllTaskTags = {
    TaskTag::Caption, TaskTag::ChangeDet, TaskTag::TreeClassify, TaskTag::Uhi};

std::string_view name(Modality m) noexcept;
std::string_view name(TaskTag t) noexcept;
std::optional<Modality> parse_modality(std::string_view name) noexcept;
std::optional<TaskTag> parse_task_tag(std::string_view name) noexcept;

/// "[" + name + "]"
std::string render(Modality m);
std::string render(TaskTag t);

/// Optional task token followed by the modality token.
struct TagSet {
  std::optional<TaskTag> task;
  Modality modality = Modality::HrRgb05;

  friend bool operator==(const TagSet&, const TagSet&) = default;
  friend auto operator<=>(const TagSet&, const TagSet&) = default;
};

/// Canonical storage form: "[task][modality]" with no separator.
std::string canonical(const TagSet& tags);

/// Accepts "[a][b]", "[a] [b]" or a lone "[b]". Returns nullopt on any
/// unknown token or malformed input.
std::optional<TagSet> parse_tags(std::string_view text) noexcept;

enum class TaskKind : std::uint8_t {
  PretrainCaption,
  Classification,
  Detection,
  Grounding,
  Caption,
  Vqa,
  ChangeDetection,
  Disaster,
  Methane,
  Uhi,
  Lcz,
  TreeSpecies,
};

inline constexpr std::array<TaskKind, 12> kAllTaskKinds = {
    TaskKind::PretrainCaption, TaskKind::Classification, TaskKind::Detection,
    TaskKind::Grounding,       TaskKind::Caption,        TaskKind::Vqa,
    TaskKind::ChangeDetection, TaskKind::Disaster,       TaskKind::Methane,
    TaskKind::Uhi,             TaskKind::Lcz,            TaskKind::TreeSpecies};

std::string_view name(TaskKind k) noexcept;
std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept;

/// One row of the stage/dataset/token-format table the instruction corpus
/// is organised by. `reference_count` is the published corpus size for the
/// row; it is documentation only and never enforced.
struct StageRow {
  int stage;
  std::string_view dataset;
  TagSet tags;
  bool spaced;  // printed as "[task] [modality]" rather than "[task][modality]"
  std::uint64_t reference_count;
  std::uint32_t task_mask;  // bit per TaskKind allowed in this row
};

std::span<const StageRow> stage_rows() noexcept;

/// Row-specific printed form, reproducing the table's spacing.
std::string render_row_tags(const StageRow& row);

/// The unique row matching (stage, dataset, tags) that also admits `kind`,
/// or nullptr.
const StageRow* find_stage_row(int stage, std::string_view dataset, const TagSet& tags,
                               TaskKind kind) noexcept;

/// Default row a task kind is filed under when the caller does not say.
const StageRow& default_row(TaskKind kind);

}  // namespace earthforge
