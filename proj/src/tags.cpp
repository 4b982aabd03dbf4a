// SPDX-License-Identifier: Apache-2.0
#include "earthforge/tags.hpp"

#include "earthforge/error.hpp"

namespace earthforge {
namespace {

constexpr std::array<std::string_view, 9> kModalityNames = {
    "hr_rgb_0.5", "s2_rgb_10",  "l8_rgb_30", "s1_vh_10",       "s2_ms_30",
    "hr_rgbi_0.5", "hyper_rgb_3", "l8_ms_30", "hr_rgb_temp_0.5"};

constexpr std::array<std::string_view, 4> kTaskTagNames = {"caption", "changedet",
                                                          "treeclassify", "uhi"};

constexpr std::array<std::string_view, 12> kTaskKindNames = {
    "pretrain_caption", "classification", "detection", "grounding",
    "caption",          "vqa",            "change_detection", "disaster",
    "methane",          "uhi",            "lcz",              "tree_species"};

constexpr std::uint32_t bit(TaskKind k) { return 1u << static_cast<unsigned>(k); }

constexpr std::uint32_t kGeochatTasks = bit(TaskKind::Vqa) | bit(TaskKind::Detection) |
                                        bit(TaskKind::Grounding) |
                                        bit(TaskKind::Classification);
constexpr std::uint32_t kSarTasks = bit(TaskKind::PretrainCaption) |
                                    bit(TaskKind::Classification) |
                                    bit(TaskKind::Detection) | bit(TaskKind::Grounding) |
                                    bit(TaskKind::Vqa);

using enum Modality;

const std::array<StageRow, 17> kRows = {{
    {1, "NAIP", {std::nullopt, HrRgb05}, false, 3'000'113, bit(TaskKind::PretrainCaption)},
    {1, "Sentinel-2", {std::nullopt, S2Rgb10}, false, 2'749'511, bit(TaskKind::PretrainCaption)},
    {1, "Landsat", {std::nullopt, L8Rgb30}, false, 1'671'437, bit(TaskKind::PretrainCaption)},
    {1, "SkyScript", {std::nullopt, S2Rgb10}, false, 249'855, bit(TaskKind::PretrainCaption)},
    {2, "Classification", {std::nullopt, HrRgb05}, false, 565'853, bit(TaskKind::Classification)},
    {2, "Detection", {std::nullopt, HrRgb05}, false, 22'624, bit(TaskKind::Detection)},
    {2, "Visual Grounding", {std::nullopt, HrRgb05}, false, 17'845, bit(TaskKind::Grounding)},
    {2, "Caption", {TaskTag::Caption, HrRgb05}, true, 202'530, bit(TaskKind::Caption)},
    {2, "VQA", {std::nullopt, HrRgb05}, false, 630'768, bit(TaskKind::Vqa)},
    {2, "Change Detection", {TaskTag::ChangeDet, HrRgbTemp05}, false, 64'631,
     bit(TaskKind::ChangeDetection)},
    {2, "Disaster assessment", {std::nullopt, HrRgbTemp05}, false, 37'563,
     bit(TaskKind::Disaster)},
    {2, "Geochat", {std::nullopt, HrRgb05}, false, 308'861, kGeochatTasks},
    {3, "Sentinel-1", {std::nullopt, S1Vh10}, false, 1'668'043, kSarTasks},
    {3, "Local Climate Zones", {std::nullopt, S2Ms30}, false, 765'591, bit(TaskKind::Lcz)},
    {3, "Tree Species", {TaskTag::TreeClassify, HrRgbi05}, true, 38'527,
     bit(TaskKind::TreeSpecies)},
    {3, "Methane Plume", {std::nullopt, HyperRgb3}, false, 6'849, bit(TaskKind::Methane)},
    {3, "Urban Heat Island", {TaskTag::Uhi, L8Ms30}, false, 1'296, bit(TaskKind::Uhi)},
}};

}  // namespace

std::string_view name(Modality m) noexcept { return kModalityNames[static_cast<int>(m)]; }
std::string_view name(TaskTag t) noexcept { return kTaskTagNames[static_cast<int>(t)]; }
std::string_view name(TaskKind k) noexcept { return kTaskKindNames[static_cast<int>(k)]; }

std::optional<Modality> parse_modality(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kModalityNames.size(); ++i)
    if (kModalityNames[i] == text) return static_cast<Modality>(i);
  return std::nullopt;
}

std::optional<TaskTag> parse_task_tag(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kTaskTagNames.size(); ++i)
    if (kTaskTagNames[i] == text) return static_cast<TaskTag>(i);
  return std::nullopt;
}

std::optional<TaskKind> parse_task_kind(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kTaskKindNames.size(); ++i)
    if (kTaskKindNames[i] == text) return static_cast<TaskKind>(i);
  return std::nullopt;
}

std::string render(Modality m) { return "[" + std::string(name(m)) + "]"; }
std::string render(TaskTag t) { return "[" + std::string(name(t)) + "]"; }

std::string canonical(const TagSet& tags) {
  std::string out;
  if (tags.task) out += render(*tags.task);
  out += render(tags.modality);
  return out;
}

std::optional<TagSet> parse_tags(std::string_view text) noexcept {
  std::array<std::string_view, 2> tokens;
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ' && count == 1) {
      ++pos;
      continue;
    }
    if (text[pos] != '[' || count == tokens.size()) return std::nullopt;
    const auto close = text.find(']', pos);
    if (close == std::string_view::npos) return std::nullopt;
    tokens[count++] = text.substr(pos + 1, close - pos - 1);
    pos = close + 1;
  }
  if (count == 1) {
    const auto m = parse_modality(tokens[0]);
    if (!m) return std::nullopt;
    return TagSet{std::nullopt, *m};
  }
  if (count == 2) {
    const auto t = parse_task_tag(tokens[0]);
    const auto m = parse_modality(tokens[1]);
    if (!t || !m) return std::nullopt;
    return TagSet{*t, *m};
  }
  return std::nullopt;
}

std::span<const StageRow> stage_rows() noexcept { return kRows; }

std::string render_row_tags(const StageRow& row) {
  if (!row.tags.task) return render(row.tags.modality);
  return render(*row.tags.task) + (row.spaced ? " " : "") + render(row.tags.modality);
}

const StageRow* find_stage_row(int stage, std::string_view dataset, const TagSet& tags,
                               TaskKind kind) noexcept {
  for (const auto& row : kRows) {
    if (row.stage == stage && row.dataset == dataset && row.tags == tags &&
        (row.task_mask & bit(kind)) != 0)
      return &row;
  }
  return nullptr;
}

const StageRow& default_row(TaskKind kind) {
  switch (kind) {
    case TaskKind::PretrainCaption: return kRows[0];
    case TaskKind::Classification: return kRows[4];
    case TaskKind::Detection: return kRows[5];
    case TaskKind::Grounding: return kRows[6];
    case TaskKind::Caption: return kRows[7];
    case TaskKind::Vqa: return kRows[8];
    case TaskKind::ChangeDetection: return kRows[9];
    case TaskKind::Disaster: return kRows[10];
    case TaskKind::Lcz: return kRows[13];
    case TaskKind::TreeSpecies: return kRows[14];
    case TaskKind::Methane: return kRows[15];
    case TaskKind::Uhi: return kRows[16];
  }
  throw Error(ErrorKind::InvalidArgument, "unknown task kind");
}

}  // namespace earthforge
