// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "earthforge/metrics.hpp"

namespace earthforge {

inline constexpr std::string_view kEvalSchema = "earthdial-eval/1";

enum class EvalTask { Caption, RegionCaption, Grounding, Detect, Classify, Multilabel, Vqa, ChangeDet };

std::string_view name(EvalTask task) noexcept;
std::optional<EvalTask> parse_eval_task(std::string_view text) noexcept;

struct EvalOptions {
  double iou = 0.5;
  SizeThresholds sizes;
  MeteorParams meteor;
  std::size_t meteor_node_budget = 2'000'000;
  UnknownLabelPolicy unknown_labels = UnknownLabelPolicy::CountAsWrong;
  std::vector<std::string> classes;  // empty: classes seen in the ground truth
};

/// Scores paired JSONL records. Every line is an object with a string "id"
/// ("image_id" is accepted in its place); pairs are formed by id, and the id
/// sets must agree (MismatchedIds).
///
///   caption, region-caption, changedet, vqa: {"id", "text"}
///   classify:                                {"id", "label"}
///   multilabel:                              {"id", "labels": [..]}
///   detect, grounding:                       {"id", "boxes": [[x1,y1,x2,y2(,theta)]..]}
///                                            or {"id", "text"} holding "[..]" boxes,
///                                            optional "confidences" on predictions
///
/// Returns the report body (schema, task, sample_count, scores, breakdowns,
/// metric settings). NoSamples when either side is empty.
nlohmann::ordered_json evaluate_lines(EvalTask task, const std::vector<std::string>& pred_lines,
                                      const std::vector<std::string>& gt_lines,
                                      const EvalOptions& options = {});

nlohmann::ordered_json evaluate_files(EvalTask task, const std::filesystem::path& preds,
                                      const std::filesystem::path& gts,
                                      const EvalOptions& options = {});

/// Non-empty lines of a text file; IoError when unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace earthforge
