// SPDX-License-Identifier: Apache-2.0
#include "earthforge/evaluate.hpp"

#include <array>
#include <fstream>
#include <map>
#include <set>

namespace earthforge {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 8> kTaskNames = {
    "caption", "region-caption", "grounding", "detect", "classify", "multilabel", "vqa", "changedet"};

struct Paired {
  std::vector<json> preds;
  std::vector<json> gts;  // preds[i] pairs with gts[i]; ground-truth file order
};

std::vector<json> parse_lines(const std::vector<std::string>& lines, std::string_view side) {
  std::vector<json> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json j = json::parse(lines[i], nullptr, false);
    // Box files may key lines by "image_id" instead.
    if (j.is_object() && !j.contains("id") && j.contains("image_id")) j["id"] = j["image_id"];
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw ParseLineError(i + 1, std::string(side) + " line is not an object with a string \"id\"");
    out.push_back(std::move(j));
  }
  return out;
}

Paired pair_by_id(const std::vector<std::string>& pred_lines, const std::vector<std::string>& gt_lines) {
  if (pred_lines.empty() || gt_lines.empty()) throw Error(ErrorKind::NoSamples, "no samples");
  auto preds = parse_lines(pred_lines, "prediction");
  auto gts = parse_lines(gt_lines, "ground-truth");
  std::map<std::string, std::size_t> pred_index;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!pred_index.emplace(preds[i]["id"].get<std::string>(), i).second)
      throw Error(ErrorKind::MismatchedIds, "duplicate prediction id '" + preds[i]["id"].get<std::string>() + "'");
  std::set<std::string> gt_ids;
  Paired out;
  for (auto& g : gts) {
    const auto id = g["id"].get<std::string>();
    if (!gt_ids.insert(id).second)
      throw Error(ErrorKind::MismatchedIds, "duplicate ground-truth id '" + id + "'");
    const auto it = pred_index.find(id);
    if (it == pred_index.end()) throw Error(ErrorKind::MismatchedIds, "no prediction for id '" + id + "'");
    out.preds.push_back(std::move(preds[it->second]));
    out.gts.push_back(std::move(g));
  }
  for (const auto& [id, _] : pred_index)
    if (!gt_ids.contains(id)) throw Error(ErrorKind::MismatchedIds, "prediction for unknown id '" + id + "'");
  return out;
}

template <typename T>
T get_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end())
    throw Error(ErrorKind::ParseError, "record '" + j["id"].get<std::string>() + "' lacks \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ParseError,
                "record '" + j["id"].get<std::string>() + "' has a malformed \"" + key + "\"");
  }
}

std::vector<RotatedBox> boxes_of(const json& j) {
  if (const auto it = j.find("boxes"); it != j.end()) {
    std::vector<RotatedBox> out;
    for (const auto& v : get_field<std::vector<std::vector<double>>>(j, "boxes")) {
      if (v.size() != 4 && v.size() != 5)
        throw Error(ErrorKind::ParseError, "box in record '" + j["id"].get<std::string>() +
                                               "' needs 4 or 5 numbers");
      out.push_back(make_box(v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] : 0.0));
    }
    return out;
  }
  return parse_boxes(get_field<std::string>(j, "text"));
}

ordered_json prf_json(double r1, double rl, double mt) {
  return {{"rouge_1", r1}, {"rouge_l", rl}, {"meteor", mt}};
}

ordered_json score_text(const Paired& p, EvalTask task, const EvalOptions& opt) {
  double r1 = 0, rl = 0, mt = 0;
  std::size_t exact = 0, inexact_meteor = 0;
  for (std::size_t i = 0; i < p.gts.size(); ++i) {
    const auto cand = get_field<std::string>(p.preds[i], "text");
    const auto ref = get_field<std::string>(p.gts[i], "text");
    const auto pair = TextPair::from_text(cand, ref);
    r1 += rouge_n(pair, 1);
    rl += rouge_l(pair);
    const auto alignment = meteor_align(pair, opt.meteor_node_budget);
    if (!alignment.exhaustive) ++inexact_meteor;
    mt += meteor_from_alignment(alignment, pair.candidate.size(), pair.reference.size(), opt.meteor);
    if (normalize_label(cand) == normalize_label(ref)) ++exact;
  }
  const double n = static_cast<double>(p.gts.size());
  ordered_json scores = prf_json(r1 / n, rl / n, mt / n);
  if (task == EvalTask::Vqa) scores["accuracy"] = static_cast<double>(exact) / n;
  ordered_json out;
  out["scores"] = std::move(scores);
  out["meteor_inexact_alignments"] = inexact_meteor;
  return out;
}

ordered_json score_classify(const Paired& p, const EvalOptions& opt) {
  std::vector<std::string> preds, gts;
  for (std::size_t i = 0; i < p.gts.size(); ++i) {
    preds.push_back(get_field<std::string>(p.preds[i], "label"));
    gts.push_back(get_field<std::string>(p.gts[i], "label"));
  }
  const auto s = classification_scores(preds, gts, opt.classes, opt.unknown_labels);
  ordered_json out;
  out["scores"] = {{"accuracy", s.accuracy}, {"avg_recall", s.avg_recall}};
  ordered_json per_class = ordered_json::object();
  for (const auto& [label, recall] : s.per_class_recall) per_class[label] = recall;
  out["per_class_recall"] = std::move(per_class);
  return out;
}

ordered_json score_multilabel(const Paired& p) {
  std::vector<std::set<std::string>> preds, gts;
  for (std::size_t i = 0; i < p.gts.size(); ++i) {
    const auto pv = get_field<std::vector<std::string>>(p.preds[i], "labels");
    const auto gv = get_field<std::vector<std::string>>(p.gts[i], "labels");
    preds.emplace_back(pv.begin(), pv.end());
    gts.emplace_back(gv.begin(), gv.end());
  }
  const auto s = multilabel_scores(preds, gts);
  ordered_json out;
  out["scores"] = {{"example_f1", s.example_f1}, {"subset_accuracy", s.subset_accuracy}};
  return out;
}

ordered_json score_detection(const Paired& p, const EvalOptions& opt) {
  std::vector<ImageBoxes> preds, gts;
  for (std::size_t i = 0; i < p.gts.size(); ++i) {
    ImageBoxes pred{p.preds[i]["id"].get<std::string>(), boxes_of(p.preds[i]), {}, {}};
    if (p.preds[i].contains("confidences"))
      pred.confidences = get_field<std::vector<double>>(p.preds[i], "confidences");
    preds.push_back(std::move(pred));
    gts.push_back({p.gts[i]["id"].get<std::string>(), boxes_of(p.gts[i]), {}, {}});
  }
  const auto s = detection_scores(preds, gts, opt.iou, opt.sizes);
  ordered_json scores = {{"accuracy_at_iou", s.accuracy_at_iou},
                         {"precision", s.precision},
                         {"recall", s.recall}};
  if (s.average_precision) scores["average_precision"] = *s.average_precision;
  const auto buckets = [](const std::map<std::string, MatchCount>& m) {
    ordered_json b = ordered_json::object();
    for (const auto& [key, c] : m)
      b[key] = {{"matched", c.matched}, {"total", c.total}, {"rate", c.rate()}};
    return b;
  };
  ordered_json out;
  out["scores"] = std::move(scores);
  out["counts"] = {{"matched", s.matched}, {"total_gt", s.total_gt}, {"total_pred", s.total_pred}};
  out["by_size"] = buckets(s.by_size);
  out["by_count"] = buckets(s.by_count);
  return out;
}

}  // namespace

std::string_view name(EvalTask task) noexcept { return kTaskNames[static_cast<int>(task)]; }

std::optional<EvalTask> parse_eval_task(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == text) return static_cast<EvalTask>(i);
  return std::nullopt;
}

nlohmann::ordered_json evaluate_lines(EvalTask task, const std::vector<std::string>& pred_lines,
                                      const std::vector<std::string>& gt_lines,
                                      const EvalOptions& options) {
  const Paired paired = pair_by_id(pred_lines, gt_lines);
  ordered_json body;
  switch (task) {
    case EvalTask::Caption:
    case EvalTask::RegionCaption:
    case EvalTask::Vqa:
    case EvalTask::ChangeDet: body = score_text(paired, task, options); break;
    case EvalTask::Classify: body = score_classify(paired, options); break;
    case EvalTask::Multilabel: body = score_multilabel(paired); break;
    case EvalTask::Grounding:
    case EvalTask::Detect: body = score_detection(paired, options); break;
  }

  ordered_json report;
  report["schema"] = kEvalSchema;
  report["task"] = name(task);
  report["sample_count"] = paired.gts.size();
  for (auto& [key, value] : body.items()) report[key] = std::move(value);

  ordered_json settings;
  settings["tokenizer"] = kTokenizerVersion;
  switch (task) {
    case EvalTask::Grounding:
    case EvalTask::Detect:
      settings["iou"] = options.iou;
      settings["matching"] = "one-to-one greedy by IoU; accuracy_at_iou = matched / ground truth";
      settings["size_thresholds"] = {{"small_max_area", options.sizes.small_max_area},
                                     {"medium_max_area", options.sizes.medium_max_area}};
      break;
    case EvalTask::Classify:
      settings["unknown_labels"] =
          options.unknown_labels == UnknownLabelPolicy::Error ? "error" : "count-as-wrong";
      settings["classes"] = options.classes;
      break;
    case EvalTask::Multilabel: break;
    default:
      settings["meteor"] = {{"alpha", options.meteor.alpha},
                            {"beta", options.meteor.beta},
                            {"gamma", options.meteor.gamma},
                            {"matching", "exact"},
                            {"node_budget", options.meteor_node_budget}};
  }
  report["metric_settings"] = std::move(settings);
  return report;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read failure on " + path.string());
  return lines;
}

nlohmann::ordered_json evaluate_files(EvalTask task, const std::filesystem::path& preds,
                                      const std::filesystem::path& gts, const EvalOptions& options) {
  return evaluate_lines(task, read_lines(preds), read_lines(gts), options);
}

}  // namespace earthforge
