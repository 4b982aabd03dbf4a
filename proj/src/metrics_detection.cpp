// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "earthforge/metrics.hpp"

namespace earthforge {
namespace {

auto geometry_key(const RotatedBox& b) {
  return std::make_tuple(b.x_min, b.y_min, b.x_max, b.y_max, b.theta);
}

/// Area under the precision envelope over recall.
double interpolated_ap(std::vector<std::pair<double, bool>> scored, std::size_t total_gt) {
  if (total_gt == 0) return 0.0;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].second) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, last_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - last_recall) * precision[i];
    last_recall = recall[i];
  }
  return ap;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> greedy_match(std::span<const RotatedBox> preds,
                                                              std::span<const RotatedBox> gts,
                                                              double iou_threshold) {
  struct Candidate {
    double iou;
    std::size_t gt;
    std::size_t pred;
  };
  std::vector<Candidate> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = rotated_iou(preds[p], gts[g]);
      if (iou >= iou_threshold && iou > 0) pairs.push_back({iou, g, p});
    }
  std::sort(pairs.begin(), pairs.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt != b.gt) return a.gt < b.gt;
    return geometry_key(preds[a.pred]) < geometry_key(preds[b.pred]);
  });
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (const auto& c : pairs) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = true;
    matches.emplace_back(c.pred, c.gt);
  }
  return matches;
}

DetectionScores detection_scores(std::span<const ImageBoxes> preds, std::span<const ImageBoxes> gts,
                                 double iou_threshold, const SizeThresholds& sizes) {
  if (!(iou_threshold > 0 && iou_threshold < 1))
    throw Error(ErrorKind::InvalidArgument, "IoU threshold must lie in (0,1)");
  std::map<std::string, const ImageBoxes*> pred_by_id;
  for (const auto& p : preds)
    if (!pred_by_id.emplace(p.image_id, &p).second)
      throw Error(ErrorKind::MismatchedIds, "duplicate prediction image id '" + p.image_id + "'");
  std::map<std::string, const ImageBoxes*> gt_by_id;
  for (const auto& g : gts)
    if (!gt_by_id.emplace(g.image_id, &g).second)
      throw Error(ErrorKind::MismatchedIds, "duplicate ground-truth image id '" + g.image_id + "'");
  for (const auto& [id, _] : pred_by_id)
    if (!gt_by_id.contains(id))
      throw Error(ErrorKind::MismatchedIds, "prediction for unknown image '" + id + "'");
  for (const auto& [id, _] : gt_by_id)
    if (!pred_by_id.contains(id))
      throw Error(ErrorKind::MismatchedIds, "no prediction entry for image '" + id + "'");

  DetectionScores out;
  bool all_confident = true;
  std::vector<std::pair<double, bool>> scored;
  for (const auto& [id, gt] : gt_by_id) {
    const ImageBoxes& pred = *pred_by_id.at(id);
    if (!pred.confidences.empty() && pred.confidences.size() != pred.boxes.size())
      throw Error(ErrorKind::InvalidArgument, "image '" + id + "' has a confidence count mismatch");
    const auto matches = greedy_match(pred.boxes, gt->boxes, iou_threshold);
    std::vector<bool> gt_hit(gt->boxes.size(), false);
    for (const auto& [p, g] : matches) gt_hit[g] = true;

    out.matched += matches.size();
    out.total_gt += gt->boxes.size();
    out.total_pred += pred.boxes.size();
    for (std::size_t g = 0; g < gt->boxes.size(); ++g) {
      auto& bucket = out.by_size[std::string(name(size_class(gt->boxes[g], sizes)))];
      ++bucket.total;
      if (gt_hit[g]) ++bucket.matched;
    }
    if (!gt->boxes.empty()) {
      auto& bucket = out.by_count[std::string(name(count_class(static_cast<long>(gt->boxes.size()))))];
      bucket.total += gt->boxes.size();
      bucket.matched += matches.size();
    }

    if (pred.confidences.empty() && !pred.boxes.empty()) all_confident = false;
    if (all_confident && !pred.boxes.empty()) {
      // Confidence-ordered matching for the PR curve.
      std::vector<std::size_t> order(pred.boxes.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pred.confidences[a] > pred.confidences[b];
      });
      std::vector<bool> taken(gt->boxes.size(), false);
      for (std::size_t p : order) {
        double best = 0.0;
        std::size_t best_g = gt->boxes.size();
        for (std::size_t g = 0; g < gt->boxes.size(); ++g) {
          if (taken[g]) continue;
          const double iou = rotated_iou(pred.boxes[p], gt->boxes[g]);
          if (iou >= iou_threshold && iou > best) {
            best = iou;
            best_g = g;
          }
        }
        if (best_g < gt->boxes.size()) taken[best_g] = true;
        scored.emplace_back(pred.confidences[p], best_g < gt->boxes.size());
      }
    }
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  out.accuracy_at_iou = ratio(out.matched, out.total_gt);
  out.recall = out.accuracy_at_iou;
  out.precision = ratio(out.matched, out.total_pred);
  if (all_confident && out.total_pred > 0) out.average_precision = interpolated_ap(scored, out.total_gt);
  return out;
}

}  // namespace earthforge
