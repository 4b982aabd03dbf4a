// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>

#include "earthforge/metrics.hpp"

namespace earthforge {

std::string normalize_label(std::string_view label) {
  std::size_t begin = 0, end = label.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(label[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(label[end - 1]))) --end;
  if (end > begin && label[end - 1] == '.') --end;
  while (end > begin && std::isspace(static_cast<unsigned char>(label[end - 1]))) --end;
  std::string out(label.substr(begin, end - begin));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

ClassificationScores classification_scores(std::span<const std::string> preds,
                                           std::span<const std::string> gts,
                                           std::span<const std::string> classes,
                                           UnknownLabelPolicy policy) {
  if (preds.size() != gts.size())
    throw Error(ErrorKind::InvalidArgument, "prediction and ground-truth counts differ");
  if (gts.empty()) throw Error(ErrorKind::NoSamples, "no samples");

  std::set<std::string> known;
  for (const auto& c : classes) known.insert(normalize_label(c));
  const bool closed = !known.empty();
  if (!closed)
    for (const auto& g : gts) known.insert(normalize_label(g));

  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, support
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const std::string gt = normalize_label(gts[i]);
    const std::string pred = normalize_label(preds[i]);
    if (closed && !known.contains(gt))
      throw Error(ErrorKind::UnknownLabel, "ground-truth label '" + gts[i] + "' is not a known class");
    if (!known.contains(pred) && policy == UnknownLabelPolicy::Error)
      throw Error(ErrorKind::UnknownLabel, "predicted label '" + preds[i] + "' is not a known class");
    auto& [hits, support] = per_class[gt];
    ++support;
    if (pred == gt) {
      ++hits;
      ++correct;
    }
  }

  ClassificationScores out;
  out.sample_count = gts.size();
  out.accuracy = static_cast<double>(correct) / static_cast<double>(gts.size());
  double recall_sum = 0.0;
  for (const auto& [label, counts] : per_class) {
    const double r = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    out.per_class_recall[label] = r;
    recall_sum += r;
  }
  out.avg_recall = recall_sum / static_cast<double>(per_class.size());
  return out;
}

MultilabelScores multilabel_scores(std::span<const std::set<std::string>> preds,
                                   std::span<const std::set<std::string>> gts) {
  if (preds.size() != gts.size())
    throw Error(ErrorKind::InvalidArgument, "prediction and ground-truth counts differ");
  if (gts.empty()) throw Error(ErrorKind::NoSamples, "no samples");
  MultilabelScores out;
  out.sample_count = gts.size();
  double f1_sum = 0.0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    std::set<std::string> p, g;
    for (const auto& l : preds[i]) p.insert(normalize_label(l));
    for (const auto& l : gts[i]) g.insert(normalize_label(l));
    if (p == g) ++exact;
    if (p.empty() && g.empty()) {
      f1_sum += 1.0;
      continue;
    }
    std::size_t common = 0;
    for (const auto& l : p) common += g.count(l);
    if (common == 0) continue;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    f1_sum += 2 * precision * recall / (precision + recall);
  }
  out.example_f1 = f1_sum / static_cast<double>(gts.size());
  out.subset_accuracy = static_cast<double>(exact) / static_cast<double>(gts.size());
  return out;
}

}  // namespace earthforge
