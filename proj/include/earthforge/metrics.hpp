// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "earthforge/geometry.hpp"

namespace earthforge {

// ---------------------------------------------------------------------------
// Text generation metrics

/// Lowercase ASCII, split on runs of non-alphanumeric bytes. Bytes >= 0x80
/// are kept inside words so UTF-8 text is not shredded. No stopwords, no
/// stemming.
inline constexpr std::string_view kTokenizerVersion = "lower-alnum/1";

std::vector<std::string> tokenize(std::string_view text);

struct TextPair {
  std::vector<std::string> candidate;
  std::vector<std::string> reference;

  static TextPair from_text(std::string_view candidate, std::string_view reference) {
    return {tokenize(candidate), tokenize(reference)};
  }
};

struct PrfScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Clipped n-gram overlap. All zero when either side has no n-grams.
PrfScore rouge_n_scores(const TextPair& pair, int n = 1);
inline double rouge_n(const TextPair& pair, int n = 1) { return rouge_n_scores(pair, n).f1; }

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
PrfScore rouge_l_scores(const TextPair& pair);
inline double rouge_l(const TextPair& pair) { return rouge_l_scores(pair).f1; }

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  /// false if the chunk search hit its node budget; `chunks` is then the
  /// best found rather than a proven minimum.
  bool exhaustive = true;
};

/// Exact-match one-to-one alignment with the maximum number of matches and,
/// among those, the fewest chunks.
MeteorAlignment meteor_align(const TextPair& pair, std::size_t node_budget = 2'000'000);

/// F_mean * (1 - gamma * (chunks/matches)^beta), F_mean = PR / (aP + (1-a)R).
double meteor_from_alignment(const MeteorAlignment& alignment, std::size_t candidate_len,
                             std::size_t reference_len, const MeteorParams& params = {});
double meteor(const TextPair& pair, const MeteorParams& params = {});

// ---------------------------------------------------------------------------
// Detection

struct ImageBoxes {
  std::string image_id;
  std::vector<RotatedBox> boxes;
  /// Empty, or one confidence per box.
  std::vector<double> confidences;
  std::string label;
};

struct MatchCount {
  std::size_t matched = 0;
  std::size_t total = 0;
  double rate() const noexcept { return total ? static_cast<double>(matched) / total : 0.0; }
};

struct DetectionScores {
  double accuracy_at_iou = 0;
  double precision = 0;
  double recall = 0;
  std::size_t matched = 0;
  std::size_t total_gt = 0;
  std::size_t total_pred = 0;
  std::map<std::string, MatchCount> by_size;   // small / medium / large ground truth
  std::map<std::string, MatchCount> by_count;  // single / multiple ground-truth images
  /// Area under the interpolated PR curve, only when every prediction
  /// carries a confidence.
  std::optional<double> average_precision;
};

/// One-to-one greedy matching in descending IoU order, pairs below the
/// threshold excluded. Ties are broken by ground-truth index and then by
/// prediction geometry, so the matched count does not depend on prediction
/// order. Returns (pred index, gt index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> greedy_match(std::span<const RotatedBox> preds,
                                                              std::span<const RotatedBox> gts,
                                                              double iou_threshold);

DetectionScores detection_scores(std::span<const ImageBoxes> preds, std::span<const ImageBoxes> gts,
                                 double iou_threshold, const SizeThresholds& sizes = {});

// ---------------------------------------------------------------------------
// Classification

/// Trim, lowercase, drop one trailing period ("Railway station." matches
/// "railway station").
std::string normalize_label(std::string_view label);

enum class UnknownLabelPolicy { Error, CountAsWrong };

struct ClassificationScores {
  double accuracy = 0;
  double avg_recall = 0;
  std::map<std::string, double> per_class_recall;
  std::size_t sample_count = 0;
};

/// `classes` empty means "the labels seen in the ground truth".
ClassificationScores classification_scores(std::span<const std::string> preds,
                                           std::span<const std::string> gts,
                                           std::span<const std::string> classes = {},
                                           UnknownLabelPolicy policy = UnknownLabelPolicy::Error);

struct MultilabelScores {
  double example_f1 = 0;
  double subset_accuracy = 0;
  std::size_t sample_count = 0;
};

/// Per-example F1 of label sets (two empty sets score 1), averaged.
MultilabelScores multilabel_scores(std::span<const std::set<std::string>> preds,
                                   std::span<const std::set<std::string>> gts);

}  // namespace earthforge
