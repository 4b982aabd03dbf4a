// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "earthforge/metrics.hpp"

namespace earthforge {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::map<std::string, std::size_t> ngram_counts(std::span<const std::string> tokens, int n) {
  std::map<std::string, std::size_t> counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

PrfScore prf(double overlap, double cand_total, double ref_total) {
  PrfScore s;
  if (cand_total <= 0 || ref_total <= 0) return s;
  s.precision = overlap / cand_total;
  s.recall = overlap / ref_total;
  if (s.precision > 0 && s.recall > 0)
    s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

/// Depth-first search over alignments that keep the maximum match count.
/// Candidate tokens are visited left to right; each either takes a free
/// reference occurrence of its word or is skipped, and a word may only be
/// skipped as often as it outnumbers the reference.
class ChunkSearch {
 public:
  ChunkSearch(std::vector<int> cand, std::vector<int> ref, int types, std::size_t budget)
      : cand_(std::move(cand)), ref_(std::move(ref)), budget_(budget) {
    std::vector<int> cand_count(types, 0), ref_count(types, 0);
    for (int t : cand_) ++cand_count[t];
    for (int t : ref_) ++ref_count[t];
    skips_.resize(types);
    positions_.resize(types);
    for (int t = 0; t < types; ++t) {
      skips_[t] = std::max(0, cand_count[t] - ref_count[t]);
      matches_ += static_cast<std::size_t>(std::min(cand_count[t], ref_count[t]));
    }
    for (std::size_t j = 0; j < ref_.size(); ++j) positions_[ref_[j]].push_back(static_cast<int>(j));
    used_.assign(ref_.size(), false);
  }

  MeteorAlignment run() {
    if (matches_ == 0) return {0, 0, true};
    visit(0, -1, 0);
    return {matches_, best_, !aborted_};
  }

 private:
  void visit(std::size_t i, int prev, std::size_t chunks) {
    if (chunks >= best_) return;
    if (++nodes_ > budget_ && best_ != kUnset) {
      aborted_ = true;
      return;
    }
    if (i == cand_.size()) {
      best_ = chunks;
      return;
    }
    const int t = cand_[i];
    // Extending the current chunk first finds good incumbents early.
    if (prev >= 0 && prev + 1 < static_cast<int>(ref_.size()) && ref_[prev + 1] == t &&
        !used_[prev + 1]) {
      used_[prev + 1] = true;
      visit(i + 1, prev + 1, chunks);
      used_[prev + 1] = false;
      if (aborted_) return;
    }
    for (int j : positions_[t]) {
      if (used_[j] || (prev >= 0 && j == prev + 1)) continue;
      used_[j] = true;
      visit(i + 1, j, chunks + 1);
      used_[j] = false;
      if (aborted_) return;
    }
    if (skips_[t] > 0) {
      --skips_[t];
      visit(i + 1, -1, chunks);
      ++skips_[t];
    }
  }

  static constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();

  std::vector<int> cand_;
  std::vector<int> ref_;
  std::vector<int> skips_;
  std::vector<std::vector<int>> positions_;
  std::vector<bool> used_;
  std::size_t matches_ = 0;
  std::size_t best_ = kUnset;
  std::size_t nodes_ = 0;
  std::size_t budget_;
  bool aborted_ = false;
};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

PrfScore rouge_n_scores(const TextPair& pair, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "rouge n must be >= 1");
  const auto cand = ngram_counts(pair.candidate, n);
  const auto ref = ngram_counts(pair.reference, n);
  double overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [gram, count] : cand) {
    cand_total += static_cast<double>(count);
    if (auto it = ref.find(gram); it != ref.end())
      overlap += static_cast<double>(std::min(count, it->second));
  }
  for (const auto& [gram, count] : ref) ref_total += static_cast<double>(count);
  return prf(overlap, cand_total, ref_total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    std::swap(prev, row);
  }
  return prev[b.size()];
}

PrfScore rouge_l_scores(const TextPair& pair) {
  const auto lcs = static_cast<double>(lcs_length(pair.candidate, pair.reference));
  return prf(lcs, static_cast<double>(pair.candidate.size()),
             static_cast<double>(pair.reference.size()));
}

MeteorAlignment meteor_align(const TextPair& pair, std::size_t node_budget) {
  std::unordered_map<std::string, int> ids;
  const auto id_of = [&](const std::string& w) {
    return ids.try_emplace(w, static_cast<int>(ids.size())).first->second;
  };
  std::vector<int> cand, ref;
  cand.reserve(pair.candidate.size());
  ref.reserve(pair.reference.size());
  for (const auto& w : pair.candidate) cand.push_back(id_of(w));
  for (const auto& w : pair.reference) ref.push_back(id_of(w));
  return ChunkSearch(std::move(cand), std::move(ref), static_cast<int>(ids.size()), node_budget).run();
}

double meteor_from_alignment(const MeteorAlignment& alignment, std::size_t candidate_len,
                             std::size_t reference_len, const MeteorParams& params) {
  if (alignment.matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double m = static_cast<double>(alignment.matches);
  const double precision = m / static_cast<double>(candidate_len);
  const double recall = m / static_cast<double>(reference_len);
  const double fmean =
      precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double penalty =
      params.gamma * std::pow(static_cast<double>(alignment.chunks) / m, params.beta);
  return fmean * (1.0 - penalty);
}

double meteor(const TextPair& pair, const MeteorParams& params) {
  return meteor_from_alignment(meteor_align(pair), pair.candidate.size(), pair.reference.size(),
                               params);
}

}  // namespace earthforge
