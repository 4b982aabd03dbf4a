// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>
#include <atomic>

#include "json.hpp"

#include "earthforge/config.hpp"
#include "earthforge/instruct.hpp"

namespace earthforge {

/// Calls fn(i) for i in [0, n) on up to `jobs` threads (0: hardware
/// concurrency). Results belong in caller-owned slots indexed by i, so the
/// output order never depends on scheduling. The exception of the lowest
/// failing index is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  const auto work = [&] {
    for (std::size_t i; !stop && (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct CurationCounts {
  std::size_t input_samples = 0;
  std::size_t dropped_sparse_labels = 0;
  std::size_t dropped_image = 0;
  std::size_t kept_samples = 0;
  std::size_t format_exhausted = 0;
  std::size_t records = 0;
};

struct CurationResult {
  std::vector<LabeledSample> kept;
  std::vector<InstructionRecord> records;  // sample order, then subject order
  CurationCounts counts;
  StageManifest manifest;
};

/// `<dir>/samples.jsonl`, one LabeledSample per line; image references are
/// relative to `dir` unless absolute.
std::filesystem::path samples_file(const std::filesystem::path& dir);

/// Label filter, then image filter (every referenced image must pass; an
/// image with no valid pixel fails). With a client, each kept sample yields
/// one record per subject for its first `max_subjects` keywords; samples
/// whose generator output never validates are counted and skipped. Records
/// come out ordered by record_id.
CurationResult curate(const std::vector<LabeledSample>& samples, const std::filesystem::path& image_root,
                      const AppConfig& config, GeneratorClient* client);

/// {"schema", "config", "curation": counts, "stages": [...], "total"}.
nlohmann::ordered_json manifest_json(const CurationResult& result, const AppConfig& config,
                                     bool filter_only);

/// `count` records chosen with a seeded engine, in their original order.
std::vector<InstructionRecord> audit_sample(const std::vector<InstructionRecord>& records,
                                            std::size_t count, std::uint64_t seed);

}  // namespace earthforge
