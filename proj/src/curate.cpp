// SPDX-License-Identifier: Apache-2.0
#include "earthforge/curate.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>

#include "earthforge/raster_io.hpp"

namespace earthforge {
namespace {

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& ref) {
  const std::filesystem::path p(ref);
  return p.is_absolute() ? p : root / p;
}

}  // namespace

std::filesystem::path samples_file(const std::filesystem::path& dir) { return dir / "samples.jsonl"; }

CurationResult curate(const std::vector<LabeledSample>& samples, const std::filesystem::path& image_root,
                      const AppConfig& config, GeneratorClient* client) {
  config.validate();
  CurationResult result;
  result.counts.input_samples = samples.size();

  const auto labelled = filter_labels(samples, config.min_labels);
  result.counts.dropped_sparse_labels = samples.size() - labelled.size();

  // Each distinct image is read once, however many samples share it.
  std::map<std::string, std::size_t> slot_of;
  std::vector<std::filesystem::path> paths;
  for (const auto& s : labelled)
    for (const auto& ref : s.image_refs) {
      const auto path = resolve(image_root, ref);
      if (slot_of.emplace(path.string(), paths.size()).second) paths.push_back(path);
    }
  std::vector<std::optional<ImageStats>> stats(paths.size());
  parallel_for(paths.size(), config.jobs, [&](std::size_t i) {
    const Raster raster = load_raster(paths[i]);
    try {
      stats[i] = image_stats(raster);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AllPixelsInvalid) throw;
    }
  });

  for (const auto& s : labelled) {
    const bool keep = std::all_of(s.image_refs.begin(), s.image_refs.end(), [&](const std::string& ref) {
      const auto& st = stats[slot_of.at(resolve(image_root, ref).string())];
      return st && passes(*st, config.image_filter);
    });
    if (keep) result.kept.push_back(s);
  }
  result.counts.dropped_image = labelled.size() - result.kept.size();
  result.counts.kept_samples = result.kept.size();

  if (client) {
    struct Job {
      std::size_t sample;
      std::string subject;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < result.kept.size(); ++i) {
      const auto keywords = result.kept[i].keywords();
      const auto n = std::min<std::size_t>(keywords.size(), static_cast<std::size_t>(config.max_subjects));
      for (std::size_t k = 0; k < n; ++k) jobs.push_back({i, keywords[k]});
    }
    GenerateOptions options;
    options.max_retries = config.max_retries;
    options.model = config.generator.model;
    options.exemplar = config.exemplar;
    options.max_tokens = config.generator.max_tokens;
    options.timeout_s = config.generator.timeout_s;

    std::vector<std::optional<InstructionRecord>> generated(jobs.size());
    parallel_for(jobs.size(), config.jobs, [&](std::size_t j) {
      const LabeledSample& original = result.kept[jobs[j].sample];
      LabeledSample located = original;
      for (auto& ref : located.image_refs) ref = resolve(image_root, ref).string();
      try {
        GenerateOptions per_job = options;
        per_job.record_id = original.sample_id + "/" + jobs[j].subject;
        InstructionRecord record = generate_record(located, jobs[j].subject, *client, per_job);
        record.image_refs = original.image_refs;
        generated[j] = std::move(record);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FormatExhausted) throw;
      }
    });
    for (auto& g : generated) {
      if (g) result.records.push_back(std::move(*g));
      else ++result.counts.format_exhausted;
    }
    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const InstructionRecord& a, const InstructionRecord& b) { return a.record_id < b.record_id; });
  }
  result.counts.records = result.records.size();
  result.manifest = assemble_stage_manifest(result.records);
  return result;
}

nlohmann::ordered_json manifest_json(const CurationResult& result, const AppConfig& config,
                                     bool filter_only) {
  nlohmann::ordered_json j;
  j["schema"] = "earthdial-manifest/1";
  j["mode"] = filter_only ? "filter-only" : "generate";
  j["config"] = config_to_json(config);
  const auto& c = result.counts;
  j["curation"] = {{"input_samples", c.input_samples},
                   {"dropped_sparse_labels", c.dropped_sparse_labels},
                   {"dropped_image", c.dropped_image},
                   {"kept_samples", c.kept_samples},
                   {"format_exhausted", c.format_exhausted},
                   {"records", c.records}};
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& [key, count] : result.manifest.counts)
    stages.push_back({{"stage", key.stage}, {"dataset", key.dataset}, {"tags", key.tags}, {"records", count}});
  j["stages"] = std::move(stages);
  j["total"] = result.manifest.total();
  return j;
}

std::vector<InstructionRecord> audit_sample(const std::vector<InstructionRecord>& records,
                                            std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> index(records.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::vector<std::size_t> picked;
  std::mt19937_64 engine(seed);
  std::sample(index.begin(), index.end(), std::back_inserter(picked), count, engine);
  std::vector<InstructionRecord> out;
  for (std::size_t i : picked) out.push_back(records[i]);
  return out;
}

}  // namespace earthforge
