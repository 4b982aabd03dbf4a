// SPDX-License-Identifier: Apache-2.0
#include "earthforge/instruct.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

namespace earthforge {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string capitalized(std::string_view s) {
  std::string out(trim(s));
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string lowered(std::string_view s) {
  std::string out(trim(s));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

template <typename T>
const T& require(const std::optional<T>& field, std::string_view field_name, TaskKind kind) {
  if (!field)
    throw Error(ErrorKind::MissingField, std::string(name(kind)) + " record needs '" +
                                             std::string(field_name) + "'");
  return *field;
}

const std::string& require_text(const std::optional<std::string>& field, std::string_view field_name,
                                TaskKind kind) {
  const auto& value = require(field, field_name, kind);
  if (trim(value).empty())
    throw Error(ErrorKind::MissingField, std::string(name(kind)) + " record has an empty '" +
                                             std::string(field_name) + "'");
  return value;
}

void require_boxes(const TaskInputs& in, TaskKind kind) {
  if (in.boxes.empty())
    throw Error(ErrorKind::MissingField, std::string(name(kind)) + " record needs 'boxes'");
  for (const auto& b : in.boxes)
    if (!is_valid(b))
      throw Error(ErrorKind::InvalidArgument, "box " + render_box(b) + " is outside the [0,100] frame");
}

template <std::size_t N>
std::string closed_label(std::string_view label, const std::array<std::string_view, N>& vocabulary,
                         TaskKind kind) {
  const std::string norm = lowered(label);
  if (std::find(vocabulary.begin(), vocabulary.end(), norm) == vocabulary.end())
    throw Error(ErrorKind::InvalidClassLabel,
                "'" + std::string(label) + "' is not a valid " + std::string(name(kind)) + " label");
  return norm;
}

void add_pair(InstructionRecord& r, std::string question, std::string answer) {
  r.turns.push_back({Role::User, std::move(question)});
  r.turns.push_back({Role::Assistant, std::move(answer)});
}

}  // namespace

std::string_view name(LabelGeometry::Kind kind) noexcept {
  switch (kind) {
    case LabelGeometry::Kind::Point: return "point";
    case LabelGeometry::Kind::Polygon: return "polygon";
    case LabelGeometry::Kind::Box: return "box";
  }
  return "point";
}

std::string_view name(Role role) noexcept { return role == Role::User ? "user" : "assistant"; }

void LabeledSample::validate() const {
  if (sample_id.empty()) throw Error(ErrorKind::SchemaViolation, "sample has an empty id");
  if (image_refs.empty())
    throw Error(ErrorKind::SchemaViolation, "sample '" + sample_id + "' has no image references");
  for (const auto& label : labels) {
    if (trim(label.category).empty())
      throw Error(ErrorKind::SchemaViolation, "sample '" + sample_id + "' has an empty label category");
    const std::size_t n = label.geometry.coords.size();
    const bool ok = [&] {
      switch (label.geometry.kind) {
        case LabelGeometry::Kind::Point: return n == 2;
        case LabelGeometry::Kind::Polygon: return n >= 6 && n % 2 == 0;
        case LabelGeometry::Kind::Box: return n == 4 || n == 5;
      }
      return false;
    }();
    if (!ok)
      throw Error(ErrorKind::SchemaViolation, "sample '" + sample_id + "' label '" + label.category +
                                                  "' has " + std::to_string(n) + " coordinates for a " +
                                                  std::string(name(label.geometry.kind)));
  }
}

std::vector<std::string> LabeledSample::keywords() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& label : labels)
    if (seen.insert(label.category).second) out.push_back(label.category);
  return out;
}

void InstructionRecord::validate() const {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::SchemaViolation, "record '" + record_id + "': " + why);
  };
  if (record_id.empty()) fail("empty record id");
  if (image_refs.empty()) fail("no image references");
  if (turns.empty() || turns.size() % 2 != 0) fail("turns must form complete user/assistant pairs");
  for (std::size_t i = 0; i < turns.size(); ++i)
    if (turns[i].role != (i % 2 == 0 ? Role::User : Role::Assistant))
      fail("turn " + std::to_string(i) + " breaks user/assistant alternation");
  if (!find_stage_row(stage, dataset, tags, task_kind))
    fail("stage " + std::to_string(stage) + " / '" + dataset + "' / " + canonical(tags) + " / " +
         std::string(name(task_kind)) + " is not a row of the stage table");
}

const StageRow& InstructionRecord::row() const {
  const StageRow* row = find_stage_row(stage, dataset, tags, task_kind);
  if (!row) validate();
  return *row;
}

std::vector<LabeledSample> filter_labels(std::span<const LabeledSample> samples, int min_labels) {
  if (min_labels < 1) throw Error(ErrorKind::InvalidRange, "min_labels must be >= 1");
  std::vector<LabeledSample> kept;
  for (const auto& s : samples)
    if (s.labels.size() >= static_cast<std::size_t>(min_labels)) kept.push_back(s);
  return kept;
}

void ImageFilter::validate() const {
  if (!(lum_max >= 0 && lum_max <= 1)) throw Error(ErrorKind::InvalidRange, "lum_max must lie in [0,1]");
  if (!(cov_min >= 0 && cov_min <= 1)) throw Error(ErrorKind::InvalidRange, "cov_min must lie in [0,1]");
}

std::string render_prompt(const LabeledSample& sample, std::string_view subject,
                          std::string_view exemplar) {
  const auto keywords = sample.keywords();
  if (std::find(keywords.begin(), keywords.end(), subject) == keywords.end())
    throw Error(ErrorKind::UnknownSubject, "'" + std::string(subject) +
                                               "' is not a label category of sample '" +
                                               sample.sample_id + "'");
  std::string_view ex = trim(exemplar);
  if (!ex.empty() && ex.back() == '.') ex.remove_suffix(1);
  const std::string s(subject);
  std::string prompt(kImagePlaceholder);
  prompt += "Write a question and answer pair about this satellite image. For example, on another "
            "image, a satisfactory pair is: ";
  prompt += ex;
  prompt += ". The current image has been annotated with the following keywords: ";
  prompt += join(keywords, ", ");
  prompt += ". Generate the pair for the following subject: " + s +
            ", which is visible in the satellite image. The question or answer must refer to the " + s +
            ", and must refer to either its position, interaction with other elements in the image, "
            "characteristics, or function. The answer must be objective, based on visible elements "
            "in the image, and require the image to answer. Avoid any assumptions or extrapolations "
            "that are not clearly supported by the image.";
  return prompt;
}

QaPair validate_qa_format(std::string_view text) {
  constexpr std::string_view kQ = "Question:";
  constexpr std::string_view kA = "Answer:";
  const auto fail = [](const std::string& why) -> QaPair {
    throw Error(ErrorKind::FormatError, why);
  };
  const std::size_t nq = count_occurrences(text, kQ);
  const std::size_t na = count_occurrences(text, kA);
  if (nq == 0) return fail("missing marker 'Question:'");
  if (na == 0) return fail("missing marker 'Answer:'");
  if (nq > 1) return fail("duplicate marker 'Question:'");
  if (na > 1) return fail("duplicate marker 'Answer:'");
  const auto q = text.find(kQ);
  const auto a = text.find(kA);
  if (a < q) return fail("'Answer:' precedes 'Question:'");
  QaPair pair{std::string(trim(text.substr(q + kQ.size(), a - q - kQ.size()))),
              std::string(trim(text.substr(a + kA.size())))};
  if (pair.question.empty()) return fail("empty field 'Question'");
  if (pair.answer.empty()) return fail("empty field 'Answer'");
  return pair;
}

const StageRow& generation_row(std::string_view source) {
  const auto row_named = [](int stage, std::string_view dataset) -> const StageRow& {
    for (const auto& row : stage_rows())
      if (row.stage == stage && row.dataset == dataset) return row;
    throw Error(ErrorKind::InvalidArgument, "missing stage row");
  };
  if (source == "NAIP") return row_named(1, "NAIP");
  if (source == "Sentinel2" || source == "Sentinel-2") return row_named(1, "Sentinel-2");
  if (source == "Landsat") return row_named(1, "Landsat");
  if (source == "SkyScript") return row_named(1, "SkyScript");
  if (source == "Sentinel1" || source == "Sentinel-1") return row_named(3, "Sentinel-1");
  throw Error(ErrorKind::InvalidArgument,
              "source '" + std::string(source) + "' has no generated-pair stage row");
}

InstructionRecord generate_record(const LabeledSample& sample, std::string_view subject,
                                  GeneratorClient& client, const GenerateOptions& options) {
  if (options.max_retries < 1) throw Error(ErrorKind::InvalidRange, "max_retries must be >= 1");
  sample.validate();
  const StageRow& row = generation_row(sample.source);
  GeneratorRequest request;
  request.model = options.model;
  request.image_refs = sample.image_refs;
  request.prompt = render_prompt(sample, subject, options.exemplar);
  request.max_tokens = options.max_tokens;
  request.timeout_s = options.timeout_s;

  std::string last_reason;
  for (int attempt = 1; attempt <= options.max_retries; ++attempt) {
    const GeneratorResponse response = client.complete(request);
    try {
      const QaPair qa = validate_qa_format(response.text);
      InstructionRecord r;
      r.record_id = options.record_id.empty() ? sample.sample_id + "/" + std::string(subject)
                                              : options.record_id;
      r.stage = row.stage;
      r.dataset = std::string(row.dataset);
      r.task_kind = TaskKind::PretrainCaption;
      r.tags = row.tags;
      r.image_refs = sample.image_refs;
      add_pair(r, qa.question, qa.answer);
      return r;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FormatError) throw;
      last_reason = e.what();
    }
  }
  throw FormatExhaustedError(options.max_retries, last_reason);
}

InstructionRecord render_task_record(TaskKind kind, const TaskInputs& in) {
  InstructionRecord r;
  r.record_id = in.record_id;
  r.task_kind = kind;
  r.image_refs = in.image_refs;
  if (r.record_id.empty()) throw Error(ErrorKind::MissingField, "record needs 'record_id'");
  if (r.image_refs.empty()) throw Error(ErrorKind::MissingField, "record needs 'image_refs'");
  const StageRow& fallback = default_row(kind);
  r.stage = in.stage.value_or(fallback.stage);
  r.dataset = in.dataset.value_or(std::string(fallback.dataset));
  r.tags = in.tags.value_or(fallback.tags);

  switch (kind) {
    case TaskKind::PretrainCaption:
      add_pair(r, "Describe this image in detail.", require_text(in.caption, "caption", kind));
      break;
    case TaskKind::Caption:
      add_pair(r, "Could you provide the caption for input image?",
               require_text(in.caption, "caption", kind));
      break;
    case TaskKind::Classification: {
      const auto& label = require_text(in.class_label, "class_label", kind);
      if (in.class_options.empty()) {
        add_pair(r, "Classify the image.", capitalized(label));
      } else {
        std::vector<std::string> options;
        for (const auto& o : in.class_options) options.push_back(lowered(o));
        if (std::find(options.begin(), options.end(), lowered(label)) == options.end())
          throw Error(ErrorKind::InvalidClassLabel,
                      "'" + label + "' is not among the listed classification options");
        add_pair(r, "Classify the image within one of the given classes: " + join(options, ", ") + ".",
                 capitalized(label));
      }
      break;
    }
    case TaskKind::Lcz:
      add_pair(r, "Which local climate zone does this image belong to?",
               capitalized(require_text(in.class_label, "class_label", kind)));
      break;
    case TaskKind::TreeSpecies:
      add_pair(r, "Which tree species is shown in this image?",
               capitalized(require_text(in.class_label, "class_label", kind)));
      break;
    case TaskKind::Detection:
      require_boxes(in, kind);
      add_pair(r, "Where is " + std::string(trim(require_text(in.object, "object", kind))) + "?",
               render_boxes(in.boxes));
      break;
    case TaskKind::Grounding:
      require_boxes(in, kind);
      add_pair(r, std::string(trim(require_text(in.referring, "referring", kind))),
               render_boxes(in.boxes));
      break;
    case TaskKind::Vqa:
      add_pair(r, std::string(trim(require_text(in.question, "question", kind))),
               std::string(trim(require_text(in.answer, "answer", kind))));
      break;
    case TaskKind::ChangeDetection:
      if (in.image_refs.size() != 2)
        throw Error(ErrorKind::MissingField, "change_detection record needs a pre/post image pair");
      add_pair(r, "Are there any semantic changes detected in images?",
               require_text(in.caption, "caption", kind));
      break;
    case TaskKind::Disaster: {
      const std::string label = closed_label(require_text(in.class_label, "class_label", kind),
                                             kDisasterTypes, kind);
      std::vector<std::string> options(kDisasterTypes.begin(), kDisasterTypes.end());
      add_pair(r, "Identify the type of disaster that occurred. Options: " + join(options, ", ") + "?",
               capitalized(label));
      break;
    }
    case TaskKind::Methane: {
      const bool present = require(in.plume_present, "plume_present", kind);
      add_pair(r, "Does this image have a methane plume?", present ? "Yes" : "No");
      if (present && !in.boxes.empty()) {
        require_boxes(in, kind);
        add_pair(r, "Give me the location of the methane plume.", render_boxes(in.boxes));
      }
      if (present && in.emission_rate_kg_h) {
        if (!(*in.emission_rate_kg_h >= 0))
          throw Error(ErrorKind::InvalidArgument, "emission rate must be non-negative");
        add_pair(r, "What is the emission rate of methane plume?",
                 "The emission rate is " + format_number(*in.emission_rate_kg_h) + "kg/h");
      }
      break;
    }
    case TaskKind::Uhi: {
      add_pair(r, "What is the temperature trend in the input?",
               closed_label(require_text(in.class_label, "class_label", kind), kUhiClasses, kind));
      if (in.uhi_factors)
        add_pair(r, "What factors are responsible for the temperature?",
                 std::string(trim(*in.uhi_factors)));
      if (in.uhi_mitigation)
        add_pair(r, "What sustainable practices can mitigate UHI effect?",
                 std::string(trim(*in.uhi_mitigation)));
      break;
    }
  }
  r.validate();
  return r;
}

std::uint64_t StageManifest::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto& [key, count] : counts) sum += count;
  return sum;
}

StageManifest assemble_stage_manifest(std::span<const InstructionRecord> records) {
  StageManifest m;
  for (const auto& r : records) ++m.counts[{r.stage, r.dataset, render_row_tags(r.row())}];
  return m;
}

std::string render_manifest_table(const StageManifest& manifest) {
  std::size_t dataset_w = 7, tags_w = 4;
  for (const auto& [key, count] : manifest.counts) {
    dataset_w = std::max(dataset_w, key.dataset.size());
    tags_w = std::max(tags_w, key.tags.size());
  }
  const auto line = [&](std::string_view stage, std::string_view dataset, std::string_view tags,
                        std::string_view count) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-5.*s  %-*.*s  %-*.*s  %12.*s\n", static_cast<int>(stage.size()),
                  stage.data(), static_cast<int>(dataset_w), static_cast<int>(dataset.size()),
                  dataset.data(), static_cast<int>(tags_w), static_cast<int>(tags.size()), tags.data(),
                  static_cast<int>(count.size()), count.data());
    return std::string(buf);
  };
  std::string out = line("stage", "dataset", "tags", "records");
  for (const auto& [key, count] : manifest.counts)
    out += line(std::to_string(key.stage), key.dataset, key.tags, std::to_string(count));
  out += line("total", "", "", std::to_string(manifest.total()));
  return out;
}

}  // namespace earthforge
