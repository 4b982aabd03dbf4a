// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "json.hpp"

#include "earthforge/instruct.hpp"

namespace earthforge {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

template <typename T>
T field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::ParseError, std::string("missing key '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ParseError, std::string("key '") + key + "' has the wrong type");
  }
}

json parse_object(std::string_view line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded()) throw Error(ErrorKind::ParseError, "malformed JSON");
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, "expected a JSON object");
  return obj;
}

LabelGeometry::Kind parse_geometry_kind(const std::string& s) {
  if (s == "point") return LabelGeometry::Kind::Point;
  if (s == "polygon") return LabelGeometry::Kind::Polygon;
  if (s == "box") return LabelGeometry::Kind::Box;
  throw Error(ErrorKind::ParseError, "unknown geometry type '" + s + "'");
}

template <typename T, typename Parse>
std::vector<T> load_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw ParseLineError(number, e.what());
    }
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read failure on " + path.string());
  return out;
}

}  // namespace

std::string record_to_json_line(const InstructionRecord& record) {
  ordered_json j;
  j["schema"] = kRecordSchema;
  j["record_id"] = record.record_id;
  j["stage"] = record.stage;
  j["dataset"] = record.dataset;
  j["task_kind"] = name(record.task_kind);
  j["tags"] = canonical(record.tags);
  j["tags_display"] = render_row_tags(record.row());
  j["image_refs"] = record.image_refs;
  ordered_json turns = ordered_json::array();
  for (const auto& t : record.turns) turns.push_back({{"role", name(t.role)}, {"text", t.text}});
  j["turns"] = std::move(turns);
  return j.dump();
}

InstructionRecord record_from_json_line(std::string_view line) {
  const json j = parse_object(line);
  if (field<std::string>(j, "schema") != kRecordSchema)
    throw Error(ErrorKind::ParseError, "unsupported schema '" + field<std::string>(j, "schema") + "'");
  InstructionRecord r;
  r.record_id = field<std::string>(j, "record_id");
  r.stage = field<int>(j, "stage");
  r.dataset = field<std::string>(j, "dataset");
  const auto kind = parse_task_kind(field<std::string>(j, "task_kind"));
  if (!kind) throw Error(ErrorKind::ParseError, "unknown task_kind");
  r.task_kind = *kind;
  const auto tags = parse_tags(field<std::string>(j, "tags"));
  if (!tags) throw Error(ErrorKind::ParseError, "unknown tags '" + field<std::string>(j, "tags") + "'");
  r.tags = *tags;
  r.image_refs = field<std::vector<std::string>>(j, "image_refs");
  const auto turns = j.find("turns");
  if (turns == j.end() || !turns->is_array()) throw Error(ErrorKind::ParseError, "missing turns array");
  for (const auto& t : *turns) {
    if (!t.is_object()) throw Error(ErrorKind::ParseError, "turn is not an object");
    const auto role = field<std::string>(t, "role");
    if (role != "user" && role != "assistant")
      throw Error(ErrorKind::ParseError, "unknown role '" + role + "'");
    r.turns.push_back({role == "user" ? Role::User : Role::Assistant, field<std::string>(t, "text")});
  }
  try {
    r.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return r;
}

std::string sample_to_json_line(const LabeledSample& sample) {
  ordered_json j;
  j["sample_id"] = sample.sample_id;
  j["image_refs"] = sample.image_refs;
  j["source"] = sample.source;
  ordered_json labels = ordered_json::array();
  for (const auto& l : sample.labels) {
    ordered_json lj;
    lj["category"] = l.category;
    lj["geometry"] = {{"type", name(l.geometry.kind)}, {"coords", l.geometry.coords}};
    lj["position"] = l.position;
    lj["attributes"] = l.attributes;
    labels.push_back(std::move(lj));
  }
  j["labels"] = std::move(labels);
  return j.dump();
}

LabeledSample sample_from_json_line(std::string_view line) {
  const json j = parse_object(line);
  LabeledSample s;
  s.sample_id = field<std::string>(j, "sample_id");
  s.image_refs = field<std::vector<std::string>>(j, "image_refs");
  s.source = field<std::string>(j, "source");
  const auto labels = j.find("labels");
  if (labels != j.end()) {
    if (!labels->is_array()) throw Error(ErrorKind::ParseError, "labels is not an array");
    for (const auto& lj : *labels) {
      if (!lj.is_object()) throw Error(ErrorKind::ParseError, "label is not an object");
      Label l;
      l.category = field<std::string>(lj, "category");
      if (const auto g = lj.find("geometry"); g != lj.end()) {
        l.geometry.kind = parse_geometry_kind(field<std::string>(*g, "type"));
        l.geometry.coords = field<std::vector<double>>(*g, "coords");
      }
      if (lj.contains("position")) l.position = field<std::string>(lj, "position");
      if (lj.contains("attributes"))
        l.attributes = field<std::map<std::string, std::string>>(lj, "attributes");
      s.labels.push_back(std::move(l));
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return s;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorKind::IoError, "write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorKind::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void emit_jsonl(std::span<const InstructionRecord> records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += record_to_json_line(r);
    text += '\n';
  }
  write_file_atomic(path, text);
}

std::vector<InstructionRecord> load_jsonl(const std::filesystem::path& path) {
  return load_lines<InstructionRecord>(path, record_from_json_line);
}

std::vector<LabeledSample> load_samples_jsonl(const std::filesystem::path& path) {
  return load_lines<LabeledSample>(path, sample_from_json_line);
}

}  // namespace earthforge
