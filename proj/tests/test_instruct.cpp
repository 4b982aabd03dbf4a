// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <regex>

#include "earthforge/instruct.hpp"
#include "earthforge/tags.hpp"
#include "fixtures.hpp"

using namespace earthforge;

namespace {

LabeledSample sample_with(std::vector<std::string> categories, std::string source = "NAIP") {
  LabeledSample s;
  s.sample_id = "s1";
  s.image_refs = {"a.png"};
  s.source = std::move(source);
  for (auto& c : categories) s.labels.push_back({std::move(c), {LabelGeometry::Kind::Point, {1, 2}}, "", {}});
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an earthforge::Error");
  return ErrorKind::InvalidArgument;
}

constexpr std::string_view kGood = "Question: Where is the road? Answer: It runs along the left edge.";

}  // namespace

TEST_CASE("tag tokens render byte-exact") {
  CHECK(render(Modality::HrRgb05) == "[hr_rgb_0.5]");
  CHECK(render(Modality::S1Vh10) == "[s1_vh_10]");
  CHECK(render(Modality::HyperRgb3) == "[hyper_rgb_3]");
  CHECK(render(TaskTag::TreeClassify) == "[treeclassify]");
  CHECK(canonical({TaskTag::ChangeDet, Modality::HrRgbTemp05}) == "[changedet][hr_rgb_temp_0.5]");
  CHECK(canonical({std::nullopt, Modality::S2Ms30}) == "[s2_ms_30]");
  for (Modality m : kAllModalities) CHECK(parse_modality(name(m)) == m);
  for (TaskKind k : kAllTaskKinds) CHECK(parse_task_kind(name(k)) == k);
}

TEST_CASE("tag parsing accepts both spacings and nothing else") {
  const TagSet uhi{TaskTag::Uhi, Modality::L8Ms30};
  CHECK(parse_tags("[uhi][l8_ms_30]") == uhi);
  CHECK(parse_tags("[uhi] [l8_ms_30]") == uhi);
  CHECK(parse_tags("[l8_ms_30]") == TagSet{std::nullopt, Modality::L8Ms30});
  CHECK_FALSE(parse_tags("[uhi]").has_value());
  CHECK_FALSE(parse_tags("[l8_ms_31]").has_value());
  CHECK_FALSE(parse_tags("[uhi][l8_ms_30] ").has_value());
  CHECK_FALSE(parse_tags("").has_value());
}

TEST_CASE("stage rows print their own spacing") {
  int spaced = 0;
  for (const auto& row : stage_rows()) {
    const std::string printed = render_row_tags(row);
    CHECK(parse_tags(printed) == row.tags);
    if (row.spaced) {
      ++spaced;
      CHECK(printed.find("] [") != std::string::npos);
    }
  }
  CHECK(spaced == 2);
  CHECK(stage_rows().size() == 17);
}

TEST_CASE("label filter keeps samples with enough labels") {
  std::vector<LabeledSample> samples = {sample_with({"a", "b"}), sample_with({"a", "b", "c"}),
                                        sample_with({"a", "a", "a", "a"})};
  CHECK(filter_labels(samples).size() == 2);
  CHECK(filter_labels(samples, 4).size() == 1);
  CHECK(kind_of([&] { filter_labels(samples, 0); }) == ErrorKind::InvalidRange);
}

TEST_CASE("image filter thresholds are inclusive") {
  const ImageFilter f;
  CHECK(filter_image(fixtures::planted_raster(0.75f, 32), f));   // coverage exactly 0.5
  CHECK_FALSE(filter_image(fixtures::planted_raster(0.75f, 33), f));
  CHECK_FALSE(filter_image(fixtures::planted_raster(0.875f, 0), f));
  CHECK(filter_image(fixtures::planted_raster(0.8f, 0), ImageFilter{0.8f, 0.5}));
  CHECK(kind_of([] { ImageFilter{1.5, 0.5}.validate(); }) == ErrorKind::InvalidRange);
}

TEST_CASE("prompt carries placeholder, exemplar, keywords and subject") {
  const auto s = sample_with({"road", "tree", "road", "pond"});
  CHECK(s.keywords() == std::vector<std::string>{"road", "tree", "pond"});
  const std::string p = render_prompt(s, "tree");
  CHECK(p.rfind("<ImageHere>Write a question and answer pair about this satellite image.", 0) == 0);
  CHECK(p.find("solar panel canopies, promoting renewable energy use. The current image") != std::string::npos);
  CHECK(p.find("keywords: road, tree, pond. Generate the pair for the following subject: tree, which is visible") !=
        std::string::npos);
  CHECK(p.find("The question or answer must refer to the tree,") != std::string::npos);
  CHECK(kind_of([&] { render_prompt(s, "bridge"); }) == ErrorKind::UnknownSubject);
}

TEST_CASE("question/answer validation") {
  const auto qa = validate_qa_format("Sure! Question:  Is it wet?\nAnswer: Yes. ");
  CHECK(qa.question == "Is it wet?");
  CHECK(qa.answer == "Yes.");
  for (std::string_view bad : {"Answer: x", "Question: x", "Answer: a Question: b", "Question: Answer: b",
                               "Question: a Answer:  ", "Question: a Question: b Answer: c",
                               "Question: a Answer: b Answer: c"})
    CHECK(kind_of([&] { validate_qa_format(bad); }) == ErrorKind::FormatError);
}

TEST_CASE("generation retries the same prompt up to the limit") {
  const auto s = sample_with({"road", "tree", "pond"});

  SUBCASE("success on the fifth call") {
    std::vector<MockStep> script(4, MockStep::reply("no markers here"));
    script.push_back(MockStep::reply(std::string(kGood)));
    MockGenerator mock(script);
    const auto r = generate_record(s, "road", mock);
    CHECK(mock.call_count() == 5);
    const auto reqs = mock.requests();
    for (const auto& q : reqs) CHECK(q.prompt == reqs.front().prompt);
    CHECK(r.record_id == "s1/road");
    CHECK(r.turns.size() == 2);
    CHECK(r.turns[1].text == "It runs along the left edge.");
    CHECK(r.dataset == "NAIP");
    CHECK(r.task_kind == TaskKind::PretrainCaption);
  }
  SUBCASE("six malformed replies exhaust after five calls") {
    MockGenerator mock(std::vector<MockStep>(6, MockStep::reply("Answer: first")));
    try {
      generate_record(s, "road", mock);
      FAIL("expected FormatExhausted");
    } catch (const FormatExhaustedError& e) {
      CHECK(e.kind() == ErrorKind::FormatExhausted);
      CHECK(e.attempts() == 5);
    }
    CHECK(mock.call_count() == 5);
  }
  SUBCASE("transport failures propagate immediately") {
    MockGenerator mock({MockStep::fail(ErrorKind::TransportError)});
    CHECK(kind_of([&] { generate_record(s, "road", mock); }) == ErrorKind::TransportError);
    CHECK(mock.call_count() == 1);
  }
  SUBCASE("sources map to stage rows") {
    MockGenerator mock({MockStep::reply(std::string(kGood))});
    const auto r = generate_record(sample_with({"road"}, "Sentinel1"), "road", mock);
    CHECK(r.stage == 3);
    CHECK(canonical(r.tags) == "[s1_vh_10]");
    CHECK(kind_of([] { generation_row("Pleiades"); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("task templates") {
  TaskInputs in;
  in.record_id = "r";
  in.image_refs = {"x.png"};

  SUBCASE("classification with options") {
    in.class_label = "Airport";
    in.class_options = {"Airport", "Beach"};
    const auto r = render_task_record(TaskKind::Classification, in);
    CHECK(r.turns[0].text == "Classify the image within one of the given classes: airport, beach.");
    CHECK(r.turns[1].text == "Airport");
    in.class_label = "forest";
    CHECK(kind_of([&] { render_task_record(TaskKind::Classification, in); }) == ErrorKind::InvalidClassLabel);
  }
  SUBCASE("methane") {
    in.plume_present = true;
    in.emission_rate_kg_h = 11239;
    in.boxes = {make_box(10.0, 10.0, 20.0, 30.0)};
    const auto r = render_task_record(TaskKind::Methane, in);
    REQUIRE(r.turns.size() == 6);
    CHECK(r.turns[1].text == "Yes");
    CHECK(r.turns[3].text == "[10,10,20,30,0]");
    CHECK(r.turns[5].text == "The emission rate is 11239kg/h");
    CHECK(canonical(r.tags) == "[hyper_rgb_3]");
  }
  SUBCASE("uhi is closed-vocabulary") {
    in.class_label = "Mildly Hot";
    in.uhi_factors = "Dense roofs.";
    const auto r = render_task_record(TaskKind::Uhi, in);
    CHECK(r.turns[1].text == "mildly hot");
    CHECK(r.turns.size() == 4);
    CHECK(r.row().dataset == "Urban Heat Island");
    in.class_label = "warm";
    CHECK(kind_of([&] { render_task_record(TaskKind::Uhi, in); }) == ErrorKind::InvalidClassLabel);
  }
  SUBCASE("disaster lists its options") {
    in.class_label = "flood";
    const auto r = render_task_record(TaskKind::Disaster, in);
    CHECK(r.turns[0].text ==
          "Identify the type of disaster that occurred. Options: flood, wind, fire, tsunami, earthquake, volcano?");
    CHECK(r.turns[1].text == "Flood");
  }
  SUBCASE("change detection needs two images") {
    in.caption = "A new road was built.";
    CHECK(kind_of([&] { render_task_record(TaskKind::ChangeDetection, in); }) == ErrorKind::MissingField);
    in.image_refs.push_back("y.png");
    const auto r = render_task_record(TaskKind::ChangeDetection, in);
    CHECK(canonical(r.tags) == "[changedet][hr_rgb_temp_0.5]");
  }
  SUBCASE("missing inputs and bad overrides") {
    CHECK(kind_of([&] { render_task_record(TaskKind::Detection, in); }) == ErrorKind::MissingField);
    in.caption = "x";
    in.dataset = "NAIP";
    CHECK(kind_of([&] { render_task_record(TaskKind::Caption, in); }) == ErrorKind::SchemaViolation);
  }
  SUBCASE("sar rows take geochat-style tasks") {
    in.question = "Is there a ship?";
    in.answer = "Yes";
    in.stage = 3;
    in.dataset = "Sentinel-1";
    in.tags = TagSet{std::nullopt, Modality::S1Vh10};
    CHECK(render_task_record(TaskKind::Vqa, in).row().stage == 3);
  }
}

TEST_CASE("record validation") {
  TaskInputs in{"r", {"x.png"}};
  in.caption = "A field.";
  InstructionRecord r = render_task_record(TaskKind::Caption, in);
  CHECK_NOTHROW(r.validate());
  auto bad = r;
  bad.turns.pop_back();
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::SchemaViolation);
  bad = r;
  std::swap(bad.turns[0], bad.turns[1]);
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::SchemaViolation);
  bad = r;
  bad.tags.task.reset();
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::SchemaViolation);
}

TEST_CASE("manifest counts per row") {
  std::vector<InstructionRecord> records;
  TaskInputs in{"r", {"x.png"}};
  in.caption = "c";
  for (int i = 0; i < 3; ++i) records.push_back(render_task_record(TaskKind::Caption, in));
  in.class_label = "cooler";
  records.push_back(render_task_record(TaskKind::Uhi, in));
  const auto m = assemble_stage_manifest(records);
  CHECK(m.total() == 4);
  CHECK(m.counts.at({2, "Caption", "[caption] [hr_rgb_0.5]"}) == 3);
  CHECK(m.counts.at({3, "Urban Heat Island", "[uhi][l8_ms_30]"}) == 1);
  const std::string table = render_manifest_table(m);
  CHECK(table.find("[caption] [hr_rgb_0.5]") != std::string::npos);
  CHECK(table.find("total") != std::string::npos);
}

TEST_CASE("jsonl round trip is byte stable") {
  fixtures::TempDir dir("jsonl");
  std::vector<InstructionRecord> records;
  TaskInputs in{"r1", {"x.png"}};
  in.caption = "Line one\nline \"two\" \xc3\xa9";
  records.push_back(render_task_record(TaskKind::Caption, in));
  in.record_id = "r2";
  in.class_label = "extremely hot";
  records.push_back(render_task_record(TaskKind::Uhi, in));
  emit_jsonl(records, dir / "a.jsonl");
  const auto back = load_jsonl(dir / "a.jsonl");
  CHECK(back == records);
  emit_jsonl(back, dir / "b.jsonl");
  CHECK(fixtures::slurp(dir / "a.jsonl") == fixtures::slurp(dir / "b.jsonl"));

  const std::string line = record_to_json_line(records[0]);
  CHECK(line.rfind(R"({"schema":"earthdial-instruct/1","record_id":"r1","stage":2,"dataset":"Caption",)", 0) == 0);
  CHECK(line.find(R"("tags":"[caption][hr_rgb_0.5]","tags_display":"[caption] [hr_rgb_0.5]")") != std::string::npos);
}

TEST_CASE("jsonl errors name the line") {
  fixtures::TempDir dir("badjsonl");
  TaskInputs in{"r1", {"x.png"}};
  in.caption = "c";
  const std::string good = record_to_json_line(render_task_record(TaskKind::Caption, in));
  fixtures::spit(dir / "x.jsonl", good + "\n{not json\n" + good + "\n");
  try {
    load_jsonl(dir / "x.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseLineError& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).rfind("line 2:", 0) == 0);
  }
  fixtures::spit(dir / "y.jsonl", "\n" + good + "\n\n");
  CHECK(load_jsonl(dir / "y.jsonl").size() == 1);
  CHECK(kind_of([&] { load_jsonl(dir / "missing.jsonl"); }) == ErrorKind::IoError);
}

TEST_CASE("sample jsonl round trip") {
  LabeledSample s = sample_with({"road", "tree"});
  s.labels[1].geometry = {LabelGeometry::Kind::Polygon, {0, 0, 1, 0, 1, 1}};
  s.labels[1].attributes = {{"species", "oak"}};
  CHECK(sample_from_json_line(sample_to_json_line(s)) == s);
  s.labels[0].geometry.coords = {1};
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::SchemaViolation);
}
