#include "guikit/json_io.hpp"

#include <sstream>

#include "guikit/error.hpp"

namespace guikit {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) throw SchemaError(std::string("expected an object holding '") + name + "'");
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + name + "'");
  return *it;
}

int int_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_number_integer()) throw SchemaError(std::string("field '") + name + "' must be an integer");
  return v.get<int>();
}

std::string string_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_string()) throw SchemaError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

void put_optional(Json& j, const char* name, const std::optional<std::string>& v) {
  if (v) j[name] = *v;
}

}  // namespace

Json to_json(const BBox& b) {
  return Json{{"left", b.left}, {"top", b.top}, {"right", b.right}, {"bottom", b.bottom}};
}

Json to_json(const ScreenshotMeta& s) {
  Json j{{"id", s.id},
         {"width_px", s.width_px},
         {"height_px", s.height_px},
         {"platform", std::string(to_string(s.platform))}};
  put_optional(j, "image_ref", s.image_ref);
  return j;
}

Json to_json(const ElementRecord& e) {
  Json j;
  j["bbox"] = to_json(e.bbox);
  put_optional(j, "text", e.text);
  put_optional(j, "icon_class", e.icon_class);
  put_optional(j, "elem_class", e.elem_class);
  j["clickable"] = e.clickable;
  j["source_id"] = e.source_id;
  return j;
}

Json to_json(const ScreenRecord& r) {
  Json elements = Json::array();
  for (const auto& e : r.elements) elements.push_back(to_json(e));
  return Json{{"screenshot", to_json(r.screenshot)}, {"elements", std::move(elements)}};
}

Json to_json(const ReferringExpression& re) {
  return Json{{"kind", std::string(to_string(re.kind))}, {"text", re.text}};
}

Json to_json(const GroundingTriplet& t) {
  Json j;
  if (!t.id.empty()) j["id"] = t.id;
  j["screenshot"] = to_json(t.screenshot);
  j["re"] = to_json(t.re);
  j["target_bbox"] = to_json(t.target_bbox);
  return j;
}

Json to_json(const UnifiedAction& a) {
  return Json::parse(serialize_action(a, SerializeMode::strict_json));
}

Json to_json(const Step& s) {
  Json j;
  j["screenshot"] = to_json(s.screenshot);
  put_optional(j, "low_level_instruction", s.low_level_instruction);
  j["gold_action"] = to_json(s.gold_action);
  if (s.gold_bbox) j["gold_bbox"] = to_json(*s.gold_bbox);
  j["history_index"] = s.history_index;
  put_optional(j, "reasoning", s.reasoning);
  if (!s.provenance.is_null()) j["provenance"] = s.provenance;
  return j;
}

Json to_json(const Episode& e) {
  Json steps = Json::array();
  for (const auto& s : e.steps) steps.push_back(to_json(s));
  return Json{{"id", e.id},
              {"platform", std::string(to_string(e.platform))},
              {"goal", e.goal},
              {"steps", std::move(steps)}};
}

BBox bbox_from_json(const Json& j) {
  if (j.is_array()) {
    if (j.size() != 4) throw SchemaError("bbox array must have 4 entries");
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw SchemaError("bbox entries must be integers");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  }
  return {int_field(j, "left"), int_field(j, "top"), int_field(j, "right"), int_field(j, "bottom")};
}

ScreenshotMeta screenshot_from_json(const Json& j) {
  ScreenshotMeta s;
  s.id = string_field(j, "id");
  s.width_px = int_field(j, "width_px");
  s.height_px = int_field(j, "height_px");
  s.platform = parse_platform(string_field(j, "platform"));
  s.image_ref = optional_string(j, "image_ref");
  if (!s.valid()) throw SchemaError("screenshot '" + s.id + "' must have width_px, height_px >= 1");
  return s;
}

ElementRecord element_from_json(const Json& j) {
  ElementRecord e;
  e.bbox = bbox_from_json(field(j, "bbox"));
  e.text = optional_string(j, "text");
  e.icon_class = optional_string(j, "icon_class");
  e.elem_class = optional_string(j, "elem_class");
  if (auto it = j.find("clickable"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError("field 'clickable' must be a boolean");
    e.clickable = it->get<bool>();
  }
  e.source_id = optional_string(j, "source_id").value_or("");
  return e;
}

ScreenRecord screen_record_from_json(const Json& j) {
  ScreenRecord r;
  r.screenshot = screenshot_from_json(field(j, "screenshot"));
  const Json& elements = field(j, "elements");
  if (!elements.is_array()) throw SchemaError("field 'elements' must be an array");
  r.elements.reserve(elements.size());
  for (const auto& e : elements) r.elements.push_back(element_from_json(e));
  return r;
}

ReferringExpression re_from_json(const Json& j) {
  ReferringExpression re;
  re.kind = parse_re_kind(string_field(j, "kind"));
  re.text = string_field(j, "text");
  if (re.text.empty()) throw SchemaError("referring expression text must be nonempty");
  return re;
}

GroundingTriplet triplet_from_json(const Json& j, const std::string& default_id) {
  GroundingTriplet t;
  t.id = optional_string(j, "id").value_or(default_id);
  t.screenshot = screenshot_from_json(field(j, "screenshot"));
  t.re = re_from_json(field(j, "re"));
  t.target_bbox = bbox_from_json(field(j, "target_bbox"));
  if (!t.target_bbox.well_formed()) throw SchemaError("triplet '" + t.id + "' has a zero-area bbox");
  return t;
}

UnifiedAction action_from_json(const Json& j, Platform platform) {
  if (j.is_string()) return parse_action(j.get<std::string>(), platform);
  return parse_action(j.dump(), platform);
}

Step step_from_json(const Json& j, Platform platform) {
  Step s;
  s.screenshot = screenshot_from_json(field(j, "screenshot"));
  s.low_level_instruction = optional_string(j, "low_level_instruction");
  s.gold_action = action_from_json(field(j, "gold_action"), platform);
  if (auto it = j.find("gold_bbox"); it != j.end() && !it->is_null()) s.gold_bbox = bbox_from_json(*it);
  s.history_index = int_field(j, "history_index");
  s.reasoning = optional_string(j, "reasoning");
  if (auto it = j.find("provenance"); it != j.end()) s.provenance = *it;
  return s;
}

Episode episode_from_json(const Json& j) {
  Episode e;
  e.id = string_field(j, "id");
  e.platform = parse_platform(string_field(j, "platform"));
  e.goal = string_field(j, "goal");
  const Json& steps = field(j, "steps");
  if (!steps.is_array()) throw SchemaError("field 'steps' must be an array");
  e.steps.reserve(steps.size());
  for (const auto& s : steps) e.steps.push_back(step_from_json(s, e.platform));
  check_episode(e);
  return e;
}

JsonlReader::JsonlReader(const std::string& path) : in_(path) {
  if (!in_) throw IoError("cannot open '" + path + "' for reading");
}

std::optional<JsonlReader::Line> JsonlReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_no_;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    return Line{line_no_, std::move(text)};
  }
  return std::nullopt;
}

std::vector<JsonlReader::Line> JsonlReader::next_chunk(std::size_t max) {
  std::vector<Line> out;
  out.reserve(max);
  while (out.size() < max) {
    auto line = next();
    if (!line) break;
    out.push_back(std::move(*line));
  }
  return out;
}

Json parse_json_line(const JsonlReader::Line& line) {
  try {
    return Json::parse(line.text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("line " + std::to_string(line.number) + ": invalid JSON: " + e.what());
  }
}

JsonlWriter::JsonlWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void JsonlWriter::write(const Json& j) {
  out_ << j.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
}

void JsonlWriter::write_raw(const std::string& line) { out_ << line << '\n'; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace guikit
