#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "guikit/core_model.hpp"
#include "guikit/episode.hpp"
#include "json.hpp"

namespace guikit {

// Insertion-ordered so emitted records keep a stable, documented key order.
using Json = nlohmann::ordered_json;

Json to_json(const BBox& b);
Json to_json(const ScreenshotMeta& s);
Json to_json(const ElementRecord& e);
Json to_json(const ScreenRecord& r);
Json to_json(const ReferringExpression& re);
Json to_json(const GroundingTriplet& t);
Json to_json(const Step& s);
Json to_json(const Episode& e);
// Strict-JSON object form of an action, keys in table order.
Json to_json(const UnifiedAction& a);

// Each throws SchemaError naming the offending field.
BBox bbox_from_json(const Json& j);
ScreenshotMeta screenshot_from_json(const Json& j);
ElementRecord element_from_json(const Json& j);
ScreenRecord screen_record_from_json(const Json& j);
ReferringExpression re_from_json(const Json& j);
GroundingTriplet triplet_from_json(const Json& j, const std::string& default_id = {});
Step step_from_json(const Json& j, Platform platform);
Episode episode_from_json(const Json& j);
UnifiedAction action_from_json(const Json& j, Platform platform);

// Line-at-a-time JSON Lines reader. Blank lines are skipped.
class JsonlReader {
 public:
  // Throws IoError when the file cannot be opened.
  explicit JsonlReader(const std::string& path);

  struct Line {
    std::size_t number = 0;  // 1-based line number in the file
    std::string text;
  };

  std::optional<Line> next();
  // Reads up to `max` non-blank lines.
  std::vector<Line> next_chunk(std::size_t max);

 private:
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

Json parse_json_line(const JsonlReader::Line& line);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(const Json& j);
  void write_raw(const std::string& line);

 private:
  std::ofstream out_;
  std::string path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace guikit
