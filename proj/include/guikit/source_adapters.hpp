#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guikit/episode.hpp"
#include "guikit/error.hpp"
#include "guikit/json_io.hpp"

namespace guikit {

enum class SourceKind {
  aitw,
  aitz,
  amex,
  androidcontrol,
  guiodyssey,
  guiact_mobile,
  guiact_web,
  mind2web,
  weblinx,
  omniact_desktop,
};

inline constexpr std::array kAllSources{
    SourceKind::aitw,          SourceKind::aitz,       SourceKind::amex,
    SourceKind::androidcontrol, SourceKind::guiodyssey, SourceKind::guiact_mobile,
    SourceKind::guiact_web,    SourceKind::mind2web,   SourceKind::weblinx,
    SourceKind::omniact_desktop};

std::string_view to_string(SourceKind s);
SourceKind parse_source(std::string_view s);

// One episode as exported by a source dataset. Steps keep their native fields
// untouched.
struct SourceEpisode {
  SourceKind source = SourceKind::aitw;
  std::string episode_id;
  std::string goal;
  std::vector<Json> raw_steps;
};

SourceEpisode source_episode_from_json(const Json& j);

struct AdapterConfig {
  // Normalized (unit-square) gesture length at or below which a gesture is a
  // tap.
  double tap_vs_swipe_threshold = 0.04;
  // Gesture lengths up to [0] are short, up to [1] medium, longer are long.
  std::array<double, 2> swipe_distance_buckets{0.25, 0.50};
  int history_window = 8;
  // Scrolling content down is performed by swiping the finger up.
  bool invert_scroll = true;

  // Throws ConfigError unless 0 < tap < buckets[0] < buckets[1] <= sqrt(2)
  // and history_window >= 1.
  void validate() const;
};

class ConversionError : public Error {
 public:
  ConversionError(SourceKind source, std::size_t step_index, std::string raw_action,
                  const std::string& detail);

  SourceKind source() const noexcept { return source_; }
  std::size_t step_index() const noexcept { return step_index_; }
  const std::string& raw_action() const noexcept { return raw_action_; }

 private:
  SourceKind source_;
  std::size_t step_index_;
  std::string raw_action_;
};

// Point in the unit square, origin top-left.
struct UnitPoint {
  double x = 0.0;
  double y = 0.0;
};

struct Gesture {
  enum class Kind { tap, swipe };
  Kind kind = Kind::tap;
  Direction direction = Direction::up;
  SwipeDistance distance = SwipeDistance::short_;
};

// Tap iff |end - start| <= threshold; otherwise a swipe along the dominant
// axis (|dy| >= |dx| counts as vertical) bucketed by length.
Gesture classify_dual_point(UnitPoint start, UnitPoint end, const AdapterConfig& cfg);

SwipeDistance distance_bucket(double length, const AdapterConfig& cfg);

// Smallest-area candidate containing p; ties broken by (top, left), then by
// input order. Throws NotFoundError when no candidate contains p.
BBox derive_enclosing_bbox(PixelPoint p, std::span<const BBox> candidates);

enum class CoordinateSpace { unit, permille, pixel };
enum class AxisOrder { xy, yx };
enum class BBoxFormat { ltrb, xywh };

enum class RuleKind {
  dual_point,
  point,
  two_point,
  text,
  typed_click,
  direction,
  offset,
  no_arg,
  status,
  switch_tab,
  script,
};

std::string_view to_string(RuleKind k);

// How one native action name maps into the unified space. `params` holds the
// rule's field names and constants as written in the manifest.
struct ActionRule {
  RuleKind kind = RuleKind::no_arg;
  std::string emit;
  Json params;
};

// Per-source mapping manifest, loaded from data/manifests/<source>.json.
struct SourceManifest {
  SourceKind source = SourceKind::aitw;
  Platform platform = Platform::mobile;
  CoordinateSpace coordinates = CoordinateSpace::pixel;
  AxisOrder axis_order = AxisOrder::xy;
  BBoxFormat bbox_format = BBoxFormat::ltrb;

  std::string action_field = "action_type";
  std::string screenshot_field = "screenshot_id";
  std::string width_field = "width";
  std::string height_field = "height";
  std::optional<std::string> image_field;
  std::optional<std::string> instruction_field;
  std::optional<std::string> reasoning_field;
  std::optional<std::string> candidates_field;

  // Native action name -> rule. The key "*" applies to every step.
  std::map<std::string, ActionRule, std::less<>> actions;
};

// Throws ConfigError for unknown rule kinds, emits outside the platform's
// action space or missing rule parameters.
SourceManifest manifest_from_json(const Json& j);
SourceManifest load_manifest(const std::string& path);

class AdapterRegistry {
 public:
  AdapterRegistry() = default;
  // Loads every <source>.json found in `dir`.
  static AdapterRegistry from_directory(const std::string& dir);

  void add(SourceManifest m);
  const SourceManifest* find(SourceKind s) const;

  // Throws ConversionError (unmappable action, missing screen size, point
  // outside screen) or ConfigError (no manifest for the source).
  Episode convert_episode(const SourceEpisode& e, const AdapterConfig& cfg) const;

 private:
  std::map<SourceKind, SourceManifest> manifests_;
};

Episode convert_episode(const SourceEpisode& e, const SourceManifest& manifest,
                        const AdapterConfig& cfg);

}  // namespace guikit
