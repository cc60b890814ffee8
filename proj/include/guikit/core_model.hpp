#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace guikit {

enum class Platform { mobile, web, desktop };

std::string_view to_string(Platform p);
Platform parse_platform(std::string_view s);

// Screen position in pixels. Origin top-left, y grows downward.
struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

// Screen position in thousandths of the screen width/height.
struct NormPoint {
  static constexpr int kScale = 1000;

  int x = 0;
  int y = 0;

  bool in_range() const noexcept { return x >= 0 && x <= kScale && y >= 0 && y <= kScale; }
  friend bool operator==(const NormPoint&, const NormPoint&) = default;
};

struct BBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const noexcept { return right - left; }
  int height() const noexcept { return bottom - top; }
  std::int64_t area() const noexcept {
    return well_formed() ? std::int64_t{width()} * std::int64_t{height()} : 0;
  }
  // Positive width and height.
  bool well_formed() const noexcept { return left < right && top < bottom; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ScreenshotMeta {
  std::string id;
  int width_px = 0;
  int height_px = 0;
  Platform platform = Platform::mobile;
  std::optional<std::string> image_ref;

  bool valid() const noexcept { return width_px >= 1 && height_px >= 1; }
  std::int64_t area() const noexcept { return std::int64_t{width_px} * std::int64_t{height_px}; }
  bool contains(const BBox& b) const noexcept {
    return b.left >= 0 && b.top >= 0 && b.right <= width_px && b.bottom <= height_px;
  }
  friend bool operator==(const ScreenshotMeta&, const ScreenshotMeta&) = default;
};

struct ElementRecord {
  BBox bbox;
  std::optional<std::string> text;
  std::optional<std::string> icon_class;
  std::optional<std::string> elem_class;
  bool clickable = false;
  std::string source_id;

  friend bool operator==(const ElementRecord&, const ElementRecord&) = default;
};

// One line of an element corpus: a screenshot and its annotated elements.
struct ScreenRecord {
  ScreenshotMeta screenshot;
  std::vector<ElementRecord> elements;

  friend bool operator==(const ScreenRecord&, const ScreenRecord&) = default;
};

enum class ReKind { description, intent, functionality, displayed_text, icon_name };

std::string_view to_string(ReKind k);
ReKind parse_re_kind(std::string_view s);

struct ReferringExpression {
  ReKind kind = ReKind::description;
  std::string text;
  friend bool operator==(const ReferringExpression&, const ReferringExpression&) = default;
};

struct GroundingTriplet {
  std::string id;
  ScreenshotMeta screenshot;
  ReferringExpression re;
  BBox target_bbox;
  friend bool operator==(const GroundingTriplet&, const GroundingTriplet&) = default;
};

// Half-up rounding of num/den for den > 0, exact in integer arithmetic.
std::int64_t div_round_half_up(std::int64_t num, std::int64_t den);

// Throws OutOfBoundsError when p lies outside [0,width]x[0,height].
NormPoint normalize_point(PixelPoint p, const ScreenshotMeta& screen);
PixelPoint denormalize_point(NormPoint p, const ScreenshotMeta& screen);
PixelPoint bbox_center(const BBox& b);
// Inclusive on all four edges.
bool point_in_bbox(PixelPoint p, const BBox& b) noexcept;

}  // namespace guikit
