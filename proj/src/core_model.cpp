#include "guikit/core_model.hpp"

#include <algorithm>

#include "guikit/error.hpp"

namespace guikit {

std::string_view to_string(Platform p) {
  switch (p) {
    case Platform::mobile:
      return "mobile";
    case Platform::web:
      return "web";
    case Platform::desktop:
      return "desktop";
  }
  return "mobile";
}

Platform parse_platform(std::string_view s) {
  if (s == "mobile") return Platform::mobile;
  if (s == "web") return Platform::web;
  if (s == "desktop") return Platform::desktop;
  throw SchemaError("unknown platform '" + std::string(s) + "'");
}

std::string_view to_string(ReKind k) {
  switch (k) {
    case ReKind::description:
      return "description";
    case ReKind::intent:
      return "intent";
    case ReKind::functionality:
      return "functionality";
    case ReKind::displayed_text:
      return "displayed_text";
    case ReKind::icon_name:
      return "icon_name";
  }
  return "description";
}

ReKind parse_re_kind(std::string_view s) {
  if (s == "description") return ReKind::description;
  if (s == "intent") return ReKind::intent;
  if (s == "functionality") return ReKind::functionality;
  if (s == "displayed_text") return ReKind::displayed_text;
  if (s == "icon_name") return ReKind::icon_name;
  throw SchemaError("unknown referring-expression kind '" + std::string(s) + "'");
}

std::int64_t div_round_half_up(std::int64_t num, std::int64_t den) {
  // floor((2*num + den) / (2*den)), valid for negative numerators too.
  std::int64_t n = 2 * num + den;
  std::int64_t d = 2 * den;
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

NormPoint normalize_point(PixelPoint p, const ScreenshotMeta& screen) {
  if (p.x < 0 || p.x > screen.width_px) throw OutOfBoundsError('x', p.x, screen.width_px);
  if (p.y < 0 || p.y > screen.height_px) throw OutOfBoundsError('y', p.y, screen.height_px);
  auto scale = [](int v, int extent) {
    auto r = div_round_half_up(std::int64_t{v} * NormPoint::kScale, extent);
    return static_cast<int>(std::clamp<std::int64_t>(r, 0, NormPoint::kScale));
  };
  return {scale(p.x, screen.width_px), scale(p.y, screen.height_px)};
}

PixelPoint denormalize_point(NormPoint p, const ScreenshotMeta& screen) {
  auto scale = [](int v, int extent) {
    return static_cast<int>(div_round_half_up(std::int64_t{v} * extent, NormPoint::kScale));
  };
  return {scale(p.x, screen.width_px), scale(p.y, screen.height_px)};
}

PixelPoint bbox_center(const BBox& b) {
  return {static_cast<int>(div_round_half_up(std::int64_t{b.left} + b.right, 2)),
          static_cast<int>(div_round_half_up(std::int64_t{b.top} + b.bottom, 2))};
}

bool point_in_bbox(PixelPoint p, const BBox& b) noexcept {
  return b.left <= p.x && p.x <= b.right && b.top <= p.y && p.y <= b.bottom;
}

}  // namespace guikit
