#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace guikit::test {

// AITW-format export: `episodes` lines of `steps` raw steps each. Roughly 3%
// of steps repeat the previous raw step verbatim (same screen, same action),
// which the episode denoiser removes.
inline void write_aitw_export(const std::string& path, int episodes, int steps, std::uint64_t seed) {
  Rng rng(seed);
  std::ofstream out(path, std::ios::binary);
  for (int e = 0; e < episodes; ++e) {
    Json steps_json = Json::array();
    Json prev;
    for (int i = 0; i < steps; ++i) {
      if (i > 0 && i + 1 < steps && uniform(rng, 0, 99) < 3) {
        steps_json.push_back(prev);
        continue;
      }
      Json s{{"image_id", "syn" + std::to_string(e) + "_" + std::to_string(i)},
             {"image_width", 1080},
             {"image_height", 2400}};
      const int kind = i + 1 == steps ? 99 : uniform(rng, 0, 9);
      auto coord = [&] { return uniform(rng, 0, 10000) / 10000.0; };
      if (kind <= 5) {
        s["action_type"] = "DUAL_POINT";
        const double y = coord();
        const double x = coord();
        if (kind <= 3) {
          s["touch_yx"] = {y, x};
          s["lift_yx"] = {y, x};
        } else {
          s["touch_yx"] = {y, x};
          s["lift_yx"] = {coord(), coord()};
        }
      } else if (kind == 6) {
        s["action_type"] = "TYPE";
        s["type_text"] = "query " + std::to_string(uniform(rng, 0, 999));
      } else if (kind == 7) {
        s["action_type"] = "PRESS_BACK";
      } else if (kind == 8) {
        s["action_type"] = "PRESS_HOME";
      } else if (kind == 9) {
        s["action_type"] = "PRESS_ENTER";
      } else {
        s["action_type"] = uniform(rng, 0, 9) == 0 ? "STATUS_TASK_IMPOSSIBLE" : "STATUS_TASK_COMPLETE";
      }
      prev = s;
      steps_json.push_back(std::move(s));
    }
    Json line{{"source", "aitw"},
              {"episode_id", "syn-" + std::to_string(e)},
              {"goal", "synthetic task " + std::to_string(e)},
              {"steps", std::move(steps_json)}};
    out << line.dump() << '\n';
  }
}

// Box of roughly 80x60 px around the denormalized point, clipped to the
// screen, for localization actions.
inline std::optional<BBox> box_around(const UnifiedAction& a, const ScreenshotMeta& s, Rng& rng) {
  if (!is_localization_action(a.type_name())) return std::nullopt;
  NormPoint t = a.visit([](const auto& x) -> NormPoint {
    if constexpr (requires { x.target; }) {
      return x.target;
    } else {
      return {};
    }
  });
  PixelPoint p = denormalize_point(t, s);
  BBox b{std::max(0, p.x - uniform(rng, 1, 40)), std::max(0, p.y - uniform(rng, 1, 30)),
         std::min(s.width_px, p.x + uniform(rng, 1, 40)),
         std::min(s.height_px, p.y + uniform(rng, 1, 30))};
  if (!b.well_formed()) b = {0, 0, s.width_px, s.height_px};
  return b;
}

// Valid episodes over all three platforms with random actions.
inline std::vector<Episode> synthetic_episodes(int episodes, int steps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Episode> out;
  for (int e = 0; e < episodes; ++e) {
    Episode ep;
    ep.id = "ep" + std::to_string(e);
    ep.platform = static_cast<Platform>(e % 3);
    ep.goal = "goal " + std::to_string(e);
    for (int i = 0; i < steps; ++i) {
      Step s;
      s.screenshot = screen(ep.id + "/" + std::to_string(i), ep.platform == Platform::mobile ? 1080 : 1920,
                            ep.platform == Platform::mobile ? 2400 : 1080, ep.platform);
      s.gold_action = random_action(rng, ep.platform);
      s.gold_bbox = box_around(s.gold_action, s.screenshot, rng);
      s.history_index = i;
      ep.steps.push_back(std::move(s));
    }
    out.push_back(std::move(ep));
  }
  return out;
}

// Element corpus mixing clean elements with every kind of planted noise:
// out-of-screen and zero-area boxes, oversized and tiny boxes, duplicates and
// text that OCR will not match.
inline std::vector<ScreenRecord> random_screen_corpus(Rng& rng, int screens, const std::string& prefix) {
  std::vector<ScreenRecord> out;
  for (int k = 0; k < screens; ++k) {
    ScreenRecord r;
    r.screenshot = screen(prefix + std::to_string(k), uniform(rng, 120, 260), uniform(rng, 160, 320));
    r.screenshot.image_ref = r.screenshot.id + ".ppm";
    const int n = uniform(rng, 0, 25);
    for (int i = 0; i < n; ++i) {
      const int W = r.screenshot.width_px;
      const int H = r.screenshot.height_px;
      BBox b;
      switch (uniform(rng, 0, 9)) {
        case 0:  // may leave the screen or be degenerate
          b = {uniform(rng, -20, W), uniform(rng, -20, H), uniform(rng, -20, W + 40),
               uniform(rng, -20, H + 40)};
          break;
        case 1:  // large
          b = {0, 0, uniform(rng, W / 2, W), uniform(rng, H / 2, H)};
          break;
        case 2:  // thin
          b.left = uniform(rng, 0, W - 20);
          b.top = uniform(rng, 0, H - 40);
          b.right = b.left + uniform(rng, 1, 20);
          b.bottom = b.top + uniform(rng, 18, 40);
          break;
        case 3:  // duplicate of an earlier element
          if (!r.elements.empty()) {
            b = r.elements[static_cast<std::size_t>(uniform(rng, 0, int(r.elements.size()) - 1))].bbox;
            break;
          }
          [[fallthrough]];
        default: {
          const int w = uniform(rng, 18, std::max(18, W / 3));
          const int h = uniform(rng, 18, std::max(18, H / 3));
          b.left = uniform(rng, 0, W - w);
          b.top = uniform(rng, 0, H - h);
          b.right = b.left + w;
          b.bottom = b.top + h;
        }
      }
      ElementRecord e = element(b, r.screenshot.id + "-e" + std::to_string(i));
      if (uniform(rng, 0, 3) == 0) e.text = uniform(rng, 0, 1) ? "item" : "Checkout now";
      if (uniform(rng, 0, 4) == 0) e.elem_class = "button";
      r.elements.push_back(std::move(e));
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Binary PPM with flat background and a few textured rectangles, so some
// element regions are blank and some are not.
inline void write_screen_image(const std::string& path, const ScreenshotMeta& s, Rng& rng) {
  const int W = s.width_px;
  const int H = s.height_px;
  std::vector<unsigned char> px(static_cast<std::size_t>(W) * H * 3, 230);
  const int patches = uniform(rng, 1, 4);
  for (int p = 0; p < patches; ++p) {
    const int l = uniform(rng, 0, W - 10);
    const int t = uniform(rng, 0, H - 10);
    const int r = std::min(W, l + uniform(rng, 10, W / 2 + 10));
    const int b = std::min(H, t + uniform(rng, 10, H / 2 + 10));
    for (int y = t; y < b; ++y) {
      for (int x = l; x < r; ++x) {
        const auto v = static_cast<unsigned char>(((x * 37 + y * 91) % 5) * 40);
        auto* q = &px[(static_cast<std::size_t>(y) * W + x) * 3];
        q[0] = v;
        q[1] = static_cast<unsigned char>(255 - v);
        q[2] = v;
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << W << " " << H << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

inline void write_jsonl(const std::string& path, const std::vector<Json>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& j : lines) out << j.dump() << '\n';
}

}  // namespace guikit::test
