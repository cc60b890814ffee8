#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "guikit/action_space.hpp"
#include "guikit/denoiser.hpp"
#include "guikit/episode.hpp"
#include "guikit/json_io.hpp"
#include "guikit/text.hpp"

namespace guikit::test {

inline std::string fixture(const std::string& name) {
  return (std::filesystem::path(GUIKIT_FIXTURE_DIR) / name).string();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("guikit-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline NormPoint random_point(Rng& rng) { return {uniform(rng, 0, 1000), uniform(rng, 0, 1000)}; }

// Printable text including characters that stress the action grammar:
// quotes, escapes, parentheses, braces, separators and non-ASCII.
inline std::string random_text(Rng& rng, bool allow_empty = false) {
  static const std::vector<std::string> pieces{
      "a", "b", "Z", "0", "7", " ", "  ", "\"", "\\", "(", ")", "(1,2)", "{", "}", ",", ":",
      "é", "中文", "\t", "\n", "/", "'", "hello", "Submit", "x=1", "[", "]", "%", "😀"};
  const int n = uniform(rng, allow_empty ? 0 : 1, 12);
  std::string s;
  for (int i = 0; i < n; ++i) s += pieces[static_cast<std::size_t>(uniform(rng, 0, int(pieces.size()) - 1))];
  if (!allow_empty && normalize_text(s).empty()) s += "k";
  return s;
}

inline std::string random_key(Rng& rng) {
  static const std::vector<std::string> keys{"Ctrl", "Shift", "Alt", "Enter", "Tab", "A",
                                             "s",    "1",     "F5",  "Escape", "Delete"};
  return keys[static_cast<std::size_t>(uniform(rng, 0, int(keys.size()) - 1))];
}

inline std::string random_key_comb(Rng& rng) {
  const int n = uniform(rng, 1, 3);
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? "-" : "") + random_key(rng);
  return s;
}

template <class T>
T random_act(Rng& rng) {
  T a{};
  if constexpr (requires { a.target; }) a.target = random_point(rng);
  if constexpr (requires { a.start; }) a.start = random_point(rng);
  if constexpr (requires { a.end; }) a.end = random_point(rng);
  if constexpr (requires { a.direction; }) a.direction = static_cast<Direction>(uniform(rng, 0, 3));
  if constexpr (requires { a.distance; }) a.distance = static_cast<SwipeDistance>(uniform(rng, 0, 2));
  if constexpr (std::is_same_v<T, act::InputText>) a.text = random_text(rng);
  if constexpr (std::is_same_v<T, act::GoTo>) a.url = "https://example.com/" + random_text(rng);
  if constexpr (std::is_same_v<T, act::SearchGoogle>) a.query = random_text(rng);
  if constexpr (std::is_same_v<T, act::PressKey>) a.key = random_key(rng);
  if constexpr (std::is_same_v<T, act::Hotkey>) a.key_comb = random_key_comb(rng);
  if constexpr (std::is_same_v<T, act::SwitchTab>) a.tab = uniform(rng, 0, 99);
  if constexpr (std::is_same_v<T, act::Status>) {
    a.goal_status = static_cast<GoalStatus>(uniform(rng, 0, 1));
    a.answer = random_text(rng, true);
  }
  return a;
}

template <class Variant, std::size_t I = 0>
Variant random_variant(Rng& rng, std::size_t index) {
  if constexpr (I < std::variant_size_v<Variant>) {
    if (index == I) return Variant{random_act<std::variant_alternative_t<I, Variant>>(rng)};
    return random_variant<Variant, I + 1>(rng, index);
  } else {
    throw std::logic_error("variant index out of range");
  }
}

inline std::size_t action_count(Platform p) { return action_names(p).size(); }

inline UnifiedAction random_action(Rng& rng, Platform p, std::optional<std::size_t> index = {}) {
  const std::size_t i =
      index ? *index : static_cast<std::size_t>(uniform(rng, 0, int(action_count(p)) - 1));
  switch (p) {
    case Platform::mobile:
      return UnifiedAction(random_variant<MobileAction>(rng, i));
    case Platform::web:
      return UnifiedAction(random_variant<WebAction>(rng, i));
    case Platform::desktop:
      return UnifiedAction(random_variant<DesktopAction>(rng, i));
  }
  return {};
}

inline ScreenshotMeta screen(const std::string& id, int w, int h, Platform p = Platform::mobile) {
  ScreenshotMeta s;
  s.id = id;
  s.width_px = w;
  s.height_px = h;
  s.platform = p;
  return s;
}

inline ElementRecord element(BBox b, std::string id = {}) {
  ElementRecord e;
  e.bbox = b;
  e.source_id = std::move(id);
  return e;
}

// Pixel provider whose regions have a population std looked up per box.
// Regions alternate two values around 100 so, for even areas, the std equals
// the stored one.
class FakePixels : public PixelProvider {
 public:
  std::map<std::tuple<std::string, int, int, int, int>, double> stds;
  double default_std = 40.0;
  bool fail = false;

  std::vector<double> region(const ScreenshotMeta& s, const BBox& b) const override {
    if (fail) throw IoError("fake provider failure");
    auto it = stds.find({s.id, b.left, b.top, b.right, b.bottom});
    const double sd = it == stds.end() ? default_std : it->second;
    std::vector<double> v(static_cast<std::size_t>(b.area()));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0) ? 100.0 - sd : 100.0 + sd;
    if (v.size() % 2 == 1) v.back() = 100.0;  // odd sizes keep the mean at 100
    return v;
  }
};

// Text recognizer returning a stored string per box, or `fallback`
// otherwise.
class FakeOcr : public TextRecognizer {
 public:
  std::map<std::tuple<std::string, int, int, int, int>, std::string> texts;
  std::string fallback;

  std::string recognize(const ScreenshotMeta& s, const BBox& b) const override {
    auto it = texts.find({s.id, b.left, b.top, b.right, b.bottom});
    return it == texts.end() ? fallback : it->second;
  }
};

inline std::tuple<std::string, int, int, int, int> key(const ScreenshotMeta& s, const BBox& b) {
  return {s.id, b.left, b.top, b.right, b.bottom};
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace guikit::test
