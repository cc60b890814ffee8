#include "guikit/source_adapters.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <regex>
#include <set>

#include "guikit/text.hpp"

namespace guikit {

namespace {

constexpr double kEps = 1e-9;

struct SourceName {
  SourceKind kind;
  std::string_view name;
};

constexpr std::array kSourceNames{
    SourceName{SourceKind::aitw, "aitw"},
    SourceName{SourceKind::aitz, "aitz"},
    SourceName{SourceKind::amex, "amex"},
    SourceName{SourceKind::androidcontrol, "androidcontrol"},
    SourceName{SourceKind::guiodyssey, "guiodyssey"},
    SourceName{SourceKind::guiact_mobile, "guiact_mobile"},
    SourceName{SourceKind::guiact_web, "guiact_web"},
    SourceName{SourceKind::mind2web, "mind2web"},
    SourceName{SourceKind::weblinx, "weblinx"},
    SourceName{SourceKind::omniact_desktop, "omniact_desktop"},
};

struct RuleName {
  RuleKind kind;
  std::string_view name;
};

constexpr std::array kRuleNames{
    RuleName{RuleKind::dual_point, "dual_point"}, RuleName{RuleKind::point, "point"},
    RuleName{RuleKind::two_point, "two_point"},   RuleName{RuleKind::text, "text"},
    RuleName{RuleKind::typed_click, "typed_click"}, RuleName{RuleKind::direction, "direction"},
    RuleName{RuleKind::offset, "offset"},         RuleName{RuleKind::no_arg, "no_arg"},
    RuleName{RuleKind::status, "status"},         RuleName{RuleKind::switch_tab, "switch_tab"},
    RuleName{RuleKind::script, "script"},
};

Direction opposite(Direction d) {
  switch (d) {
    case Direction::up:
      return Direction::down;
    case Direction::down:
      return Direction::up;
    case Direction::left:
      return Direction::right;
    case Direction::right:
      return Direction::left;
  }
  return d;
}

// Content-motion direction of a displacement, y growing downward.
Direction dominant_direction(double dx, double dy) {
  if (std::abs(dy) >= std::abs(dx)) return dy < 0 ? Direction::up : Direction::down;
  return dx < 0 ? Direction::left : Direction::right;
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::string raw_action_text(const SourceManifest& m, const Json& raw) {
  auto it = raw.find(m.action_field);
  if (it == raw.end()) return raw.dump();
  return it->is_string() ? it->get<std::string>() : it->dump();
}

struct ResolvedPoint {
  NormPoint norm;
  PixelPoint pixel;
  UnitPoint unit;
};

struct Emitted {
  UnifiedAction action;
  std::optional<BBox> bbox;
};

template <class T>
UnifiedAction make_for(Platform p, T a) {
  return UnifiedAction::make(p, std::move(a));
}

// State carried across the steps of one episode.
struct EpisodeState {
  std::optional<NormPoint> focus;
};

class StepConverter {
 public:
  StepConverter(const SourceManifest& m, const AdapterConfig& cfg, const Json& raw,
                std::size_t index)
      : m_(m), cfg_(cfg), raw_(raw), index_(index), raw_action_(raw_action_text(m, raw)) {}

  [[noreturn]] void fail(const std::string& detail) const {
    throw ConversionError(m_.source, index_, raw_action_, detail);
  }

  ScreenshotMeta screen() const {
    ScreenshotMeta s;
    s.platform = m_.platform;
    auto id = raw_.find(m_.screenshot_field);
    if (id != raw_.end()) s.id = id->is_string() ? id->get<std::string>() : id->dump();
    auto w = raw_.find(m_.width_field);
    auto h = raw_.find(m_.height_field);
    if (w == raw_.end() || h == raw_.end() || !w->is_number() || !h->is_number()) {
      fail("missing screen dimensions ('" + m_.width_field + "', '" + m_.height_field + "')");
    }
    s.width_px = round_half_up(w->get<double>());
    s.height_px = round_half_up(h->get<double>());
    if (!s.valid()) fail("screen dimensions must be positive");
    if (m_.image_field) {
      if (auto img = raw_.find(*m_.image_field); img != raw_.end() && img->is_string()) {
        s.image_ref = img->get<std::string>();
      }
    }
    return s;
  }

  std::vector<Emitted> convert(const ActionRule& rule, const ScreenshotMeta& screen,
                               EpisodeState& state) {
    screen_ = &screen;
    switch (rule.kind) {
      case RuleKind::dual_point:
        return dual_point(rule);
      case RuleKind::point:
        return point_rule(rule, state);
      case RuleKind::two_point:
        return two_point(rule);
      case RuleKind::text:
        return {Emitted{text_action(rule.emit, text_arg(rule)), std::nullopt}};
      case RuleKind::typed_click:
        return typed_click(rule, state);
      case RuleKind::direction:
        return {direction_rule(rule)};
      case RuleKind::offset:
        return {offset_rule(rule)};
      case RuleKind::no_arg:
        return {Emitted{no_arg_action(rule.emit), std::nullopt}};
      case RuleKind::status:
        return {status_rule(rule)};
      case RuleKind::switch_tab:
        return {switch_tab_rule(rule)};
      case RuleKind::script:
        return {script_rule(rule)};
    }
    fail("unsupported rule");
  }

 private:
  const Json& field(const std::string& name) const {
    auto it = raw_.find(name);
    if (it == raw_.end() || it->is_null()) fail("missing field '" + name + "'");
    return *it;
  }

  static std::string param(const ActionRule& rule, const char* key) {
    return rule.params.at(key).get<std::string>();
  }

  double number(const Json& v, const std::string& what) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        std::size_t used = 0;
        const std::string s = v.get<std::string>();
        double d = std::stod(s, &used);
        if (used == s.size()) return d;
      } catch (const std::exception&) {
      }
    }
    fail(what + " must be numeric");
  }

  ResolvedPoint resolve(double x, double y) const {
    const ScreenshotMeta& s = *screen_;
    ResolvedPoint r;
    switch (m_.coordinates) {
      case CoordinateSpace::unit:
        if (x < 0 || x > 1 || y < 0 || y > 1) fail("normalized point outside [0,1]");
        r.unit = {x, y};
        r.norm = {round_half_up(x * NormPoint::kScale), round_half_up(y * NormPoint::kScale)};
        r.pixel = {round_half_up(x * s.width_px), round_half_up(y * s.height_px)};
        break;
      case CoordinateSpace::permille:
        if (x < 0 || x > 1000 || y < 0 || y > 1000) fail("point outside [0,1000]");
        r.unit = {x / 1000.0, y / 1000.0};
        r.norm = {round_half_up(x), round_half_up(y)};
        r.pixel = {round_half_up(x * s.width_px / 1000.0), round_half_up(y * s.height_px / 1000.0)};
        break;
      case CoordinateSpace::pixel:
        r.pixel = {round_half_up(x), round_half_up(y)};
        try {
          r.norm = normalize_point(r.pixel, s);
        } catch (const OutOfBoundsError& e) {
          fail(e.what());
        }
        r.unit = {x / s.width_px, y / s.height_px};
        break;
    }
    return r;
  }

  ResolvedPoint point_value(const Json& v, const std::string& name) const {
    double a = 0;
    double b = 0;
    if (v.is_array() && v.size() == 2) {
      a = number(v[0], name);
      b = number(v[1], name);
    } else if (v.is_object() && v.contains("x") && v.contains("y")) {
      return resolve(number(v["x"], name + ".x"), number(v["y"], name + ".y"));
    } else {
      fail("field '" + name + "' is not a coordinate pair");
    }
    return m_.axis_order == AxisOrder::xy ? resolve(a, b) : resolve(b, a);
  }

  ResolvedPoint point_field(const std::string& name) const { return point_value(field(name), name); }

  BBox pixel_bbox(const Json& v, const std::string& name) const {
    if (!v.is_array() || v.size() != 4) fail("field '" + name + "' is not a 4-number box");
    std::array<double, 4> n{};
    for (std::size_t i = 0; i < 4; ++i) n[i] = number(v[i], name);
    if (m_.bbox_format == BBoxFormat::xywh) {
      n[2] += n[0];
      n[3] += n[1];
    }
    double sx = 1.0;
    double sy = 1.0;
    if (m_.coordinates == CoordinateSpace::unit) {
      sx = screen_->width_px;
      sy = screen_->height_px;
    } else if (m_.coordinates == CoordinateSpace::permille) {
      sx = screen_->width_px / 1000.0;
      sy = screen_->height_px / 1000.0;
    }
    return {round_half_up(n[0] * sx), round_half_up(n[1] * sy), round_half_up(n[2] * sx),
            round_half_up(n[3] * sy)};
  }

  // Target of a point-like rule plus the box it came from, if any.
  std::pair<ResolvedPoint, std::optional<BBox>> target(const ActionRule& rule) const {
    const Json& p = rule.params;
    if (p.contains("bbox")) {
      const std::string name = param(rule, "bbox");
      BBox b = pixel_bbox(field(name), name);
      if (!b.well_formed()) fail("field '" + name + "' has zero area");
      PixelPoint c = bbox_center(b);
      ResolvedPoint r;
      r.pixel = c;
      try {
        r.norm = normalize_point(c, *screen_);
      } catch (const OutOfBoundsError& e) {
        fail(e.what());
      }
      r.unit = {static_cast<double>(c.x) / screen_->width_px,
                static_cast<double>(c.y) / screen_->height_px};
      return {r, b};
    }
    if (p.contains("point")) return {point_field(param(rule, "point")), std::nullopt};
    const std::string xs = param(rule, "x");
    const std::string ys = param(rule, "y");
    return {resolve(number(field(xs), xs), number(field(ys), ys)), std::nullopt};
  }

  std::optional<BBox> candidate_bbox(PixelPoint p) const {
    if (!m_.candidates_field) return std::nullopt;
    auto it = raw_.find(*m_.candidates_field);
    if (it == raw_.end() || !it->is_array() || it->empty()) return std::nullopt;
    std::vector<BBox> boxes;
    boxes.reserve(it->size());
    for (const auto& b : *it) boxes.push_back(pixel_bbox(b, *m_.candidates_field));
    try {
      return derive_enclosing_bbox(p, boxes);
    } catch (const NotFoundError&) {
      return std::nullopt;
    }
  }

  UnifiedAction point_action(std::string_view emit, NormPoint p) const {
    if (emit == "click") return make_for(m_.platform, act::Click{p});
    if (emit == "long_press") return make_for(m_.platform, act::LongPress{p});
    if (emit == "right_click") return make_for(m_.platform, act::RightClick{p});
    if (emit == "double_click") return make_for(m_.platform, act::DoubleClick{p});
    if (emit == "move_to") return make_for(m_.platform, act::MoveTo{p, p});
    fail("cannot emit '" + std::string(emit) + "' from a point");
  }

  std::optional<BBox> localization_bbox(std::string_view emit, const ResolvedPoint& r,
                                        std::optional<BBox> explicit_box) const {
    if (!is_localization_action(emit)) return std::nullopt;
    if (explicit_box) return explicit_box;
    return candidate_bbox(r.pixel);
  }

  std::vector<Emitted> dual_point(const ActionRule& rule) const {
    ResolvedPoint start = point_field(param(rule, "start"));
    ResolvedPoint end = point_field(param(rule, "end"));
    Gesture g = classify_dual_point(start.unit, end.unit, cfg_);
    if (g.kind == Gesture::Kind::tap) {
      return {Emitted{make_for(m_.platform, act::Click{start.norm}),
                      localization_bbox("click", start, std::nullopt)}};
    }
    return {Emitted{make_for(m_.platform, act::Swipe{start.norm, g.direction, g.distance}),
                    std::nullopt}};
  }

  std::vector<Emitted> point_rule(const ActionRule& rule, EpisodeState& state) const {
    auto [r, box] = target(rule);
    state.focus = r.norm;
    return {Emitted{point_action(rule.emit, r.norm), localization_bbox(rule.emit, r, box)}};
  }

  std::vector<Emitted> two_point(const ActionRule& rule) const {
    ResolvedPoint start = point_field(param(rule, "start"));
    ResolvedPoint end = point_field(param(rule, "end"));
    if (rule.emit == "swipe") {
      const double dx = end.unit.x - start.unit.x;
      const double dy = end.unit.y - start.unit.y;
      return {Emitted{make_for(m_.platform, act::Swipe{start.norm, dominant_direction(dx, dy),
                                                       distance_bucket(std::hypot(dx, dy), cfg_)}),
                      std::nullopt}};
    }
    if (rule.emit == "drag") return {Emitted{make_for(m_.platform, act::Drag{start.norm, end.norm}), std::nullopt}};
    return {Emitted{make_for(m_.platform, act::MoveTo{start.norm, end.norm}), std::nullopt}};
  }

  std::string text_arg(const ActionRule& rule) const {
    if (rule.params.contains("value")) return param(rule, "value");
    const std::string name = param(rule, "arg");
    const Json& v = field(name);
    if (!v.is_string()) fail("field '" + name + "' must be a string");
    return v.get<std::string>();
  }

  UnifiedAction text_action(std::string_view emit, std::string text) const {
    if (emit == "input_text") return make_for(m_.platform, act::InputText{std::move(text)});
    if (emit == "go_to") return make_for(m_.platform, act::GoTo{std::move(text)});
    if (emit == "search_google") return make_for(m_.platform, act::SearchGoogle{std::move(text)});
    if (emit == "press_key") return make_for(m_.platform, act::PressKey{std::move(text)});
    if (emit == "hotkey") return make_for(m_.platform, act::Hotkey{std::move(text)});
    fail("cannot emit '" + std::string(emit) + "' from text");
  }

  std::vector<Emitted> typed_click(const ActionRule& rule, EpisodeState& state) const {
    auto [r, box] = target(rule);
    const std::string name = param(rule, "text");
    const Json& v = field(name);
    if (!v.is_string()) fail("field '" + name + "' must be a string");
    std::vector<Emitted> out;
    if (state.focus != r.norm) {
      out.push_back({make_for(m_.platform, act::Click{r.norm}), localization_bbox("click", r, box)});
    }
    state.focus = r.norm;
    out.push_back({make_for(m_.platform, act::InputText{v.get<std::string>()}), std::nullopt});
    return out;
  }

  Emitted scroll_like(Direction content_direction, SwipeDistance distance) const {
    if (m_.platform == Platform::mobile) {
      Direction finger = cfg_.invert_scroll ? opposite(content_direction) : content_direction;
      return {make_for(m_.platform, act::Swipe{NormPoint{500, 500}, finger, distance}), std::nullopt};
    }
    return {make_for(m_.platform, act::Scroll{content_direction, distance}), std::nullopt};
  }

  Emitted direction_rule(const ActionRule& rule) const {
    const std::string name = param(rule, "direction");
    const Json& v = field(name);
    const std::string d = v.is_string() ? normalize_text(v.get<std::string>()) : std::string();
    Direction dir;
    if (d == "up") {
      dir = Direction::up;
    } else if (d == "down") {
      dir = Direction::down;
    } else if (d == "left") {
      dir = Direction::left;
    } else if (d == "right") {
      dir = Direction::right;
    } else {
      fail("unknown scroll direction '" + d + "'");
    }
    SwipeDistance dist = SwipeDistance::medium;
    if (rule.params.contains("distance")) {
      auto it = raw_.find(param(rule, "distance"));
      if (it != raw_.end() && it->is_string()) {
        const std::string s = normalize_text(it->get<std::string>());
        if (s == "short") {
          dist = SwipeDistance::short_;
        } else if (s == "long") {
          dist = SwipeDistance::long_;
        } else if (s != "medium") {
          fail("unknown scroll distance '" + s + "'");
        }
      }
    }
    return scroll_like(dir, dist);
  }

  Emitted offset_rule(const ActionRule& rule) const {
    const std::string xs = param(rule, "dx");
    const std::string ys = param(rule, "dy");
    double dx = number(field(xs), xs);
    double dy = number(field(ys), ys);
    if (dx == 0 && dy == 0) fail("zero scroll offset");
    switch (m_.coordinates) {
      case CoordinateSpace::pixel:
        dx /= screen_->width_px;
        dy /= screen_->height_px;
        break;
      case CoordinateSpace::permille:
        dx /= 1000.0;
        dy /= 1000.0;
        break;
      case CoordinateSpace::unit:
        break;
    }
    return scroll_like(dominant_direction(dx, dy), distance_bucket(std::hypot(dx, dy), cfg_));
  }

  UnifiedAction no_arg_action(std::string_view emit) const {
    if (emit == "enter") return make_for(m_.platform, act::Enter{});
    if (emit == "navigate_back") return make_for(m_.platform, act::NavigateBack{});
    if (emit == "navigate_home") return make_for(m_.platform, act::NavigateHome{});
    if (emit == "navigate_recent") return make_for(m_.platform, act::NavigateRecent{});
    if (emit == "navigate_forward") return make_for(m_.platform, act::NavigateForward{});
    if (emit == "wait") return make_for(m_.platform, act::Wait{});
    if (emit == "new_tab") return make_for(m_.platform, act::NewTab{});
    if (emit == "close_tab") return make_for(m_.platform, act::CloseTab{});
    fail("cannot emit '" + std::string(emit) + "' without arguments");
  }

  Emitted status_rule(const ActionRule& rule) const {
    std::string status;
    if (rule.params.contains("goal_status")) {
      status = param(rule, "goal_status");
    } else {
      const Json& v = field(param(rule, "goal_status_field"));
      status = v.is_string() ? normalize_text(v.get<std::string>()) : "";
    }
    act::Status s;
    if (status == "successful") {
      s.goal_status = GoalStatus::successful;
    } else if (status == "infeasible") {
      s.goal_status = GoalStatus::infeasible;
    } else {
      fail("unknown goal status '" + status + "'");
    }
    if (rule.params.contains("answer")) {
      auto it = raw_.find(param(rule, "answer"));
      if (it != raw_.end() && it->is_string()) s.answer = it->get<std::string>();
    }
    return {make_for(m_.platform, std::move(s)), std::nullopt};
  }

  Emitted switch_tab_rule(const ActionRule& rule) const {
    const std::string name = param(rule, "tab");
    double t = number(field(name), name);
    if (t < 0 || t != std::floor(t)) fail("tab index must be a non-negative integer");
    return {make_for(m_.platform, act::SwitchTab{static_cast<int>(t)}), std::nullopt};
  }

  struct ScriptArg {
    std::string key;  // empty for positional
    std::string value;
    bool quoted = false;
  };

  std::vector<ScriptArg> split_args(std::string_view s) const {
    std::vector<ScriptArg> out;
    std::string current;
    char quote = 0;
    bool quoted = false;
    auto flush = [&] {
      std::string token = current;
      current.clear();
      auto trim = [](std::string& t) {
        t.erase(0, t.find_first_not_of(" \t"));
        t.erase(t.find_last_not_of(" \t") + 1);
      };
      trim(token);
      if (token.empty() && !quoted) return;
      ScriptArg a;
      a.quoted = quoted;
      auto eq = token.find('=');
      if (!quoted && eq != std::string::npos) {
        a.key = token.substr(0, eq);
        a.value = token.substr(eq + 1);
        trim(a.key);
        trim(a.value);
      } else {
        a.value = token;
      }
      out.push_back(std::move(a));
      quoted = false;
    };
    for (char c : s) {
      if (quote) {
        if (c == quote) {
          quote = 0;
        } else {
          current += c;
        }
      } else if (c == '\'' || c == '"') {
        quote = c;
        quoted = true;
      } else if (c == ',') {
        flush();
      } else if (c != '[' && c != ']') {
        current += c;
      }
    }
    if (quote) fail("unterminated string in script");
    flush();
    return out;
  }

  Emitted script_rule(const ActionRule& rule) const {
    const std::string name = param(rule, "script");
    const Json& v = field(name);
    if (!v.is_string()) fail("field '" + name + "' must be a string");
    static const std::regex call(R"(pyautogui\.(\w+)\s*\((.*)\))");
    std::smatch match;
    std::string script = v.get<std::string>();
    std::string line;
    bool found = false;
    for (const std::string& l : split(script, '\n')) {
      if (std::regex_search(l, match, call)) {
        line = l;
        found = true;
        break;
      }
    }
    if (!found) fail("no pyautogui call in script");
    std::regex_search(line, match, call);
    const std::string fn = match[1].str();
    const Json& functions = rule.params.at("functions");
    auto mapped = functions.find(fn);
    if (mapped == functions.end()) fail("unmapped script function '" + fn + "'");
    const std::string emit = mapped->get<std::string>();
    const auto args = split_args(match[2].str());

    auto positional_or = [&](std::size_t pos, const char* key) -> const ScriptArg* {
      for (const auto& a : args) {
        if (a.key == key) return &a;
      }
      std::size_t seen = 0;
      for (const auto& a : args) {
        if (!a.key.empty()) continue;
        if (seen++ == pos) return &a;
      }
      return nullptr;
    };

    if (is_localization_action(emit) || emit == "move_to") {
      const ScriptArg* x = positional_or(0, "x");
      const ScriptArg* y = positional_or(1, "y");
      if (!x || !y) fail(fn + " needs x and y");
      ResolvedPoint r = resolve(number(Json(x->value), "x"), number(Json(y->value), "y"));
      return {point_action(emit, r.norm), localization_bbox(emit, r, std::nullopt)};
    }
    if (emit == "scroll") {
      const ScriptArg* clicks = positional_or(0, "clicks");
      if (!clicks) fail("scroll needs an amount");
      double amount = number(Json(clicks->value), "clicks");
      if (amount == 0) fail("zero scroll amount");
      return scroll_like(amount > 0 ? Direction::up : Direction::down, SwipeDistance::medium);
    }
    std::vector<std::string> strings;
    for (const auto& a : args) {
      if (a.key.empty() || a.key == "message" || a.key == "keys") strings.push_back(a.value);
    }
    if (strings.empty()) fail(fn + " needs a text argument");
    if (emit == "hotkey") {
      std::string comb;
      for (auto& k : strings) {
        if (!comb.empty()) comb += '-';
        std::string key = k;
        if (!key.empty()) key[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
        comb += key;
      }
      return {text_action(emit, comb), std::nullopt};
    }
    return {text_action(emit, strings.front()), std::nullopt};
  }

  const SourceManifest& m_;
  const AdapterConfig& cfg_;
  const Json& raw_;
  std::size_t index_;
  std::string raw_action_;
  const ScreenshotMeta* screen_ = nullptr;
};

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ConfigError(std::string("manifest key '") + key + "' must be a string");
  return it->get<std::string>();
}

const std::set<std::string_view>& allowed_emits(RuleKind k) {
  static const std::set<std::string_view> point{"click", "long_press", "right_click", "double_click",
                                                "move_to"};
  static const std::set<std::string_view> two_point{"swipe", "drag", "move_to"};
  static const std::set<std::string_view> text{"input_text", "go_to", "search_google", "press_key",
                                               "hotkey"};
  static const std::set<std::string_view> no_arg{"enter",           "navigate_back", "navigate_home",
                                                 "navigate_recent", "navigate_forward", "wait",
                                                 "new_tab",         "close_tab"};
  static const std::set<std::string_view> none;
  switch (k) {
    case RuleKind::point:
      return point;
    case RuleKind::two_point:
      return two_point;
    case RuleKind::text:
      return text;
    case RuleKind::no_arg:
      return no_arg;
    default:
      return none;
  }
}

void require_params(const std::string& name, const ActionRule& r,
                    std::initializer_list<std::initializer_list<const char*>> alternatives) {
  for (auto alt : alternatives) {
    bool all = true;
    for (const char* k : alt) {
      auto it = r.params.find(k);
      if (it == r.params.end() || !(it->is_string() || it->is_object())) all = false;
    }
    if (all) return;
  }
  throw ConfigError("manifest rule for '" + name + "' (" + std::string(to_string(r.kind)) +
                    ") is missing required parameters");
}

bool platform_has(Platform p, std::string_view name) {
  const auto& names = action_names(p);
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

std::string_view to_string(SourceKind s) {
  for (const auto& n : kSourceNames) {
    if (n.kind == s) return n.name;
  }
  return "?";
}

SourceKind parse_source(std::string_view s) {
  for (const auto& n : kSourceNames) {
    if (n.name == s) return n.kind;
  }
  throw SchemaError("unknown source '" + std::string(s) + "'");
}

std::string_view to_string(RuleKind k) {
  for (const auto& n : kRuleNames) {
    if (n.kind == k) return n.name;
  }
  return "?";
}

SourceEpisode source_episode_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("source episode must be an object");
  SourceEpisode e;
  auto src = j.find("source");
  if (src == j.end() || !src->is_string()) throw SchemaError("missing field 'source'");
  e.source = parse_source(src->get<std::string>());
  auto id = j.find("episode_id");
  if (id == j.end() || !id->is_string()) throw SchemaError("missing field 'episode_id'");
  e.episode_id = id->get<std::string>();
  if (auto g = j.find("goal"); g != j.end() && g->is_string()) e.goal = g->get<std::string>();
  auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array()) throw SchemaError("missing array field 'steps'");
  for (const auto& s : *steps) {
    if (!s.is_object()) throw SchemaError("source steps must be objects");
    e.raw_steps.push_back(s);
  }
  return e;
}

void AdapterConfig::validate() const {
  const double t = tap_vs_swipe_threshold;
  const double b0 = swipe_distance_buckets[0];
  const double b1 = swipe_distance_buckets[1];
  if (!(0.0 < t && t < b0 && b0 < b1 && b1 <= std::sqrt(2.0))) {
    throw ConfigError("adapter thresholds must satisfy 0 < tap < short < medium <= sqrt(2)");
  }
  if (history_window < 1) throw ConfigError("history_window must be >= 1");
}

ConversionError::ConversionError(SourceKind source, std::size_t step_index, std::string raw_action,
                                 const std::string& detail)
    : Error(std::string(to_string(source)) + " step " + std::to_string(step_index) + " action '" +
            raw_action + "': " + detail),
      source_(source),
      step_index_(step_index),
      raw_action_(std::move(raw_action)) {}

SwipeDistance distance_bucket(double length, const AdapterConfig& cfg) {
  if (length <= cfg.swipe_distance_buckets[0] + kEps) return SwipeDistance::short_;
  if (length <= cfg.swipe_distance_buckets[1] + kEps) return SwipeDistance::medium;
  return SwipeDistance::long_;
}

Gesture classify_dual_point(UnitPoint start, UnitPoint end, const AdapterConfig& cfg) {
  const double dx = end.x - start.x;
  const double dy = end.y - start.y;
  const double length = std::hypot(dx, dy);
  if (length <= cfg.tap_vs_swipe_threshold + kEps) return Gesture{};
  return Gesture{Gesture::Kind::swipe, dominant_direction(dx, dy), distance_bucket(length, cfg)};
}

BBox derive_enclosing_bbox(PixelPoint p, std::span<const BBox> candidates) {
  const BBox* best = nullptr;
  for (const BBox& b : candidates) {
    if (!b.well_formed() || !point_in_bbox(p, b)) continue;
    if (!best || b.area() < best->area() ||
        (b.area() == best->area() && std::pair(b.top, b.left) < std::pair(best->top, best->left))) {
      best = &b;
    }
  }
  if (!best) {
    throw NotFoundError("no candidate box contains (" + std::to_string(p.x) + "," +
                        std::to_string(p.y) + ")");
  }
  return *best;
}

SourceManifest manifest_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  SourceManifest m;
  try {
    m.source = parse_source(j.at("source").get<std::string>());
    m.platform = parse_platform(j.at("platform").get<std::string>());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }

  const std::string coords = optional_string(j, "coordinates").value_or("pixel");
  if (coords == "unit") {
    m.coordinates = CoordinateSpace::unit;
  } else if (coords == "permille") {
    m.coordinates = CoordinateSpace::permille;
  } else if (coords == "pixel") {
    m.coordinates = CoordinateSpace::pixel;
  } else {
    throw ConfigError("manifest: unknown coordinates '" + coords + "'");
  }
  const std::string axes = optional_string(j, "axis_order").value_or("xy");
  if (axes != "xy" && axes != "yx") throw ConfigError("manifest: axis_order must be xy or yx");
  m.axis_order = axes == "xy" ? AxisOrder::xy : AxisOrder::yx;
  const std::string boxes = optional_string(j, "bbox_format").value_or("ltrb");
  if (boxes != "ltrb" && boxes != "xywh") throw ConfigError("manifest: bbox_format must be ltrb or xywh");
  m.bbox_format = boxes == "ltrb" ? BBoxFormat::ltrb : BBoxFormat::xywh;

  if (auto f = j.find("fields"); f != j.end()) {
    if (auto v = optional_string(*f, "action")) m.action_field = *v;
    if (auto v = optional_string(*f, "screenshot")) m.screenshot_field = *v;
    if (auto v = optional_string(*f, "width")) m.width_field = *v;
    if (auto v = optional_string(*f, "height")) m.height_field = *v;
    m.image_field = optional_string(*f, "image");
    m.instruction_field = optional_string(*f, "instruction");
    m.reasoning_field = optional_string(*f, "reasoning");
    m.candidates_field = optional_string(*f, "candidates");
  }

  auto actions = j.find("actions");
  if (actions == j.end() || !actions->is_object() || actions->empty()) {
    throw ConfigError("manifest for " + std::string(to_string(m.source)) + " declares no actions");
  }
  for (const auto& [name, spec] : actions->items()) {
    if (!spec.is_object()) throw ConfigError("manifest rule for '" + name + "' must be an object");
    ActionRule rule;
    const std::string kind = optional_string(spec, "rule").value_or("");
    auto k = std::find_if(kRuleNames.begin(), kRuleNames.end(),
                          [&](const RuleName& r) { return r.name == kind; });
    if (k == kRuleNames.end()) throw ConfigError("manifest rule for '" + name + "' has unknown kind '" + kind + "'");
    rule.kind = k->kind;
    rule.emit = optional_string(spec, "emit").value_or("");
    rule.params = spec;

    const auto& emits = allowed_emits(rule.kind);
    if (!emits.empty() && !emits.count(rule.emit)) {
      throw ConfigError("manifest rule for '" + name + "' cannot emit '" + rule.emit + "'");
    }
    if (!rule.emit.empty() && !platform_has(m.platform, rule.emit)) {
      throw ConfigError("manifest rule for '" + name + "' emits '" + rule.emit + "' outside the " +
                        std::string(to_string(m.platform)) + " action space");
    }
    switch (rule.kind) {
      case RuleKind::dual_point:
        if (m.platform != Platform::mobile) throw ConfigError("dual_point rules are mobile-only");
        require_params(name, rule, {{"start", "end"}});
        break;
      case RuleKind::point:
        require_params(name, rule, {{"point"}, {"x", "y"}, {"bbox"}});
        break;
      case RuleKind::two_point:
        require_params(name, rule, {{"start", "end"}});
        break;
      case RuleKind::text:
        require_params(name, rule, {{"arg"}, {"value"}});
        break;
      case RuleKind::typed_click:
        if (!platform_has(m.platform, "input_text")) throw ConfigError("typed_click needs input_text");
        require_params(name, rule, {{"text", "point"}, {"text", "x", "y"}, {"text", "bbox"}});
        break;
      case RuleKind::direction:
        require_params(name, rule, {{"direction"}});
        break;
      case RuleKind::offset:
        require_params(name, rule, {{"dx", "dy"}});
        break;
      case RuleKind::status:
        require_params(name, rule, {{"goal_status"}, {"goal_status_field"}});
        break;
      case RuleKind::switch_tab:
        require_params(name, rule, {{"tab"}});
        break;
      case RuleKind::script: {
        require_params(name, rule, {{"script", "functions"}});
        for (const auto& [fn, emit] : rule.params["functions"].items()) {
          if (!emit.is_string() || !platform_has(m.platform, emit.get<std::string>())) {
            throw ConfigError("script function '" + fn + "' maps outside the action space");
          }
        }
        break;
      }
      case RuleKind::no_arg:
        break;
    }
    m.actions.emplace(name, std::move(rule));
  }
  return m;
}

SourceManifest load_manifest(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("manifest '" + path + "': " + e.what());
  }
  return manifest_from_json(j);
}

AdapterRegistry AdapterRegistry::from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  AdapterRegistry r;
  if (!fs::is_directory(dir)) throw IoError("manifest directory '" + dir + "' not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) r.add(load_manifest(f.string()));
  return r;
}

void AdapterRegistry::add(SourceManifest m) {
  const SourceKind s = m.source;
  manifests_.insert_or_assign(s, std::move(m));
}

const SourceManifest* AdapterRegistry::find(SourceKind s) const {
  auto it = manifests_.find(s);
  return it == manifests_.end() ? nullptr : &it->second;
}

Episode AdapterRegistry::convert_episode(const SourceEpisode& e, const AdapterConfig& cfg) const {
  const SourceManifest* m = find(e.source);
  if (!m) throw ConfigError("no manifest registered for source " + std::string(to_string(e.source)));
  return guikit::convert_episode(e, *m, cfg);
}

Episode convert_episode(const SourceEpisode& e, const SourceManifest& m, const AdapterConfig& cfg) {
  if (e.source != m.source) throw ConfigError("manifest source does not match episode source");
  Episode out;
  out.id = e.episode_id;
  out.platform = m.platform;
  out.goal = e.goal;
  EpisodeState state;
  for (std::size_t i = 0; i < e.raw_steps.size(); ++i) {
    const Json& raw = e.raw_steps[i];
    StepConverter conv(m, cfg, raw, i);
    const ActionRule* rule = nullptr;
    if (auto it = raw.find(m.action_field); it != raw.end() && it->is_string()) {
      auto r = m.actions.find(it->get<std::string>());
      if (r != m.actions.end()) rule = &r->second;
    }
    if (!rule) {
      auto any = m.actions.find("*");
      if (any != m.actions.end()) rule = &any->second;
    }
    if (!rule) conv.fail("action not declared in the source manifest");

    const ScreenshotMeta screen = conv.screen();
    std::vector<Emitted> emitted;
    try {
      emitted = conv.convert(*rule, screen, state);
    } catch (const ActionParseError& err) {
      conv.fail(err.what());
    }
    for (std::size_t part = 0; part < emitted.size(); ++part) {
      Step s;
      s.screenshot = screen;
      if (m.instruction_field) {
        if (auto it = raw.find(*m.instruction_field); it != raw.end() && it->is_string()) {
          s.low_level_instruction = it->get<std::string>();
        }
      }
      if (m.reasoning_field) {
        if (auto it = raw.find(*m.reasoning_field); it != raw.end() && it->is_string()) {
          s.reasoning = it->get<std::string>();
        }
      }
      s.gold_action = std::move(emitted[part].action);
      s.gold_bbox = emitted[part].bbox;
      s.history_index = static_cast<int>(out.steps.size());
      s.provenance = Json{{"source", std::string(to_string(m.source))}, {"step_index", i}};
      if (emitted.size() > 1) s.provenance["part"] = part;
      s.provenance["raw"] = raw;
      out.steps.push_back(std::move(s));
    }
  }
  if (out.steps.empty()) throw ConversionError(e.source, 0, "", "episode has no steps");
  return out;
}

}  // namespace guikit
