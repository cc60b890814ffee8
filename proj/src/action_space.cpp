#include "guikit/action_space.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "json.hpp"

namespace guikit {

using nlohmann::json;

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::up:
      return "up";
    case Direction::down:
      return "down";
    case Direction::left:
      return "left";
    case Direction::right:
      return "right";
  }
  return "?";
}

std::string_view to_string(SwipeDistance d) {
  switch (d) {
    case SwipeDistance::short_:
      return "short";
    case SwipeDistance::medium:
      return "medium";
    case SwipeDistance::long_:
      return "long";
  }
  return "?";
}

std::string_view to_string(GoalStatus s) {
  switch (s) {
    case GoalStatus::successful:
      return "successful";
    case GoalStatus::infeasible:
      return "infeasible";
  }
  return "?";
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::coordinate_out_of_range:
      return "coordinate-out-of-range";
    case Violation::empty_text:
      return "empty-text";
    case Violation::bad_enum_value:
      return "bad-enum-value";
    case Violation::negative_tab_index:
      return "negative-tab-index";
    case Violation::malformed_key_comb:
      return "malformed-key-comb";
  }
  return "?";
}

std::string ActionParseError::describe(Kind k) {
  switch (k) {
    case Kind::syntax:
      return "syntax error";
    case Kind::unknown_action:
      return "unknown action";
    case Kind::schema:
      return "schema error";
    case Kind::range:
      return "range error";
    case Kind::platform_mismatch:
      return "platform mismatch";
  }
  return "parse error";
}

std::string_view UnifiedAction::type_name() const {
  return visit([](const auto& a) { return std::decay_t<decltype(a)>::kName; });
}

namespace {

// ---------------------------------------------------------------------------
// Serialization

class ObjectWriter {
 public:
  explicit ObjectWriter(SerializeMode mode) : mode_(mode) {}

  void string_field(std::string_view k, std::string_view v) {
    key(k);
    out_ += json(std::string(v)).dump(-1, ' ', false, json::error_handler_t::replace);
  }
  void point_field(std::string_view k, NormPoint p) {
    key(k);
    out_ += mode_ == SerializeMode::paper ? '(' : '[';
    out_ += std::to_string(p.x);
    out_ += ',';
    out_ += std::to_string(p.y);
    out_ += mode_ == SerializeMode::paper ? ')' : ']';
  }
  std::string finish() && {
    out_ += '}';
    return std::move(out_);
  }

 private:
  void key(std::string_view k) {
    out_ += first_ ? "" : ", ";
    first_ = false;
    out_ += '"';
    out_ += k;
    out_ += "\": ";
  }

  SerializeMode mode_;
  std::string out_ = "{";
  bool first_ = true;
};

template <class T>
concept HasTarget = requires(const T& t) { t.target; };
template <class T>
concept HasStartEnd = requires(const T& t) {
  t.start;
  t.end;
};

void write_fields(ObjectWriter& w, const act::Swipe& a) {
  w.point_field("start", a.start);
  w.string_field("direction", to_string(a.direction));
  w.string_field("distance", to_string(a.distance));
}
void write_fields(ObjectWriter& w, const act::Scroll& a) {
  w.string_field("direction", to_string(a.direction));
  w.string_field("distance", to_string(a.distance));
}
void write_fields(ObjectWriter& w, const act::InputText& a) { w.string_field("text", a.text); }
void write_fields(ObjectWriter& w, const act::GoTo& a) { w.string_field("url", a.url); }
void write_fields(ObjectWriter& w, const act::SearchGoogle& a) { w.string_field("query", a.query); }
void write_fields(ObjectWriter& w, const act::PressKey& a) { w.string_field("key", a.key); }
void write_fields(ObjectWriter& w, const act::Hotkey& a) { w.string_field("key_comb", a.key_comb); }
// The web table quotes the tab index: "tab": "(tab index)".
void write_fields(ObjectWriter& w, const act::SwitchTab& a) {
  w.string_field("tab", std::to_string(a.tab));
}
void write_fields(ObjectWriter& w, const act::Status& a) {
  w.string_field("goal_status", to_string(a.goal_status));
  w.string_field("answer", a.answer);
}
template <class T>
  requires HasTarget<T>
void write_fields(ObjectWriter& w, const T& a) {
  w.point_field("target", a.target);
}
template <class T>
  requires HasStartEnd<T>
void write_fields(ObjectWriter& w, const T& a) {
  w.point_field("start", a.start);
  w.point_field("end", a.end);
}
template <class T>
void write_fields(ObjectWriter&, const T&) {}

// ---------------------------------------------------------------------------
// Parsing

using PE = ActionParseError;

// Rewrites tuple parentheses outside string literals into JSON brackets.
std::string tuples_to_arrays(std::string_view s) {
  std::string out(s);
  bool in_string = false;
  bool escaped = false;
  for (char& c : out) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '(') {
      c = '[';
    } else if (c == ')') {
      c = ']';
    }
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

class FieldReader {
 public:
  FieldReader(const json& obj, std::string action) : obj_(obj), action_(std::move(action)) {}

  const json& require(const char* k) {
    auto it = obj_.find(k);
    if (it == obj_.end()) {
      throw PE(PE::Kind::schema, action_ + " is missing argument '" + k + "'", action_);
    }
    used_.insert(k);
    return *it;
  }

  std::string string(const char* k) {
    const json& v = require(k);
    if (!v.is_string()) {
      throw PE(PE::Kind::schema, "argument '" + std::string(k) + "' must be a string", action_);
    }
    return v.get<std::string>();
  }

  int integer_value(const json& v, const std::string& what) {
    if (v.is_number_integer()) {
      auto n = v.get<std::int64_t>();
      if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
        throw PE(PE::Kind::range, what + " does not fit an integer", action_);
      }
      return static_cast<int>(n);
    }
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (d == static_cast<double>(static_cast<long long>(d)) && std::abs(d) < 1e9) {
        return static_cast<int>(d);
      }
    }
    throw PE(PE::Kind::schema, what + " must be an integer", action_);
  }

  NormPoint point(const char* k) {
    const json& v = require(k);
    if (!v.is_array() || v.size() != 2) {
      throw PE(PE::Kind::schema, "argument '" + std::string(k) + "' must be a coordinate pair",
               action_);
    }
    NormPoint p{integer_value(v[0], std::string(k) + ".x"),
                integer_value(v[1], std::string(k) + ".y")};
    if (!p.in_range()) {
      throw PE(PE::Kind::range,
               "argument '" + std::string(k) + "' = (" + std::to_string(p.x) + "," +
                   std::to_string(p.y) + ") outside [0,1000]",
               action_);
    }
    return p;
  }

  int tab(const char* k) {
    const json& v = require(k);
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      int n = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw PE(PE::Kind::schema, "argument 'tab' must be an integer index", action_);
      }
      return n;
    }
    return integer_value(v, "tab");
  }

  template <class Enum, std::size_t N>
  Enum enumerated(const char* k, const std::array<Enum, N>& values) {
    const std::string s = lowercase(string(k));
    for (Enum e : values) {
      if (to_string(e) == s) return e;
    }
    throw PE(PE::Kind::schema, "argument '" + std::string(k) + "' has invalid value '" + s + "'",
             action_);
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (k == "action_type") continue;
      if (!used_.count(k)) {
        throw PE(PE::Kind::schema, action_ + " has unexpected argument '" + k + "'", action_);
      }
    }
  }

 private:
  const json& obj_;
  std::string action_;
  std::set<std::string> used_;
};

constexpr std::array kDirections{Direction::up, Direction::down, Direction::left, Direction::right};
constexpr std::array kDistances{SwipeDistance::short_, SwipeDistance::medium, SwipeDistance::long_};
constexpr std::array kStatuses{GoalStatus::successful, GoalStatus::infeasible};

template <class T>
T read_fields(FieldReader& r) {
  T a{};
  if constexpr (HasTarget<T>) {
    a.target = r.point("target");
  } else if constexpr (HasStartEnd<T>) {
    a.start = r.point("start");
    a.end = r.point("end");
  } else if constexpr (std::is_same_v<T, act::Swipe>) {
    a.start = r.point("start");
    a.direction = r.enumerated("direction", kDirections);
    a.distance = r.enumerated("distance", kDistances);
  } else if constexpr (std::is_same_v<T, act::Scroll>) {
    a.direction = r.enumerated("direction", kDirections);
    a.distance = r.enumerated("distance", kDistances);
  } else if constexpr (std::is_same_v<T, act::InputText>) {
    a.text = r.string("text");
  } else if constexpr (std::is_same_v<T, act::GoTo>) {
    a.url = r.string("url");
  } else if constexpr (std::is_same_v<T, act::SearchGoogle>) {
    a.query = r.string("query");
  } else if constexpr (std::is_same_v<T, act::PressKey>) {
    a.key = r.string("key");
  } else if constexpr (std::is_same_v<T, act::Hotkey>) {
    a.key_comb = r.string("key_comb");
  } else if constexpr (std::is_same_v<T, act::SwitchTab>) {
    a.tab = r.tab("tab");
  } else if constexpr (std::is_same_v<T, act::Status>) {
    a.goal_status = r.enumerated("goal_status", kStatuses);
    a.answer = r.string("answer");
  }
  r.finish();
  return a;
}

using Builder = std::function<UnifiedAction(FieldReader&)>;

template <class Variant>
std::map<std::string, Builder, std::less<>> builders_for(Platform p) {
  std::map<std::string, Builder, std::less<>> out;
  [&]<std::size_t... I>(std::index_sequence<I...>) {
    (
        [&] {
          using T = std::variant_alternative_t<I, Variant>;
          out.emplace(std::string(T::kName), [p](FieldReader& r) {
            return UnifiedAction::make(p, read_fields<T>(r));
          });
        }(),
        ...);
  }(std::make_index_sequence<std::variant_size_v<Variant>>{});
  return out;
}

const std::map<std::string, Builder, std::less<>>& builders(Platform p) {
  static const auto mobile = builders_for<MobileAction>(Platform::mobile);
  static const auto web = builders_for<WebAction>(Platform::web);
  static const auto desktop = builders_for<DesktopAction>(Platform::desktop);
  switch (p) {
    case Platform::web:
      return web;
    case Platform::desktop:
      return desktop;
    default:
      return mobile;
  }
}

template <class Variant>
std::vector<std::string_view> names_of() {
  std::vector<std::string_view> out;
  [&]<std::size_t... I>(std::index_sequence<I...>) {
    (out.push_back(std::variant_alternative_t<I, Variant>::kName), ...);
  }(std::make_index_sequence<std::variant_size_v<Variant>>{});
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string serialize_action(const UnifiedAction& a, SerializeMode mode) {
  ObjectWriter w(mode);
  w.string_field("action_type", a.type_name());
  a.visit([&](const auto& concrete) { write_fields(w, concrete); });
  return std::move(w).finish();
}

UnifiedAction parse_action(std::string_view s, Platform platform) {
  json obj;
  try {
    obj = json::parse(tuples_to_arrays(s));
  } catch (const json::parse_error& e) {
    throw PE(PE::Kind::syntax, e.what());
  }
  if (!obj.is_object()) throw PE(PE::Kind::syntax, "action must be a JSON-style object");
  auto it = obj.find("action_type");
  if (it == obj.end() || !it->is_string()) {
    throw PE(PE::Kind::schema, "missing string field 'action_type'");
  }
  std::string name = lowercase(it->get<std::string>());
  if (platform == Platform::mobile && name == "tap") name = "click";

  const auto& table = builders(platform);
  auto b = table.find(name);
  if (b == table.end()) {
    for (Platform other : {Platform::mobile, Platform::web, Platform::desktop}) {
      if (builders(other).count(name)) {
        throw PE(PE::Kind::platform_mismatch,
                 name + " is not in the " + std::string(to_string(platform)) + " action space",
                 name);
      }
    }
    throw PE(PE::Kind::unknown_action, "unknown action_type '" + name + "'", name);
  }
  FieldReader reader(obj, name);
  return b->second(reader);
}

std::string_view extract_action_object(std::string_view text) {
  auto open = text.find('{');
  while (open != std::string_view::npos) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return text.substr(open, i - open + 1);
      }
    }
    open = text.find('{', open + 1);
  }
  return {};
}

std::vector<Violation> validate_action(const UnifiedAction& a) {
  std::vector<Violation> out;
  auto point = [&](NormPoint p) {
    if (!p.in_range()) out.push_back(Violation::coordinate_out_of_range);
  };
  auto text = [&](const std::string& s) {
    if (is_blank(s)) out.push_back(Violation::empty_text);
  };
  auto direction = [&](Direction d) {
    if (static_cast<unsigned>(d) > static_cast<unsigned>(Direction::right)) {
      out.push_back(Violation::bad_enum_value);
    }
  };
  auto distance = [&](SwipeDistance d) {
    if (static_cast<unsigned>(d) > static_cast<unsigned>(SwipeDistance::long_)) {
      out.push_back(Violation::bad_enum_value);
    }
  };
  a.visit([&](const auto& x) {
    using T = std::decay_t<decltype(x)>;
    if constexpr (HasTarget<T>) {
      point(x.target);
    } else if constexpr (HasStartEnd<T>) {
      point(x.start);
      point(x.end);
    } else if constexpr (std::is_same_v<T, act::Swipe>) {
      point(x.start);
      direction(x.direction);
      distance(x.distance);
    } else if constexpr (std::is_same_v<T, act::Scroll>) {
      direction(x.direction);
      distance(x.distance);
    } else if constexpr (std::is_same_v<T, act::InputText>) {
      text(x.text);
    } else if constexpr (std::is_same_v<T, act::GoTo>) {
      text(x.url);
    } else if constexpr (std::is_same_v<T, act::SearchGoogle>) {
      text(x.query);
    } else if constexpr (std::is_same_v<T, act::PressKey>) {
      text(x.key);
    } else if constexpr (std::is_same_v<T, act::Hotkey>) {
      text(x.key_comb);
      if (!is_blank(x.key_comb)) {
        // Every '-'-separated segment names a key.
        std::string_view rest = x.key_comb;
        for (;;) {
          auto dash = rest.find('-');
          if (is_blank(rest.substr(0, dash))) {
            out.push_back(Violation::malformed_key_comb);
            break;
          }
          if (dash == std::string_view::npos) break;
          rest.remove_prefix(dash + 1);
        }
      }
    } else if constexpr (std::is_same_v<T, act::SwitchTab>) {
      if (x.tab < 0) out.push_back(Violation::negative_tab_index);
    } else if constexpr (std::is_same_v<T, act::Status>) {
      if (static_cast<unsigned>(x.goal_status) > static_cast<unsigned>(GoalStatus::infeasible)) {
        out.push_back(Violation::bad_enum_value);
      }
    }
  });
  return out;
}

const std::vector<std::string_view>& action_names(Platform p) {
  static const auto mobile = names_of<MobileAction>();
  static const auto web = names_of<WebAction>();
  static const auto desktop = names_of<DesktopAction>();
  switch (p) {
    case Platform::web:
      return web;
    case Platform::desktop:
      return desktop;
    default:
      return mobile;
  }
}

bool is_localization_action(std::string_view action_type) {
  return action_type == act::Click::kName || action_type == act::LongPress::kName ||
         action_type == act::RightClick::kName || action_type == act::DoubleClick::kName;
}

}  // namespace guikit
