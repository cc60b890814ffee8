#pragma once

#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "guikit/core_model.hpp"
#include "guikit/error.hpp"

namespace guikit {

enum class Direction { up, down, left, right };
enum class SwipeDistance { short_, medium, long_ };
enum class GoalStatus { successful, infeasible };

std::string_view to_string(Direction d);
std::string_view to_string(SwipeDistance d);
std::string_view to_string(GoalStatus s);

// Individual action variants. `kName` is the canonical action_type string.
namespace act {

struct Click {
  static constexpr std::string_view kName = "click";
  NormPoint target;
  friend bool operator==(const Click&, const Click&) = default;
};
struct LongPress {
  static constexpr std::string_view kName = "long_press";
  NormPoint target;
  friend bool operator==(const LongPress&, const LongPress&) = default;
};
struct RightClick {
  static constexpr std::string_view kName = "right_click";
  NormPoint target;
  friend bool operator==(const RightClick&, const RightClick&) = default;
};
struct DoubleClick {
  static constexpr std::string_view kName = "double_click";
  NormPoint target;
  friend bool operator==(const DoubleClick&, const DoubleClick&) = default;
};
struct Swipe {
  static constexpr std::string_view kName = "swipe";
  NormPoint start;
  Direction direction = Direction::up;
  SwipeDistance distance = SwipeDistance::medium;
  friend bool operator==(const Swipe&, const Swipe&) = default;
};
struct Scroll {
  static constexpr std::string_view kName = "scroll";
  Direction direction = Direction::down;
  SwipeDistance distance = SwipeDistance::medium;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};
struct InputText {
  static constexpr std::string_view kName = "input_text";
  std::string text;
  friend bool operator==(const InputText&, const InputText&) = default;
};
struct Drag {
  static constexpr std::string_view kName = "drag";
  NormPoint start;
  NormPoint end;
  friend bool operator==(const Drag&, const Drag&) = default;
};
struct MoveTo {
  static constexpr std::string_view kName = "move_to";
  NormPoint start;
  NormPoint end;
  friend bool operator==(const MoveTo&, const MoveTo&) = default;
};
struct Enter {
  static constexpr std::string_view kName = "enter";
  friend bool operator==(const Enter&, const Enter&) = default;
};
struct NavigateBack {
  static constexpr std::string_view kName = "navigate_back";
  friend bool operator==(const NavigateBack&, const NavigateBack&) = default;
};
struct NavigateHome {
  static constexpr std::string_view kName = "navigate_home";
  friend bool operator==(const NavigateHome&, const NavigateHome&) = default;
};
struct NavigateRecent {
  static constexpr std::string_view kName = "navigate_recent";
  friend bool operator==(const NavigateRecent&, const NavigateRecent&) = default;
};
struct NavigateForward {
  static constexpr std::string_view kName = "navigate_forward";
  friend bool operator==(const NavigateForward&, const NavigateForward&) = default;
};
struct Wait {
  static constexpr std::string_view kName = "wait";
  friend bool operator==(const Wait&, const Wait&) = default;
};
struct GoTo {
  static constexpr std::string_view kName = "go_to";
  std::string url;
  friend bool operator==(const GoTo&, const GoTo&) = default;
};
struct SearchGoogle {
  static constexpr std::string_view kName = "search_google";
  std::string query;
  friend bool operator==(const SearchGoogle&, const SearchGoogle&) = default;
};
struct PressKey {
  static constexpr std::string_view kName = "press_key";
  std::string key;
  friend bool operator==(const PressKey&, const PressKey&) = default;
};
struct Hotkey {
  static constexpr std::string_view kName = "hotkey";
  std::string key_comb;  // keys joined by '-', e.g. "Ctrl-Shift-1"
  friend bool operator==(const Hotkey&, const Hotkey&) = default;
};
struct NewTab {
  static constexpr std::string_view kName = "new_tab";
  friend bool operator==(const NewTab&, const NewTab&) = default;
};
struct SwitchTab {
  static constexpr std::string_view kName = "switch_tab";
  int tab = 0;
  friend bool operator==(const SwitchTab&, const SwitchTab&) = default;
};
struct CloseTab {
  static constexpr std::string_view kName = "close_tab";
  friend bool operator==(const CloseTab&, const CloseTab&) = default;
};
struct Status {
  static constexpr std::string_view kName = "status";
  GoalStatus goal_status = GoalStatus::successful;
  std::string answer;  // may be empty
  friend bool operator==(const Status&, const Status&) = default;
};

}  // namespace act

// Alternative order follows the rows of each platform's action table.
using MobileAction = std::variant<act::Click, act::LongPress, act::Swipe, act::InputText, act::Drag,
                                  act::Enter, act::NavigateBack, act::NavigateHome,
                                  act::NavigateRecent, act::Wait, act::Status>;
using WebAction =
    std::variant<act::Click, act::Scroll, act::InputText, act::Drag, act::MoveTo, act::NavigateBack,
                 act::NavigateForward, act::GoTo, act::SearchGoogle, act::PressKey, act::Hotkey,
                 act::NewTab, act::SwitchTab, act::CloseTab, act::Status>;
using DesktopAction =
    std::variant<act::Click, act::RightClick, act::DoubleClick, act::Scroll, act::InputText,
                 act::Drag, act::MoveTo, act::PressKey, act::Hotkey, act::Status>;

template <class T, class Variant>
struct variant_has;
template <class T, class... Ts>
struct variant_has<T, std::variant<Ts...>> : std::bool_constant<(std::is_same_v<T, Ts> || ...)> {};
template <class T, class Variant>
inline constexpr bool variant_has_v = variant_has<T, Variant>::value;

template <Platform P>
struct platform_actions;
template <>
struct platform_actions<Platform::mobile> {
  using type = MobileAction;
};
template <>
struct platform_actions<Platform::web> {
  using type = WebAction;
};
template <>
struct platform_actions<Platform::desktop> {
  using type = DesktopAction;
};

class ActionParseError : public Error {
 public:
  enum class Kind { syntax, unknown_action, schema, range, platform_mismatch };

  ActionParseError(Kind kind, std::string detail, std::string action_type = {})
      : Error(describe(kind) + ": " + detail), kind_(kind), action_type_(std::move(action_type)) {}

  Kind kind() const noexcept { return kind_; }
  // The offending action_type for unknown_action and platform_mismatch.
  const std::string& action_type() const noexcept { return action_type_; }

 private:
  static std::string describe(Kind k);
  Kind kind_;
  std::string action_type_;
};

// A platform-tagged action. The tag is implied by which platform variant is
// held, so it cannot disagree with the contained action.
class UnifiedAction {
 public:
  using Storage = std::variant<MobileAction, WebAction, DesktopAction>;

  UnifiedAction() : value_(MobileAction{act::Wait{}}) {}
  UnifiedAction(MobileAction a) : value_(std::move(a)) {}
  UnifiedAction(WebAction a) : value_(std::move(a)) {}
  UnifiedAction(DesktopAction a) : value_(std::move(a)) {}

  // Wraps `a` for `platform`, or throws ActionParseError(platform_mismatch)
  // when that platform's table has no such action.
  template <class T>
  static UnifiedAction make(Platform platform, T a);

  Platform platform() const noexcept { return static_cast<Platform>(value_.index()); }
  std::string_view type_name() const;
  const Storage& storage() const noexcept { return value_; }

  // Visits the concrete act:: struct regardless of platform.
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit([&](const auto& pa) -> decltype(auto) { return std::visit(f, pa); }, value_);
  }

  template <class T>
  const T* get_if() const noexcept {
    return visit([](const auto& a) -> const T* {
      if constexpr (std::is_same_v<std::decay_t<decltype(a)>, T>) {
        return &a;
      } else {
        return nullptr;
      }
    });
  }

  friend bool operator==(const UnifiedAction&, const UnifiedAction&) = default;

 private:
  Storage value_;
};

template <class T>
UnifiedAction UnifiedAction::make(Platform platform, T a) {
  switch (platform) {
    case Platform::mobile:
      if constexpr (variant_has_v<T, MobileAction>) return UnifiedAction(MobileAction{std::move(a)});
      break;
    case Platform::web:
      if constexpr (variant_has_v<T, WebAction>) return UnifiedAction(WebAction{std::move(a)});
      break;
    case Platform::desktop:
      if constexpr (variant_has_v<T, DesktopAction>)
        return UnifiedAction(DesktopAction{std::move(a)});
      break;
  }
  throw ActionParseError(ActionParseError::Kind::platform_mismatch,
                         std::string(T::kName) + " is not in the " +
                             std::string(to_string(platform)) + " action space",
                         std::string(T::kName));
}

enum class SerializeMode { paper, strict_json };

// `paper` renders coordinate pairs as "(x,y)" tuples exactly like the action
// tables; `strict_json` renders them as "[x,y]" arrays. Key order is fixed.
std::string serialize_action(const UnifiedAction& a, SerializeMode mode = SerializeMode::paper);

// Accepts either mode with arbitrary whitespace. Throws ActionParseError.
UnifiedAction parse_action(std::string_view s, Platform platform);

// Finds the first balanced {...} object in free-form text (model output).
// Returns an empty view when there is none.
std::string_view extract_action_object(std::string_view text);

enum class Violation {
  coordinate_out_of_range,
  empty_text,
  bad_enum_value,
  negative_tab_index,
  malformed_key_comb,
};

std::string_view to_string(Violation v);

std::vector<Violation> validate_action(const UnifiedAction& a);

// Action names per platform, in table order.
const std::vector<std::string_view>& action_names(Platform p);

// click/long_press/right_click/double_click: actions that require locating an
// on-screen element.
bool is_localization_action(std::string_view action_type);

}  // namespace guikit
