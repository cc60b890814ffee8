#include "guikit/episode.hpp"

#include "guikit/error.hpp"

namespace guikit {

std::string step_id(const Episode& e, const Step& s) {
  return e.id + "#" + std::to_string(s.history_index);
}

void check_episode(const Episode& e) {
  if (e.steps.empty()) throw SchemaError("episode '" + e.id + "' has no steps");
  for (std::size_t i = 0; i < e.steps.size(); ++i) {
    const Step& s = e.steps[i];
    const std::string where = "episode '" + e.id + "' step " + std::to_string(i);
    if (s.gold_action.platform() != e.platform) {
      throw SchemaError(where + ": action platform " + std::string(to_string(s.gold_action.platform())) +
                        " differs from episode platform " + std::string(to_string(e.platform)));
    }
    if (s.history_index != static_cast<int>(i)) {
      throw SchemaError(where + ": history_index " + std::to_string(s.history_index));
    }
    if (s.gold_bbox && !is_localization_action(s.gold_action.type_name())) {
      throw SchemaError(where + ": gold_bbox on non-localization action " +
                        std::string(s.gold_action.type_name()));
    }
    if (!s.screenshot.valid()) throw SchemaError(where + ": screenshot has no positive size");
    if (s.screenshot.platform != e.platform) {
      throw SchemaError(where + ": screenshot platform differs from episode platform");
    }
  }
}

}  // namespace guikit
