#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guikit/action_space.hpp"
#include "guikit/core_model.hpp"
#include "json.hpp"

namespace guikit {

struct Step {
  ScreenshotMeta screenshot;
  std::optional<std::string> low_level_instruction;
  UnifiedAction gold_action;
  // Only for localization actions (click/long_press/right_click/double_click).
  std::optional<BBox> gold_bbox;
  int history_index = 0;
  // Agent reasoning text carried by some sources; checked for consistency
  // with gold_action by the episode denoiser.
  std::optional<std::string> reasoning;
  // Source-native record this step was converted from.
  nlohmann::ordered_json provenance;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Episode {
  std::string id;
  Platform platform = Platform::mobile;
  std::string goal;
  std::vector<Step> steps;

  friend bool operator==(const Episode&, const Episode&) = default;
};

// "<episode id>#<history_index>": the key predictions refer to.
std::string step_id(const Episode& e, const Step& s);

// Checks non-empty steps, shared platform, contiguous history indices and
// gold_bbox only on localization actions. Throws SchemaError.
void check_episode(const Episode& e);

}  // namespace guikit
