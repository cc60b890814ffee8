#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guikit/core_model.hpp"
#include "guikit/episode.hpp"
#include "guikit/error.hpp"
#include "guikit/json_io.hpp"

namespace guikit {

enum class TaskKind {
  funcgnd,
  elemgnd,
  textgnd,
  icongnd,
  intentgnd,
  funcref,
  elemref,
  ocr,
  iconref,
  widget_listing,
  captioning,
  qa,
  agent_step,
};

inline constexpr std::array<TaskKind, 13> kAllTaskKinds{
    TaskKind::funcgnd, TaskKind::elemgnd,        TaskKind::textgnd,    TaskKind::icongnd,
    TaskKind::intentgnd, TaskKind::funcref,      TaskKind::elemref,    TaskKind::ocr,
    TaskKind::iconref, TaskKind::widget_listing, TaskKind::captioning, TaskKind::qa,
    TaskKind::agent_step};

std::string_view to_string(TaskKind k);
TaskKind parse_task_kind(std::string_view s);

bool is_grounding_kind(TaskKind k);
bool is_referring_kind(TaskKind k);
// The RE kind a grounding or referring task kind is generated from.
std::optional<ReKind> required_re_kind(TaskKind k);
bool compatible(TaskKind k, ReKind re);

class PairingError : public Error {
 public:
  using Error::Error;
};

struct TaskSample {
  TaskKind kind = TaskKind::funcgnd;
  std::string image;
  std::string prompt;
  std::string target;
  std::vector<std::string> provenance;

  friend bool operator==(const TaskSample&, const TaskSample&) = default;
};

Json to_json(const TaskSample& s);
TaskSample task_sample_from_json(const Json& j);

// Prompt templates per kind, loaded from a text file:
//
//   # comment
//   [funcgnd]
//   Where is the element that {re}?
//
// One template per non-blank line. Placeholders: {re} {point} {task}
// {history} {instruction}. Write {{ and }} for literal braces.
class TemplateSet {
 public:
  static TemplateSet parse(std::string_view text);
  static TemplateSet load(const std::string& path);

  void add(TaskKind k, std::string tmpl);
  // Throws ConfigError when `k` has no templates.
  const std::vector<std::string>& templates(TaskKind k) const;
  bool has(TaskKind k) const;
  // Throws ConfigError naming the first generated kind without templates.
  void require_kinds(const std::vector<TaskKind>& kinds) const;

 private:
  std::map<TaskKind, std::vector<std::string>> by_kind_;
};

// Fills placeholders from `values`; throws ConfigError for unknown or
// unterminated placeholders.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// "(x,y)"
std::string render_point(NormPoint p);
// Parses "(x,y)"; nullopt when malformed.
std::optional<NormPoint> parse_point(std::string_view s);

// Picks template index from (seed, n) deterministically.
std::size_t pick_template(std::uint64_t seed, std::size_t n);

TaskSample gen_grounding(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                         std::uint64_t seed);
TaskSample gen_referring(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                         std::uint64_t seed);
// Grounding or referring depending on `kind`.
TaskSample gen_triplet_task(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                            std::uint64_t seed);
// The kinds a triplet seeds: its grounding kind and, when one exists, its
// referring dual.
std::vector<TaskKind> kinds_for(ReKind re);

class EmptyListingError : public Error {
 public:
  using Error::Error;
};

std::string widget_line(const ElementRecord& e, const ScreenshotMeta& screen);
TaskSample gen_widget_listing(const ScreenRecord& screen, const TemplateSet& templates,
                              std::uint64_t seed);

// Source-provided prompt/answer pair for captioning or qa, re-emitted as is
// after validation. Throws SchemaError.
TaskSample passthrough_sample(const Json& j);

struct AgentFormatConfig {
  int history_window = 8;
};

std::string render_history(const Episode& ep, std::size_t step_idx, int window);
// Throws OutOfBoundsError('s', ...) when step_idx is out of range.
TaskSample format_agent_sample(const Episode& ep, std::size_t step_idx, const TemplateSet& templates,
                               const AgentFormatConfig& cfg, std::uint64_t seed);

// Mixes a base seed with a record index into a per-record seed.
std::uint64_t record_seed(std::uint64_t base, std::uint64_t index);

}  // namespace guikit
