#include "guikit/taskgen.hpp"

#include <algorithm>
#include <charconv>
#include <random>

#include "guikit/text.hpp"

namespace guikit {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::funcgnd:
      return "funcgnd";
    case TaskKind::elemgnd:
      return "elemgnd";
    case TaskKind::textgnd:
      return "textgnd";
    case TaskKind::icongnd:
      return "icongnd";
    case TaskKind::intentgnd:
      return "intentgnd";
    case TaskKind::funcref:
      return "funcref";
    case TaskKind::elemref:
      return "elemref";
    case TaskKind::ocr:
      return "ocr";
    case TaskKind::iconref:
      return "iconref";
    case TaskKind::widget_listing:
      return "widget_listing";
    case TaskKind::captioning:
      return "captioning";
    case TaskKind::qa:
      return "qa";
    case TaskKind::agent_step:
      return "agent_step";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) {
  for (TaskKind k : kAllTaskKinds) {
    if (to_string(k) == s) return k;
  }
  throw SchemaError("unknown task kind '" + std::string(s) + "'");
}

bool is_grounding_kind(TaskKind k) {
  return k == TaskKind::funcgnd || k == TaskKind::elemgnd || k == TaskKind::textgnd ||
         k == TaskKind::icongnd || k == TaskKind::intentgnd;
}

bool is_referring_kind(TaskKind k) {
  return k == TaskKind::funcref || k == TaskKind::elemref || k == TaskKind::ocr ||
         k == TaskKind::iconref;
}

std::optional<ReKind> required_re_kind(TaskKind k) {
  switch (k) {
    case TaskKind::funcgnd:
    case TaskKind::funcref:
      return ReKind::functionality;
    case TaskKind::elemgnd:
    case TaskKind::elemref:
      return ReKind::description;
    case TaskKind::textgnd:
    case TaskKind::ocr:
      return ReKind::displayed_text;
    case TaskKind::icongnd:
    case TaskKind::iconref:
      return ReKind::icon_name;
    case TaskKind::intentgnd:
      return ReKind::intent;
    default:
      return std::nullopt;
  }
}

bool compatible(TaskKind k, ReKind re) {
  auto need = required_re_kind(k);
  return need && *need == re;
}

std::vector<TaskKind> kinds_for(ReKind re) {
  std::vector<TaskKind> out;
  for (TaskKind k : kAllTaskKinds) {
    if (is_grounding_kind(k) && compatible(k, re)) out.push_back(k);
  }
  for (TaskKind k : kAllTaskKinds) {
    if (is_referring_kind(k) && compatible(k, re)) out.push_back(k);
  }
  return out;
}

Json to_json(const TaskSample& s) {
  return Json{{"kind", std::string(to_string(s.kind))},
              {"image", s.image},
              {"prompt", s.prompt},
              {"target", s.target},
              {"provenance", s.provenance}};
}

TaskSample task_sample_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("task sample must be a JSON object");
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw SchemaError(std::string("task sample field '") + key + "' must be a string");
    }
    return it->get<std::string>();
  };
  TaskSample s;
  s.kind = parse_task_kind(str("kind"));
  s.image = str("image");
  s.prompt = str("prompt");
  s.target = str("target");
  if (auto it = j.find("provenance"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("task sample field 'provenance' must be an array");
    for (const auto& p : *it) {
      if (!p.is_string()) throw SchemaError("provenance entries must be strings");
      s.provenance.push_back(p.get<std::string>());
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Templates

TemplateSet TemplateSet::parse(std::string_view text) {
  TemplateSet set;
  std::optional<TaskKind> current;
  std::size_t line_no = 0;
  for (std::string line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view v = line;
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    if (v.empty() || v.front() == '#') continue;
    if (v.front() == '[' && v.back() == ']') {
      try {
        current = parse_task_kind(v.substr(1, v.size() - 2));
      } catch (const SchemaError&) {
        throw ConfigError("template line " + std::to_string(line_no) + ": unknown section " +
                          std::string(v));
      }
      continue;
    }
    if (!current) {
      throw ConfigError("template line " + std::to_string(line_no) + " is outside any [kind] section");
    }
    std::string tmpl;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '\\' && i + 1 < v.size() && v[i + 1] == 'n') {
        tmpl += '\n';
        ++i;
      } else {
        tmpl += v[i];
      }
    }
    // Validate placeholders once at load time.
    std::map<std::string, std::string> probe{
        {"re", ""}, {"point", ""}, {"task", ""}, {"history", ""}, {"instruction", ""}};
    try {
      fill_template(tmpl, probe);
    } catch (const ConfigError& e) {
      throw ConfigError("template line " + std::to_string(line_no) + ": " + e.what());
    }
    set.add(*current, std::move(tmpl));
  }
  return set;
}

TemplateSet TemplateSet::load(const std::string& path) { return parse(read_file(path)); }

void TemplateSet::add(TaskKind k, std::string tmpl) { by_kind_[k].push_back(std::move(tmpl)); }

bool TemplateSet::has(TaskKind k) const {
  auto it = by_kind_.find(k);
  return it != by_kind_.end() && !it->second.empty();
}

const std::vector<std::string>& TemplateSet::templates(TaskKind k) const {
  if (!has(k)) throw ConfigError("no templates for task kind '" + std::string(to_string(k)) + "'");
  return by_kind_.at(k);
}

void TemplateSet::require_kinds(const std::vector<TaskKind>& kinds) const {
  for (TaskKind k : kinds) templates(k);
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if ((c == '{' || c == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == c) {
      out += c;
      ++i;
      continue;
    }
    if (c == '}') throw ConfigError("unmatched '}' in template");
    if (c != '{') {
      out += c;
      continue;
    }
    auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw ConfigError("unterminated placeholder in template");
    std::string name(tmpl.substr(i + 1, close - i - 1));
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown placeholder {" + name + "}");
    out += it->second;
    i = close;
  }
  return out;
}

std::string render_point(NormPoint p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

std::optional<NormPoint> parse_point(std::string_view s) {
  if (s.size() < 5 || s.front() != '(' || s.back() != ')') return std::nullopt;
  auto comma = s.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto num = [](std::string_view t) -> std::optional<int> {
    int v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
  };
  auto x = num(s.substr(1, comma - 1));
  auto y = num(s.substr(comma + 1, s.size() - comma - 2));
  if (!x || !y) return std::nullopt;
  NormPoint p{*x, *y};
  if (!p.in_range()) return std::nullopt;
  return p;
}

std::size_t pick_template(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  return static_cast<std::size_t>(rng() % n);
}

std::uint64_t record_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::string image_of(const ScreenshotMeta& s) { return s.image_ref ? *s.image_ref : s.id; }

const std::string& choose(const TemplateSet& templates, TaskKind kind, std::uint64_t seed) {
  const auto& list = templates.templates(kind);
  return list[pick_template(seed, list.size())];
}

void check_pairing(const GroundingTriplet& t, TaskKind kind) {
  if (!compatible(kind, t.re.kind)) {
    throw PairingError("task kind " + std::string(to_string(kind)) + " cannot be generated from a " +
                       std::string(to_string(t.re.kind)) + " expression (triplet " + t.id + ")");
  }
}

NormPoint target_point(const GroundingTriplet& t) {
  return normalize_point(bbox_center(t.target_bbox), t.screenshot);
}

}  // namespace

TaskSample gen_grounding(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                         std::uint64_t seed) {
  if (!is_grounding_kind(kind)) {
    throw PairingError(std::string(to_string(kind)) + " is not a grounding task kind");
  }
  check_pairing(t, kind);
  TaskSample s;
  s.kind = kind;
  s.image = image_of(t.screenshot);
  s.prompt = fill_template(choose(templates, kind, seed), {{"re", t.re.text}});
  s.target = render_point(target_point(t));
  s.provenance = {t.id};
  return s;
}

TaskSample gen_referring(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                         std::uint64_t seed) {
  if (!is_referring_kind(kind)) {
    throw PairingError(std::string(to_string(kind)) + " is not a referring task kind");
  }
  check_pairing(t, kind);
  TaskSample s;
  s.kind = kind;
  s.image = image_of(t.screenshot);
  s.prompt =
      fill_template(choose(templates, kind, seed), {{"point", render_point(target_point(t))}});
  s.target = t.re.text;
  s.provenance = {t.id};
  return s;
}

TaskSample gen_triplet_task(const GroundingTriplet& t, TaskKind kind, const TemplateSet& templates,
                            std::uint64_t seed) {
  if (is_referring_kind(kind)) return gen_referring(t, kind, templates, seed);
  return gen_grounding(t, kind, templates, seed);
}

std::string widget_line(const ElementRecord& e, const ScreenshotMeta& screen) {
  std::string cls = e.elem_class && !e.elem_class->empty() ? *e.elem_class : "element";
  std::string label;
  if (e.text && !e.text->empty()) {
    label = *e.text;
  } else if (e.icon_class) {
    label = *e.icon_class;
  }
  return cls + " '" + label + "' at " +
         render_point(normalize_point(bbox_center(e.bbox), screen));
}

TaskSample gen_widget_listing(const ScreenRecord& screen, const TemplateSet& templates,
                              std::uint64_t seed) {
  if (screen.elements.empty()) {
    throw EmptyListingError("screen " + screen.screenshot.id + " has no elements to list");
  }
  std::vector<std::size_t> order(screen.elements.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const BBox& x = screen.elements[a].bbox;
    const BBox& y = screen.elements[b].bbox;
    return std::pair(x.top, x.left) < std::pair(y.top, y.left);
  });
  TaskSample s;
  s.kind = TaskKind::widget_listing;
  s.image = image_of(screen.screenshot);
  s.prompt = fill_template(choose(templates, TaskKind::widget_listing, seed), {});
  s.provenance.push_back(screen.screenshot.id);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const ElementRecord& e = screen.elements[order[k]];
    if (k) s.target += '\n';
    s.target += widget_line(e, screen.screenshot);
  }
  return s;
}

TaskSample passthrough_sample(const Json& j) {
  TaskSample s = task_sample_from_json(j);
  if (s.kind != TaskKind::captioning && s.kind != TaskKind::qa) {
    throw SchemaError("only captioning and qa samples are passed through, got " +
                      std::string(to_string(s.kind)));
  }
  if (normalize_text(s.prompt).empty() || normalize_text(s.target).empty()) {
    throw SchemaError("pass-through sample needs a non-empty prompt and target");
  }
  return s;
}

std::string render_history(const Episode& ep, std::size_t step_idx, int window) {
  std::size_t first = step_idx > static_cast<std::size_t>(window) ? step_idx - window : 0;
  std::string out;
  for (std::size_t i = first; i < step_idx; ++i) {
    if (!out.empty()) out += '\n';
    out += "step " + std::to_string(i + 1) + ": " + serialize_action(ep.steps[i].gold_action);
  }
  return out;
}

TaskSample format_agent_sample(const Episode& ep, std::size_t step_idx, const TemplateSet& templates,
                               const AgentFormatConfig& cfg, std::uint64_t seed) {
  if (step_idx >= ep.steps.size()) {
    throw OutOfBoundsError('s', static_cast<int>(step_idx), static_cast<int>(ep.steps.size()) - 1);
  }
  const Step& step = ep.steps[step_idx];
  TaskSample s;
  s.kind = TaskKind::agent_step;
  s.image = image_of(step.screenshot);
  s.prompt = fill_template(
      choose(templates, TaskKind::agent_step, seed),
      {{"task", ep.goal},
       {"history", render_history(ep, step_idx, cfg.history_window)},
       {"instruction", step.low_level_instruction ? *step.low_level_instruction : "none"}});
  s.target = serialize_action(step.gold_action, SerializeMode::paper);
  s.provenance = {step_id(ep, step)};
  return s;
}

}  // namespace guikit
