#include "guikit/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include "guikit/parallel.hpp"
#include "guikit/text.hpp"

namespace guikit {

void MatchPolicy::validate() const {
  if (!(radius > 0.0 && radius <= std::sqrt(2.0))) {
    throw ConfigError("match radius must lie in (0, sqrt(2)], got " + std::to_string(radius));
  }
  if (!(fuzzy_threshold >= 0.0 && fuzzy_threshold <= 100.0)) {
    throw ConfigError("fuzzy threshold must lie in [0, 100]");
  }
}

std::string_view to_string(ClickRule r) {
  return r == ClickRule::bbox_containment ? "bbox_containment" : "bbox_then_radius";
}

ClickRule parse_click_rule(std::string_view s) {
  if (s == "bbox_containment") return ClickRule::bbox_containment;
  if (s == "bbox_then_radius") return ClickRule::bbox_then_radius;
  throw ConfigError("unknown click rule '" + std::string(s) + "'");
}

std::string_view to_string(TextRule r) { return r == TextRule::fuzzy ? "fuzzy" : "exact_casefold"; }

TextRule parse_text_rule(std::string_view s) {
  if (s == "exact_casefold") return TextRule::exact_casefold;
  if (s == "fuzzy") return TextRule::fuzzy;
  throw ConfigError("unknown text rule '" + std::string(s) + "'");
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::parse_error:
      return "parse_error";
    case FailureReason::platform_mismatch:
      return "platform_mismatch";
    case FailureReason::wrong_type:
      return "wrong_type";
    case FailureReason::wrong_target:
      return "wrong_target";
    case FailureReason::wrong_direction:
      return "wrong_direction";
    case FailureReason::wrong_distance:
      return "wrong_distance";
    case FailureReason::wrong_text:
      return "wrong_text";
    case FailureReason::wrong_status:
      return "wrong_status";
    case FailureReason::wrong_answer:
      return "wrong_answer";
    case FailureReason::wrong_tab:
      return "wrong_tab";
  }
  return "?";
}

Prediction make_prediction(std::string step_id, std::string raw, Platform platform) {
  Prediction p;
  p.step_id = std::move(step_id);
  p.raw = std::move(raw);
  std::string_view obj = extract_action_object(p.raw);
  if (obj.empty()) {
    p.parse_error = "no action object in output";
    return p;
  }
  try {
    p.parsed = parse_action(obj, platform);
  } catch (const ActionParseError& e) {
    p.parse_error = e.what();
  }
  return p;
}

bool text_matches(std::string_view pred, std::string_view gold, const MatchPolicy& policy) {
  if (policy.text_rule == TextRule::fuzzy) {
    return similarity_ratio(pred, gold) >= policy.fuzzy_threshold;
  }
  return normalize_text(pred) == normalize_text(gold);
}

namespace {

double unit_distance(NormPoint a, NormPoint b) {
  const double dx = (a.x - b.x) / static_cast<double>(NormPoint::kScale);
  const double dy = (a.y - b.y) / static_cast<double>(NormPoint::kScale);
  return std::hypot(dx, dy);
}

// Containment of the unrounded pixel position p * size / 1000, compared in
// integers so the verdict does not change when screen and box scale together.
bool norm_point_in_bbox(NormPoint p, const BBox& b, const ScreenshotMeta& s) {
  const std::int64_t x = std::int64_t{p.x} * s.width_px;
  const std::int64_t y = std::int64_t{p.y} * s.height_px;
  const std::int64_t k = NormPoint::kScale;
  return k * b.left <= x && x <= k * b.right && k * b.top <= y && y <= k * b.bottom;
}

template <class T>
constexpr bool kTargeted = std::is_same_v<T, act::Click> || std::is_same_v<T, act::LongPress> ||
                           std::is_same_v<T, act::RightClick> || std::is_same_v<T, act::DoubleClick>;

template <class T>
constexpr bool kNoArg =
    std::is_same_v<T, act::Enter> || std::is_same_v<T, act::NavigateBack> ||
    std::is_same_v<T, act::NavigateHome> || std::is_same_v<T, act::NavigateRecent> ||
    std::is_same_v<T, act::NavigateForward> || std::is_same_v<T, act::Wait> ||
    std::is_same_v<T, act::NewTab> || std::is_same_v<T, act::CloseTab>;

std::string_view text_arg(const act::InputText& a) { return a.text; }
std::string_view text_arg(const act::GoTo& a) { return a.url; }
std::string_view text_arg(const act::SearchGoogle& a) { return a.query; }
std::string_view text_arg(const act::PressKey& a) { return a.key; }
std::string_view text_arg(const act::Hotkey& a) { return a.key_comb; }

template <class T>
constexpr bool kTextual = std::is_same_v<T, act::InputText> || std::is_same_v<T, act::GoTo> ||
                          std::is_same_v<T, act::SearchGoogle> || std::is_same_v<T, act::PressKey> ||
                          std::is_same_v<T, act::Hotkey>;

// Argument comparison for two actions of the same type T; returns the failure
// reason or nullopt on match.
template <class T>
std::optional<FailureReason> compare_args(const T& p, const T& g, const Step& gold,
                                          const MatchPolicy& policy) {
  if constexpr (kTargeted<T>) {
    if (gold.gold_bbox) {
      if (norm_point_in_bbox(p.target, *gold.gold_bbox, gold.screenshot)) return std::nullopt;
      return FailureReason::wrong_target;
    }
    if (policy.click_rule == ClickRule::bbox_then_radius) {
      if (unit_distance(p.target, g.target) <= policy.radius) return std::nullopt;
    } else if (p.target == g.target) {
      return std::nullopt;
    }
    return FailureReason::wrong_target;
  } else if constexpr (std::is_same_v<T, act::Swipe> || std::is_same_v<T, act::Scroll>) {
    if (p.direction != g.direction) return FailureReason::wrong_direction;
    if (policy.compare_swipe_distance && p.distance != g.distance) {
      return FailureReason::wrong_distance;
    }
    return std::nullopt;
  } else if constexpr (std::is_same_v<T, act::Drag> || std::is_same_v<T, act::MoveTo>) {
    if (unit_distance(p.start, g.start) <= policy.radius &&
        unit_distance(p.end, g.end) <= policy.radius) {
      return std::nullopt;
    }
    return FailureReason::wrong_target;
  } else if constexpr (kTextual<T>) {
    if (text_matches(text_arg(p), text_arg(g), policy)) return std::nullopt;
    return FailureReason::wrong_text;
  } else if constexpr (std::is_same_v<T, act::Status>) {
    if (p.goal_status != g.goal_status) return FailureReason::wrong_status;
    if (policy.compare_answer && !text_matches(p.answer, g.answer, policy)) {
      return FailureReason::wrong_answer;
    }
    return std::nullopt;
  } else if constexpr (std::is_same_v<T, act::SwitchTab>) {
    if (p.tab != g.tab) return FailureReason::wrong_tab;
    return std::nullopt;
  } else {
    static_assert(kNoArg<T>, "every action variant needs an argument rule");
    return std::nullopt;
  }
}

}  // namespace

StepOutcome match_step(const UnifiedAction& pred, const Step& gold, const MatchPolicy& policy) {
  StepOutcome out;
  out.action_type = std::string(gold.gold_action.type_name());
  if (pred.platform() != gold.gold_action.platform()) {
    out.failure_reason = FailureReason::platform_mismatch;
    return out;
  }
  out.type_correct = pred.type_name() == gold.gold_action.type_name();
  if (!out.type_correct) {
    out.failure_reason = FailureReason::wrong_type;
    return out;
  }
  out.failure_reason = pred.visit([&](const auto& p) -> std::optional<FailureReason> {
    using T = std::decay_t<decltype(p)>;
    const T* g = gold.gold_action.get_if<T>();
    return compare_args(p, *g, gold, policy);
  });
  out.args_correct = !out.failure_reason.has_value();
  return out;
}

StepOutcome match_prediction(const Prediction& pred, const Step& gold, const MatchPolicy& policy) {
  if (!pred.parsed) {
    StepOutcome out;
    out.action_type = std::string(gold.gold_action.type_name());
    out.failure_reason = FailureReason::parse_error;
    return out;
  }
  return match_step(*pred.parsed, gold, policy);
}

double grounding_accuracy(std::span<const PixelPoint> preds, std::span<const BBox> gts) {
  if (preds.size() != gts.size()) {
    throw SchemaError("grounding accuracy needs one prediction per box: " +
                      std::to_string(preds.size()) + " vs " + std::to_string(gts.size()));
  }
  if (preds.empty()) throw SchemaError("grounding accuracy of an empty set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += point_in_bbox(preds[i], gts[i]) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<std::string> f1_tokens(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '{':
      case '}':
      case ',':
      case '"':
      case '(':
      case ')':
      case ':':
        cleaned += ' ';
        break;
      default:
        cleaned += c;
    }
  }
  std::vector<std::string> out;
  std::istringstream in(normalize_text(cleaned));
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double op_f1(std::string_view pred, std::string_view gold) {
  auto p = f1_tokens(pred);
  auto g = f1_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  std::vector<std::string> common;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
  if (common.empty()) return 0.0;
  const double precision = static_cast<double>(common.size()) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common.size()) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Report

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

bool is_click_subset(std::string_view type) { return is_localization_action(type); }

}  // namespace

double MetricsReport::step_sr() const { return percent(successes, total); }
double MetricsReport::type_acc() const { return percent(type_correct, total); }
double MetricsReport::click_acc() const { return percent(click_success, click_total); }
double MetricsReport::op_f1_mean() const {
  return total == 0 ? 0.0 : 100.0 * op_f1_sum / static_cast<double>(total);
}
std::optional<double> MetricsReport::grounding_acc() const {
  if (grounding_total == 0) return std::nullopt;
  return percent(grounding_hits, grounding_total);
}

void MetricsReport::add(const StepOutcome& o, double f1) {
  ++total;
  if (o.success()) ++successes;
  if (o.type_correct) ++type_correct;
  if (is_click_subset(o.action_type)) {
    ++click_total;
    if (o.success()) ++click_success;
  }
  if (o.failure_reason == FailureReason::parse_error) ++parse_errors;
  if (o.failure_reason) ++failures[std::string(to_string(*o.failure_reason))];
  op_f1_sum += f1;
  TypeRow& row = per_type[o.action_type];
  ++row.total;
  if (o.type_correct) ++row.type_correct;
  if (o.success()) ++row.success;
}

void MetricsReport::merge(const MetricsReport& o) {
  total += o.total;
  successes += o.successes;
  type_correct += o.type_correct;
  click_total += o.click_total;
  click_success += o.click_success;
  parse_errors += o.parse_errors;
  op_f1_sum += o.op_f1_sum;
  grounding_total += o.grounding_total;
  grounding_hits += o.grounding_hits;
  for (const auto& [k, row] : o.per_type) {
    TypeRow& r = per_type[k];
    r.total += row.total;
    r.type_correct += row.type_correct;
    r.success += row.success;
  }
  for (const auto& [k, n] : o.failures) failures[k] += n;
}

std::string format_percent(double p) {
  // Round half-up on the tenths; the small nudge absorbs binary error in
  // values like 0.15 * 100.
  const auto tenths = static_cast<long long>(std::floor(p * 10.0 + 0.5 + 1e-9));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

PredictionMismatchError::PredictionMismatchError(std::vector<std::string> missing,
                                                 std::vector<std::string> duplicate,
                                                 std::vector<std::string> unknown)
    : Error([&] {
        std::string msg = "predictions do not match gold steps:";
        auto list = [&](const char* label, const std::vector<std::string>& ids) {
          if (ids.empty()) return;
          msg += std::string(" ") + label + " [";
          for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += (i ? ", " : "") + ids[i];
          if (ids.size() > 20) msg += ", ... " + std::to_string(ids.size() - 20) + " more";
          msg += "]";
        };
        list("missing", missing);
        list("duplicate", duplicate);
        list("unknown", unknown);
        return msg;
      }()),
      missing_(std::move(missing)),
      duplicate_(std::move(duplicate)),
      unknown_(std::move(unknown)) {}

MetricsReport step_sr(std::span<const Episode> episodes, std::span<const Prediction> predictions,
                      const MatchPolicy& policy, unsigned jobs) {
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(predictions.size());
  std::vector<std::string> duplicate;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!by_id.emplace(predictions[i].step_id, i).second) duplicate.push_back(predictions[i].step_id);
  }

  struct Job {
    const Step* step;
    const Prediction* pred;
  };
  std::vector<Job> work;
  std::vector<std::string> missing;
  std::vector<bool> used(predictions.size(), false);
  for (const Episode& e : episodes) {
    for (const Step& s : e.steps) {
      const std::string id = step_id(e, s);
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        missing.push_back(id);
        continue;
      }
      used[it->second] = true;
      work.push_back({&s, &predictions[it->second]});
    }
  }
  std::vector<std::string> unknown;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!used[i] && by_id.at(predictions[i].step_id) == i) unknown.push_back(predictions[i].step_id);
  }
  if (!missing.empty() || !duplicate.empty() || !unknown.empty()) {
    throw PredictionMismatchError(std::move(missing), std::move(duplicate), std::move(unknown));
  }

  auto scored = parallel_map(
      work,
      [&](const Job& j, std::size_t) {
        StepOutcome o = match_prediction(*j.pred, *j.step, policy);
        const std::string pred_str =
            j.pred->parsed ? serialize_action(*j.pred->parsed) : j.pred->raw;
        return std::pair(o, op_f1(pred_str, serialize_action(j.step->gold_action)));
      },
      jobs);
  MetricsReport r;
  for (const auto& [o, f1] : scored) r.add(o, f1);
  return r;
}

namespace {

Json rounded(double p) { return std::stod(format_percent(p)); }

}  // namespace

Json report_to_json(const MetricsReport& r) {
  Json j;
  j["split"] = r.split;
  j["step_sr"] = rounded(r.step_sr());
  j["type_acc"] = rounded(r.type_acc());
  j["click_acc"] = rounded(r.click_acc());
  j["op_f1"] = rounded(r.op_f1_mean());
  if (auto g = r.grounding_acc()) j["grounding_acc"] = rounded(*g);
  j["op_f1_tokenization"] = "full serialized action";
  Json counts{{"total", r.total},
              {"successes", r.successes},
              {"type_correct", r.type_correct},
              {"click_total", r.click_total},
              {"click_success", r.click_success},
              {"parse_errors", r.parse_errors},
              {"op_f1_sum", r.op_f1_sum},
              {"grounding_total", r.grounding_total},
              {"grounding_hits", r.grounding_hits}};
  j["counts"] = std::move(counts);
  Json types = Json::array();
  for (const auto& [name, row] : r.per_type) {
    types.push_back(Json{{"action_type", name},
                         {"total", row.total},
                         {"type_correct", row.type_correct},
                         {"success", row.success},
                         {"type_acc", rounded(percent(row.type_correct, row.total))},
                         {"step_sr", rounded(percent(row.success, row.total))}});
  }
  j["per_type"] = std::move(types);
  j["failures"] = r.failures;
  return j;
}

MetricsReport report_from_json(const Json& j) {
  try {
    MetricsReport r;
    r.split = j.at("split").get<std::string>();
    const Json& c = j.at("counts");
    r.total = c.at("total").get<std::size_t>();
    r.successes = c.at("successes").get<std::size_t>();
    r.type_correct = c.at("type_correct").get<std::size_t>();
    r.click_total = c.at("click_total").get<std::size_t>();
    r.click_success = c.at("click_success").get<std::size_t>();
    r.parse_errors = c.at("parse_errors").get<std::size_t>();
    r.op_f1_sum = c.at("op_f1_sum").get<double>();
    r.grounding_total = c.at("grounding_total").get<std::size_t>();
    r.grounding_hits = c.at("grounding_hits").get<std::size_t>();
    for (const Json& t : j.at("per_type")) {
      TypeRow row{t.at("total").get<std::size_t>(), t.at("type_correct").get<std::size_t>(),
                  t.at("success").get<std::size_t>()};
      r.per_type[t.at("action_type").get<std::string>()] = row;
    }
    for (const auto& [k, v] : j.at("failures").items()) r.failures[k] = v.get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed metrics report: ") + e.what());
  }
}

std::string emit_report(const MetricsReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return report_to_json(r).dump(2) + "\n";
  std::ostringstream os;
  os << "| split | steps | step_sr | type_acc | click_acc | op_f1 | grounding_acc |\n"
     << "|---|---:|---:|---:|---:|---:|---:|\n";
  auto g = r.grounding_acc();
  os << "| " << r.split << " | " << r.total << " | " << format_percent(r.step_sr()) << " | "
     << format_percent(r.type_acc()) << " | " << format_percent(r.click_acc()) << " | "
     << format_percent(r.op_f1_mean()) << " | " << (g ? format_percent(*g) : "-") << " |\n\n";
  os << "| action_type | steps | type_acc | step_sr |\n|---|---:|---:|---:|\n";
  for (const auto& [name, row] : r.per_type) {
    os << "| " << name << " | " << row.total << " | "
       << format_percent(percent(row.type_correct, row.total)) << " | "
       << format_percent(percent(row.success, row.total)) << " |\n";
  }
  return os.str();
}

}  // namespace guikit
