#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guikit/action_space.hpp"
#include "guikit/core_model.hpp"
#include "guikit/episode.hpp"
#include "guikit/error.hpp"
#include "guikit/json_io.hpp"

namespace guikit {

enum class ClickRule { bbox_containment, bbox_then_radius };
enum class TextRule { exact_casefold, fuzzy };

struct MatchPolicy {
  ClickRule click_rule = ClickRule::bbox_then_radius;
  // Distance in the unit square.
  double radius = 0.14;
  TextRule text_rule = TextRule::exact_casefold;
  // similarity_ratio() at or above which fuzzy text matches.
  double fuzzy_threshold = 80.0;
  bool compare_swipe_distance = false;
  bool compare_answer = true;

  // Throws ConfigError unless 0 < radius <= sqrt(2) and the fuzzy threshold
  // lies in [0, 100].
  void validate() const;
};

std::string_view to_string(ClickRule r);
ClickRule parse_click_rule(std::string_view s);
std::string_view to_string(TextRule r);
TextRule parse_text_rule(std::string_view s);

enum class FailureReason {
  parse_error,
  platform_mismatch,
  wrong_type,
  wrong_target,
  wrong_direction,
  wrong_distance,
  wrong_text,
  wrong_status,
  wrong_answer,
  wrong_tab,
};

std::string_view to_string(FailureReason r);

struct StepOutcome {
  bool type_correct = false;
  bool args_correct = false;
  std::string action_type;  // of the gold action
  std::optional<FailureReason> failure_reason;

  bool success() const noexcept { return type_correct && args_correct; }
};

struct Prediction {
  std::string step_id;
  std::string raw;
  std::optional<UnifiedAction> parsed;
  std::optional<std::string> parse_error;
};

// Extracts the first {...} object from free-form model output and parses it.
// Never throws on bad output: the failure lands in parse_error.
Prediction make_prediction(std::string step_id, std::string raw, Platform platform);

// Text equality under the policy: trimmed and casefolded, or fuzzy.
bool text_matches(std::string_view pred, std::string_view gold, const MatchPolicy& policy);

StepOutcome match_step(const UnifiedAction& pred, const Step& gold, const MatchPolicy& policy);
StepOutcome match_prediction(const Prediction& pred, const Step& gold, const MatchPolicy& policy);

// Percentage of points inside their box (edges inclusive). Throws
// SchemaError on length mismatch or empty input.
double grounding_accuracy(std::span<const PixelPoint> preds, std::span<const BBox> gts);

std::vector<std::string> f1_tokens(std::string_view s);
// Token-multiset F1 in [0, 1]; 1 when both sides are empty.
double op_f1(std::string_view pred, std::string_view gold);

struct TypeRow {
  std::size_t total = 0;
  std::size_t type_correct = 0;
  std::size_t success = 0;
  friend bool operator==(const TypeRow&, const TypeRow&) = default;
};

// Counts are stored; percentages are derived from them and rounded to one
// decimal only when emitted.
struct MetricsReport {
  std::string split = "all";
  std::size_t total = 0;
  std::size_t successes = 0;
  std::size_t type_correct = 0;
  std::size_t click_total = 0;
  std::size_t click_success = 0;
  std::size_t parse_errors = 0;
  double op_f1_sum = 0.0;
  std::size_t grounding_total = 0;
  std::size_t grounding_hits = 0;
  std::map<std::string, TypeRow> per_type;
  std::map<std::string, std::size_t> failures;

  double step_sr() const;
  double type_acc() const;
  double click_acc() const;
  double op_f1_mean() const;  // percent
  std::optional<double> grounding_acc() const;

  void add(const StepOutcome& o, double f1);
  void merge(const MetricsReport& o);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// One decimal, half-up: 66.666.. -> "66.7".
std::string format_percent(double percent);

class PredictionMismatchError : public Error {
 public:
  PredictionMismatchError(std::vector<std::string> missing, std::vector<std::string> duplicate,
                          std::vector<std::string> unknown);
  const std::vector<std::string>& missing() const noexcept { return missing_; }
  const std::vector<std::string>& duplicate() const noexcept { return duplicate_; }
  const std::vector<std::string>& unknown() const noexcept { return unknown_; }

 private:
  std::vector<std::string> missing_, duplicate_, unknown_;
};

// Every step must have exactly one prediction and every prediction a step;
// otherwise throws PredictionMismatchError.
MetricsReport step_sr(std::span<const Episode> episodes, std::span<const Prediction> predictions,
                      const MatchPolicy& policy, unsigned jobs = 1);

enum class ReportFormat { json, markdown };

Json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const Json& j);
std::string emit_report(const MetricsReport& r, ReportFormat format);

}  // namespace guikit
