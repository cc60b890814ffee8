#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guikit/core_model.hpp"
#include "guikit/episode.hpp"
#include "guikit/image.hpp"
#include "guikit/json_io.hpp"

namespace guikit {

// Element rules 1-6 in the order they are applied, then the episode checks.
enum class NoiseRule {
  invalid_bbox,
  oversized,
  tiny,
  blank,
  duplicate,
  invisible_text,
  episode_repeat,
  episode_blank_target,
  episode_reason_mismatch,
};

inline constexpr std::array kElementRules{NoiseRule::invalid_bbox, NoiseRule::oversized,
                                          NoiseRule::tiny,         NoiseRule::blank,
                                          NoiseRule::duplicate,    NoiseRule::invisible_text};
inline constexpr std::array kEpisodeRules{NoiseRule::episode_repeat, NoiseRule::episode_blank_target,
                                          NoiseRule::episode_reason_mismatch};

std::string_view to_string(NoiseRule r);
// 1-6 for element rules, 7 for the episode checks.
int rule_number(NoiseRule r);

struct DenoiseThresholds {
  double max_area_ratio = 0.65;  // removed when strictly greater
  int min_side_px = 18;          // removed when the shorter side is strictly less
  double min_color_std = 5.0;    // removed when strictly less
  double min_ocr_similarity = 22.0;
};

// Which of element rules 1-6 run.
class RuleMask {
 public:
  static RuleMask all();
  static RuleMask none();
  // Comma-separated rule numbers, e.g. "1,2,3,5". Throws ConfigError.
  static RuleMask parse(std::string_view spec);

  bool enabled(NoiseRule r) const;
  void set(NoiseRule r, bool on);

 private:
  std::array<bool, 6> on_{};
};

// Grayscale intensities of a screenshot region. Throws on fetch failure; the
// returned vector has bbox.width() * bbox.height() entries, row-major.
class PixelProvider {
 public:
  virtual ~PixelProvider() = default;
  virtual std::vector<double> region(const ScreenshotMeta& screen, const BBox& bbox) const = 0;
};

// Recognized text in a screenshot region. Throws on recognizer failure.
class TextRecognizer {
 public:
  virtual ~TextRecognizer() = default;
  virtual std::string recognize(const ScreenshotMeta& screen, const BBox& bbox) const = 0;
};

// Reads screenshots from image_ref (resolved against base_dir) and converts to
// BT.601 luma. Keeps the most recently used image cached.
class ImagePixelProvider : public PixelProvider {
 public:
  explicit ImagePixelProvider(std::string base_dir = {});
  std::vector<double> region(const ScreenshotMeta& screen, const BBox& bbox) const override;

  std::shared_ptr<const RgbImage> image(const ScreenshotMeta& screen) const;

 private:
  std::string base_dir_;
  mutable std::mutex mu_;
  mutable std::string cached_path_;
  mutable std::shared_ptr<const RgbImage> cached_;
};

// Runs `<command> <region.ppm>` and takes its standard output (UTF-8) as the
// recognized text. A nonzero exit status is a failure.
class CommandTextRecognizer : public TextRecognizer {
 public:
  CommandTextRecognizer(std::string command, std::string base_dir = {});
  std::string recognize(const ScreenshotMeta& screen, const BBox& bbox) const override;

 private:
  std::string command_;
  ImagePixelProvider images_;
};

// Population standard deviation, two-pass.
double population_std(std::span<const double> values);

struct MeasuredCheck {
  std::optional<NoiseRule> violation;
  std::optional<double> value;
  // Set when the provider failed; the element is kept.
  std::optional<std::string> warning;
};

std::optional<NoiseRule> check_bbox(const ElementRecord& e, const ScreenshotMeta& screen);
MeasuredCheck check_oversized(const ElementRecord& e, const ScreenshotMeta& screen,
                              const DenoiseThresholds& t = {});
MeasuredCheck check_tiny(const ElementRecord& e, const DenoiseThresholds& t = {});
MeasuredCheck check_blank(const BBox& region, const ScreenshotMeta& screen,
                          const PixelProvider& pixels, const DenoiseThresholds& t = {});
// Not applicable (no violation, no value) when the element has no text.
MeasuredCheck check_invisible_text(const ElementRecord& e, const ScreenshotMeta& screen,
                                   const TextRecognizer& ocr, const DenoiseThresholds& t = {});
// Marks every element whose box equals an earlier element's box.
std::vector<bool> dedup_boxes(std::span<const ElementRecord> elements);

struct DenoiseVerdict {
  std::string id;
  bool removed = false;
  std::optional<NoiseRule> first_failing_rule;
  std::vector<NoiseRule> flags;  // reported, not removed
  std::optional<double> area_ratio;
  std::optional<double> min_dim_px;
  std::optional<double> color_std;
  std::optional<double> ocr_similarity;
  std::vector<std::string> notes;
};

Json to_json(const DenoiseVerdict& v);

struct AuditReport {
  enum class Corpus { elements, episodes };

  Corpus corpus = Corpus::elements;
  std::size_t total = 0;
  std::size_t removed = 0;
  std::map<NoiseRule, std::size_t> removed_by_rule;
  std::map<NoiseRule, std::size_t> flagged_by_rule;
  std::map<NoiseRule, std::size_t> provider_failures;
  std::map<NoiseRule, bool> skipped;  // rule did not run at all

  explicit AuditReport(Corpus c = Corpus::elements);
  void merge(const AuditReport& other);
  // removed / total * 100 with one decimal, half-up. "0.0" for an empty corpus.
  std::string percent_invalid() const;
  Json to_json() const;
  std::string to_table() const;
};

// Loaded from data/reasoning_keywords.txt: `phrase = action_type[|action_type]`.
class ReasoningKeywords {
 public:
  static ReasoningKeywords load(const std::string& path);
  static ReasoningKeywords parse(std::string_view text);

  // Action types named by the reasoning text.
  std::vector<std::string> mentioned_actions(std::string_view reasoning) const;
  // True when the text names at least one action and none equals gold_type.
  bool mismatches(std::string_view reasoning, std::string_view gold_type) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
};

struct DenoiseOptions {
  RuleMask mask = RuleMask::all();
  DenoiseThresholds thresholds;
  const PixelProvider* pixels = nullptr;
  const TextRecognizer* ocr = nullptr;
  const ReasoningKeywords* keywords = nullptr;
};

struct ScreenDenoiseResult {
  ScreenRecord cleaned;
  std::vector<DenoiseVerdict> verdicts;
  AuditReport audit{AuditReport::Corpus::elements};
};

// Applies rules 1-6 in order; an element removed by one rule is not examined
// by later rules. Duplicates are resolved among the survivors of rules 1-4.
ScreenDenoiseResult denoise_screen(const ScreenRecord& screen, const DenoiseOptions& opts);

struct CorpusDenoiseResult {
  std::vector<ScreenRecord> cleaned;
  std::vector<DenoiseVerdict> verdicts;
  AuditReport audit{AuditReport::Corpus::elements};
};

CorpusDenoiseResult denoise_elements(std::span<const ScreenRecord> corpus, const DenoiseOptions& opts);

struct EpisodeDenoiseResult {
  Episode cleaned;
  std::vector<DenoiseVerdict> verdicts;
  AuditReport audit{AuditReport::Corpus::episodes};
};

// Collapses consecutive repeats (same serialized gold action on the same
// screenshot) and flags blank gold targets and reasoning/action mismatches.
EpisodeDenoiseResult denoise_episode(const Episode& e, const DenoiseOptions& opts);

}  // namespace guikit
