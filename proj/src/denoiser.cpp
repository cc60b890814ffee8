#include "guikit/denoiser.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "guikit/image.hpp"
#include "guikit/text.hpp"

namespace guikit {

std::string_view to_string(NoiseRule r) {
  switch (r) {
    case NoiseRule::invalid_bbox:
      return "invalid_bbox";
    case NoiseRule::oversized:
      return "oversized";
    case NoiseRule::tiny:
      return "tiny";
    case NoiseRule::blank:
      return "blank";
    case NoiseRule::duplicate:
      return "duplicate";
    case NoiseRule::invisible_text:
      return "invisible_text";
    case NoiseRule::episode_repeat:
      return "episode_repeat";
    case NoiseRule::episode_blank_target:
      return "episode_blank_target";
    case NoiseRule::episode_reason_mismatch:
      return "episode_reason_mismatch";
  }
  return "?";
}

int rule_number(NoiseRule r) {
  int n = static_cast<int>(r) + 1;
  return n > 6 ? 7 : n;
}

RuleMask RuleMask::all() {
  RuleMask m;
  m.on_.fill(true);
  return m;
}

RuleMask RuleMask::none() { return RuleMask{}; }

RuleMask RuleMask::parse(std::string_view spec) {
  RuleMask m;
  for (const std::string& part : split(spec, ',')) {
    const std::string t = normalize_text(part);
    if (t.empty()) continue;
    if (t.size() != 1 || t[0] < '1' || t[0] > '6') {
      throw ConfigError("rule mask entries must be numbers 1-6, got '" + t + "'");
    }
    m.on_[static_cast<std::size_t>(t[0] - '1')] = true;
  }
  return m;
}

bool RuleMask::enabled(NoiseRule r) const {
  auto i = static_cast<std::size_t>(r);
  return i < on_.size() && on_[i];
}

void RuleMask::set(NoiseRule r, bool on) {
  auto i = static_cast<std::size_t>(r);
  if (i < on_.size()) on_[i] = on;
}

// ---------------------------------------------------------------------------
// Providers

ImagePixelProvider::ImagePixelProvider(std::string base_dir) : base_dir_(std::move(base_dir)) {}

std::shared_ptr<const RgbImage> ImagePixelProvider::image(const ScreenshotMeta& screen) const {
  if (!screen.image_ref) throw IoError("screenshot '" + screen.id + "' has no image_ref");
  std::filesystem::path p(*screen.image_ref);
  if (p.is_relative() && !base_dir_.empty()) p = std::filesystem::path(base_dir_) / p;
  const std::string path = p.string();
  {
    std::lock_guard lock(mu_);
    if (cached_ && cached_path_ == path) return cached_;
  }
  auto img = std::make_shared<const RgbImage>(load_image(path));
  std::lock_guard lock(mu_);
  cached_path_ = path;
  cached_ = img;
  return img;
}

std::vector<double> ImagePixelProvider::region(const ScreenshotMeta& screen, const BBox& bbox) const {
  return grayscale_region(*image(screen), bbox);
}

CommandTextRecognizer::CommandTextRecognizer(std::string command, std::string base_dir)
    : command_(std::move(command)), images_(std::move(base_dir)) {}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string temp_region_path() {
  static std::atomic<unsigned long> counter{0};
  auto dir = std::filesystem::temp_directory_path();
  return (dir / ("guikit-ocr-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)) + ".ppm"))
      .string();
}

}  // namespace

std::string CommandTextRecognizer::recognize(const ScreenshotMeta& screen, const BBox& bbox) const {
  auto img = images_.image(screen);
  const std::string path = temp_region_path();
  write_ppm_region(*img, bbox, path);
  const std::string cmd = command_ + " " + shell_quote(path);
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(path);
    throw IoError("cannot run OCR command '" + command_ + "'");
  }
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  std::filesystem::remove(path);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw IoError("OCR command failed on region of '" + screen.id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rules

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

std::optional<NoiseRule> check_bbox(const ElementRecord& e, const ScreenshotMeta& screen) {
  if (!e.bbox.well_formed() || !screen.contains(e.bbox)) return NoiseRule::invalid_bbox;
  return std::nullopt;
}

MeasuredCheck check_oversized(const ElementRecord& e, const ScreenshotMeta& screen,
                              const DenoiseThresholds& t) {
  MeasuredCheck out;
  const std::int64_t area = e.bbox.area();
  out.value = static_cast<double>(area) / static_cast<double>(screen.area());
  // Threshold compared in millionths so 0.65 means exactly 65/100.
  const auto ppm = static_cast<std::int64_t>(std::llround(t.max_area_ratio * 1e6));
  if (area * 1'000'000 > ppm * screen.area()) out.violation = NoiseRule::oversized;
  return out;
}

MeasuredCheck check_tiny(const ElementRecord& e, const DenoiseThresholds& t) {
  MeasuredCheck out;
  const int side = std::min(e.bbox.width(), e.bbox.height());
  out.value = side;
  if (side < t.min_side_px) out.violation = NoiseRule::tiny;
  return out;
}

MeasuredCheck check_blank(const BBox& region, const ScreenshotMeta& screen,
                          const PixelProvider& pixels, const DenoiseThresholds& t) {
  MeasuredCheck out;
  std::vector<double> values;
  try {
    values = pixels.region(screen, region);
  } catch (const std::exception& e) {
    out.warning = std::string("pixel fetch failed: ") + e.what();
    return out;
  }
  if (values.size() != static_cast<std::size_t>(region.area())) {
    out.warning = "pixel provider returned a region of the wrong size";
    return out;
  }
  out.value = population_std(values);
  if (*out.value < t.min_color_std) out.violation = NoiseRule::blank;
  return out;
}

MeasuredCheck check_invisible_text(const ElementRecord& e, const ScreenshotMeta& screen,
                                   const TextRecognizer& ocr, const DenoiseThresholds& t) {
  MeasuredCheck out;
  if (!e.text || normalize_text(*e.text).empty()) return out;
  std::string recognized;
  try {
    recognized = ocr.recognize(screen, e.bbox);
  } catch (const std::exception& ex) {
    out.warning = std::string("text recognition failed: ") + ex.what();
    return out;
  }
  out.value = similarity_ratio(recognized, *e.text);
  if (*out.value < t.min_ocr_similarity) out.violation = NoiseRule::invisible_text;
  return out;
}

std::vector<bool> dedup_boxes(std::span<const ElementRecord> elements) {
  std::vector<bool> duplicate(elements.size(), false);
  std::vector<std::pair<std::array<int, 4>, std::size_t>> keyed;
  keyed.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const BBox& b = elements[i].bbox;
    keyed.push_back({{b.left, b.top, b.right, b.bottom}, i});
  }
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 1; i < keyed.size(); ++i) {
    if (keyed[i].first == keyed[i - 1].first) duplicate[keyed[i].second] = true;
  }
  return duplicate;
}

Json to_json(const DenoiseVerdict& v) {
  Json j{{"id", v.id}, {"removed", v.removed}};
  if (v.first_failing_rule) {
    j["first_failing_rule"] = std::string(to_string(*v.first_failing_rule));
  }
  if (!v.flags.empty()) {
    Json flags = Json::array();
    for (auto f : v.flags) flags.push_back(std::string(to_string(f)));
    j["flags"] = std::move(flags);
  }
  if (v.area_ratio) j["area_ratio"] = *v.area_ratio;
  if (v.min_dim_px) j["min_dim_px"] = *v.min_dim_px;
  if (v.color_std) j["color_std"] = *v.color_std;
  if (v.ocr_similarity) j["ocr_similarity"] = *v.ocr_similarity;
  if (!v.notes.empty()) j["notes"] = v.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Audit

AuditReport::AuditReport(Corpus c) : corpus(c) {
  auto init = [&](auto rules) {
    for (NoiseRule r : rules) {
      removed_by_rule[r] = 0;
      flagged_by_rule[r] = 0;
      provider_failures[r] = 0;
      skipped[r] = false;
    }
  };
  if (c == Corpus::elements) {
    init(kElementRules);
  } else {
    init(kEpisodeRules);
  }
}

void AuditReport::merge(const AuditReport& o) {
  total += o.total;
  removed += o.removed;
  for (const auto& [r, n] : o.removed_by_rule) removed_by_rule[r] += n;
  for (const auto& [r, n] : o.flagged_by_rule) flagged_by_rule[r] += n;
  for (const auto& [r, n] : o.provider_failures) provider_failures[r] += n;
  for (const auto& [r, s] : o.skipped) skipped[r] = skipped[r] || s;
}

std::string AuditReport::percent_invalid() const {
  if (total == 0) return "0.0";
  const std::int64_t tenths =
      div_round_half_up(static_cast<std::int64_t>(removed) * 1000, static_cast<std::int64_t>(total));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

Json AuditReport::to_json() const {
  Json j;
  j["corpus"] = corpus == Corpus::elements ? "elements" : "episodes";
  j["total"] = total;
  j["removed"] = removed;
  j["percent_invalid"] = percent_invalid();
  if (total == 0) j["note"] = "empty corpus: percentage has a zero denominator";
  Json rules = Json::array();
  for (const auto& [r, n] : removed_by_rule) {
    rules.push_back(Json{{"rule", rule_number(r)},
                         {"name", std::string(to_string(r))},
                         {"status", skipped.at(r) ? "skipped" : "applied"},
                         {"removed", n},
                         {"flagged", flagged_by_rule.at(r)},
                         {"provider_failures", provider_failures.at(r)}});
  }
  j["rules"] = std::move(rules);
  return j;
}

std::string AuditReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(5) << "rule" << std::setw(26) << "name" << std::setw(9) << "status"
     << std::right << std::setw(9) << "removed" << std::setw(9) << "flagged" << std::setw(10)
     << "failures" << '\n';
  for (const auto& [r, n] : removed_by_rule) {
    os << std::left << std::setw(5) << rule_number(r) << std::setw(26) << to_string(r) << std::setw(9)
       << (skipped.at(r) ? "skipped" : "applied") << std::right << std::setw(9) << n << std::setw(9)
       << flagged_by_rule.at(r) << std::setw(10) << provider_failures.at(r) << '\n';
  }
  os << (corpus == Corpus::elements ? "elements" : "steps") << ": " << total
     << ", removed: " << removed << ", invalid: " << percent_invalid() << "%";
  if (total == 0) os << " (empty corpus, zero denominator)";
  os << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Reasoning keywords

ReasoningKeywords ReasoningKeywords::parse(std::string_view text) {
  ReasoningKeywords k;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    if (normalize_text(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("keyword table line " + std::to_string(line_no) + ": expected 'phrase = action'");
    }
    std::string phrase = normalize_text(line.substr(0, eq));
    std::vector<std::string> actions;
    for (const std::string& a : split(line.substr(eq + 1), '|')) {
      std::string t = normalize_text(a);
      if (!t.empty()) actions.push_back(t);
    }
    if (phrase.empty() || actions.empty()) {
      throw ConfigError("keyword table line " + std::to_string(line_no) + " is incomplete");
    }
    k.entries_.emplace_back(std::move(phrase), std::move(actions));
  }
  return k;
}

ReasoningKeywords ReasoningKeywords::load(const std::string& path) { return parse(read_file(path)); }

std::vector<std::string> ReasoningKeywords::mentioned_actions(std::string_view reasoning) const {
  // Pad with spaces and map punctuation to spaces so phrases match on word
  // boundaries.
  std::string text = " ";
  for (unsigned char c : normalize_text(reasoning)) {
    text += std::isalnum(c) || c >= 0x80 || c == '_' ? static_cast<char>(c) : ' ';
  }
  text += ' ';
  text = " " + normalize_text(text) + " ";
  std::vector<std::string> out;
  for (const auto& [phrase, actions] : entries_) {
    if (text.find(" " + phrase + " ") == std::string::npos) continue;
    for (const auto& a : actions) {
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
  }
  return out;
}

bool ReasoningKeywords::mismatches(std::string_view reasoning, std::string_view gold_type) const {
  auto named = mentioned_actions(reasoning);
  return !named.empty() && std::find(named.begin(), named.end(), gold_type) == named.end();
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

std::string element_id(const ScreenRecord& s, const ElementRecord& e, std::size_t i) {
  return e.source_id.empty() ? s.screenshot.id + "/" + std::to_string(i) : e.source_id;
}

void remove(DenoiseVerdict& v, NoiseRule r, AuditReport& audit) {
  v.removed = true;
  v.first_failing_rule = r;
  ++audit.removed;
  ++audit.removed_by_rule[r];
}

}  // namespace

ScreenDenoiseResult denoise_screen(const ScreenRecord& screen, const DenoiseOptions& opts) {
  ScreenDenoiseResult out;
  out.cleaned.screenshot = screen.screenshot;
  AuditReport& audit = out.audit;
  const auto& t = opts.thresholds;
  const ScreenshotMeta& meta = screen.screenshot;

  const bool run_blank = opts.mask.enabled(NoiseRule::blank) && opts.pixels;
  const bool run_ocr = opts.mask.enabled(NoiseRule::invisible_text) && opts.ocr;
  for (NoiseRule r : kElementRules) audit.skipped[r] = !opts.mask.enabled(r);
  audit.skipped[NoiseRule::blank] = !run_blank;
  audit.skipped[NoiseRule::invisible_text] = !run_ocr;

  const std::size_t n = screen.elements.size();
  audit.total = n;
  out.verdicts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ElementRecord& e = screen.elements[i];
    DenoiseVerdict& v = out.verdicts[i];
    v.id = element_id(screen, e, i);
    if (opts.mask.enabled(NoiseRule::invalid_bbox)) {
      if (auto bad = check_bbox(e, meta)) {
        remove(v, *bad, audit);
        continue;
      }
    } else if (!e.bbox.well_formed()) {
      // Later rules need a positive-area box; such elements are kept as-is.
      v.notes.push_back("zero-area box not checked (rule 1 masked)");
      continue;
    }
    if (opts.mask.enabled(NoiseRule::oversized)) {
      auto c = check_oversized(e, meta, t);
      v.area_ratio = c.value;
      if (c.violation) {
        remove(v, *c.violation, audit);
        continue;
      }
    }
    if (opts.mask.enabled(NoiseRule::tiny)) {
      auto c = check_tiny(e, t);
      v.min_dim_px = c.value;
      if (c.violation) {
        remove(v, *c.violation, audit);
        continue;
      }
    }
    if (run_blank) {
      if (!screen.screenshot.contains(e.bbox)) {
        v.notes.push_back("blank check skipped: box outside screenshot");
      } else {
        auto c = check_blank(e.bbox, meta, *opts.pixels, t);
        v.color_std = c.value;
        if (c.warning) {
          v.notes.push_back(*c.warning);
          ++audit.provider_failures[NoiseRule::blank];
        }
        if (c.violation) {
          remove(v, *c.violation, audit);
          continue;
        }
      }
    }
  }

  if (opts.mask.enabled(NoiseRule::duplicate)) {
    std::vector<std::size_t> alive;
    std::vector<ElementRecord> survivors;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.verdicts[i].removed) {
        alive.push_back(i);
        survivors.push_back(screen.elements[i]);
      }
    }
    auto dup = dedup_boxes(survivors);
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (dup[k]) remove(out.verdicts[alive[k]], NoiseRule::duplicate, audit);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    DenoiseVerdict& v = out.verdicts[i];
    if (v.removed) continue;
    const ElementRecord& e = screen.elements[i];
    if (run_ocr && e.bbox.well_formed() && screen.screenshot.contains(e.bbox)) {
      auto c = check_invisible_text(e, meta, *opts.ocr, t);
      v.ocr_similarity = c.value;
      if (c.warning) {
        v.notes.push_back(*c.warning);
        ++audit.provider_failures[NoiseRule::invisible_text];
      }
      if (c.violation) {
        remove(v, *c.violation, audit);
        continue;
      }
    }
    out.cleaned.elements.push_back(e);
  }
  return out;
}

CorpusDenoiseResult denoise_elements(std::span<const ScreenRecord> corpus, const DenoiseOptions& opts) {
  CorpusDenoiseResult out;
  // Skip flags are set even for an empty corpus.
  out.audit = denoise_screen(ScreenRecord{}, opts).audit;
  for (const ScreenRecord& s : corpus) {
    auto r = denoise_screen(s, opts);
    out.cleaned.push_back(std::move(r.cleaned));
    std::move(r.verdicts.begin(), r.verdicts.end(), std::back_inserter(out.verdicts));
    out.audit.merge(r.audit);
  }
  return out;
}

EpisodeDenoiseResult denoise_episode(const Episode& e, const DenoiseOptions& opts) {
  EpisodeDenoiseResult out;
  AuditReport& audit = out.audit;
  audit.total = e.steps.size();
  audit.skipped[NoiseRule::episode_blank_target] = opts.pixels == nullptr;
  audit.skipped[NoiseRule::episode_reason_mismatch] = opts.keywords == nullptr;

  out.cleaned.id = e.id;
  out.cleaned.platform = e.platform;
  out.cleaned.goal = e.goal;

  std::string last_action;
  std::string last_screen;
  for (std::size_t i = 0; i < e.steps.size(); ++i) {
    const Step& s = e.steps[i];
    DenoiseVerdict v;
    v.id = step_id(e, s);
    const std::string serialized = serialize_action(s.gold_action);
    if (!out.cleaned.steps.empty() && serialized == last_action && s.screenshot.id == last_screen) {
      remove(v, NoiseRule::episode_repeat, audit);
      out.verdicts.push_back(std::move(v));
      continue;
    }
    last_action = serialized;
    last_screen = s.screenshot.id;

    if (opts.pixels && s.gold_bbox) {
      if (!s.gold_bbox->well_formed() || !s.screenshot.contains(*s.gold_bbox)) {
        v.notes.push_back("blank-target check skipped: gold box outside screenshot");
      } else {
        auto c = check_blank(*s.gold_bbox, s.screenshot, *opts.pixels, opts.thresholds);
        v.color_std = c.value;
        if (c.warning) {
          v.notes.push_back(*c.warning);
          ++audit.provider_failures[NoiseRule::episode_blank_target];
        }
        if (c.violation) {
          v.flags.push_back(NoiseRule::episode_blank_target);
          ++audit.flagged_by_rule[NoiseRule::episode_blank_target];
        }
      }
    }
    if (opts.keywords && s.reasoning &&
        opts.keywords->mismatches(*s.reasoning, s.gold_action.type_name())) {
      v.flags.push_back(NoiseRule::episode_reason_mismatch);
      ++audit.flagged_by_rule[NoiseRule::episode_reason_mismatch];
    }

    Step kept = s;
    kept.history_index = static_cast<int>(out.cleaned.steps.size());
    out.cleaned.steps.push_back(std::move(kept));
    out.verdicts.push_back(std::move(v));
  }
  return out;
}

}  // namespace guikit
