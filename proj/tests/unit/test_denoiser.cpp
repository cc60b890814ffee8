#include <cmath>

#include "doctest.h"
#include "guikit/denoiser.hpp"
#include "../support.hpp"
#include "../synthetic.hpp"

using namespace guikit;
using namespace guikit::test;

namespace {

// Reference std for the oracle: sqrt(mean(x^2) - mean(x)^2) in long double.
double naive_std(const std::vector<double>& v) {
  long double s = 0, s2 = 0;
  for (double x : v) {
    s += x;
    s2 += static_cast<long double>(x) * x;
  }
  const long double m = s / v.size();
  return static_cast<double>(std::sqrt(std::max<long double>(0, s2 / v.size() - m * m)));
}

}  // namespace

TEST_SUITE("denoiser") {
  TEST_CASE("rule masks") {
    RuleMask m = RuleMask::parse("1,2,3,5");
    CHECK(m.enabled(NoiseRule::invalid_bbox));
    CHECK(m.enabled(NoiseRule::duplicate));
    CHECK_FALSE(m.enabled(NoiseRule::blank));
    CHECK_FALSE(m.enabled(NoiseRule::invisible_text));
    CHECK(RuleMask::parse(" 6 ").enabled(NoiseRule::invisible_text));
    CHECK_THROWS_AS(RuleMask::parse("7"), ConfigError);
    CHECK_THROWS_AS(RuleMask::parse("1,x"), ConfigError);
    CHECK_FALSE(RuleMask::parse("").enabled(NoiseRule::invalid_bbox));
    CHECK(rule_number(NoiseRule::episode_repeat) == 7);
    CHECK(rule_number(NoiseRule::tiny) == 3);
  }

  TEST_CASE("population std matches a naive oracle") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> v(static_cast<std::size_t>(uniform(rng, 1, 300)));
      for (double& x : v) x = uniform(rng, 0, 255);
      CHECK(population_std(v) == doctest::Approx(naive_std(v)).epsilon(1e-9));
    }
    CHECK(population_std(std::vector<double>{7, 7, 7}) == 0.0);
  }

  TEST_CASE("threshold boundaries") {
    ScreenshotMeta s = screen("s", 1000, 1000);
    CHECK_FALSE(check_oversized(element({0, 0, 650, 1000}), s).violation);
    CHECK(check_oversized(element({0, 0, 651, 1000}), s).violation == NoiseRule::oversized);
    CHECK(check_tiny(element({0, 0, 18, 200})).violation == std::nullopt);
    CHECK(check_tiny(element({0, 0, 200, 17})).violation == NoiseRule::tiny);

    FakePixels px;
    BBox b{0, 0, 20, 20};
    px.stds[key(s, b)] = 5.0;
    CHECK_FALSE(check_blank(b, s, px).violation);
    px.stds[key(s, b)] = 4.99;
    CHECK(check_blank(b, s, px).violation == NoiseRule::blank);
    px.fail = true;
    auto failed = check_blank(b, s, px);
    CHECK_FALSE(failed.violation);
    CHECK(failed.warning);
  }

  TEST_CASE("bbox validity") {
    ScreenshotMeta s = screen("s", 100, 200);
    CHECK_FALSE(check_bbox(element({0, 0, 100, 200}), s));
    CHECK(check_bbox(element({-1, 0, 50, 50}), s));
    CHECK(check_bbox(element({0, 0, 101, 50}), s));
    CHECK(check_bbox(element({10, 10, 10, 50}), s));
    CHECK(check_bbox(element({10, 50, 20, 40}), s));
  }

  TEST_CASE("invisible text needs text and uses similarity") {
    ScreenshotMeta s = screen("s", 100, 100);
    FakeOcr ocr;
    ocr.fallback = "settings";
    ElementRecord e = element({0, 0, 50, 50});
    auto none = check_invisible_text(e, s, ocr);
    CHECK_FALSE(none.violation);
    CHECK_FALSE(none.value);
    e.text = "Settings";
    CHECK_FALSE(check_invisible_text(e, s, ocr).violation);
    ocr.fallback = "#@&";
    CHECK(check_invisible_text(e, s, ocr).violation == NoiseRule::invisible_text);
  }

  TEST_CASE("dedup keeps the first of equal boxes") {
    std::vector<ElementRecord> es{element({0, 0, 20, 20}), element({1, 1, 30, 30}), element({0, 0, 20, 20}),
                                  element({1, 1, 30, 30}), element({0, 0, 20, 20})};
    CHECK(dedup_boxes(es) == std::vector<bool>{false, false, true, true, true});
  }

  TEST_CASE("rules apply in order and the first failure wins") {
    ScreenRecord r;
    r.screenshot = screen("s", 1000, 1000);
    r.elements = {element({-5, 0, 10, 10}, "a"),     element({0, 0, 900, 900}, "b"),
                  element({0, 0, 10, 100}, "c"),     element({100, 100, 200, 200}, "d"),
                  element({100, 100, 200, 200}, "e"), element({300, 300, 400, 400}, "f")};
    FakePixels px;
    px.stds[key(r.screenshot, {300, 300, 400, 400})] = 1.0;
    DenoiseOptions o;
    o.pixels = &px;
    auto res = denoise_screen(r, o);
    REQUIRE(res.verdicts.size() == 6);
    CHECK(res.verdicts[0].first_failing_rule == NoiseRule::invalid_bbox);
    CHECK(res.verdicts[1].first_failing_rule == NoiseRule::oversized);
    CHECK(res.verdicts[2].first_failing_rule == NoiseRule::tiny);
    CHECK_FALSE(res.verdicts[3].removed);
    CHECK(res.verdicts[4].first_failing_rule == NoiseRule::duplicate);
    CHECK(res.verdicts[5].first_failing_rule == NoiseRule::blank);
    REQUIRE(res.cleaned.elements.size() == 1);
    CHECK(res.cleaned.elements[0].source_id == "d");
    CHECK(res.audit.removed == 5);
    CHECK(res.audit.percent_invalid() == "83.3");
    CHECK(res.audit.skipped.at(NoiseRule::invisible_text));
  }

  TEST_CASE("masked rule 1 keeps malformed boxes with a note") {
    ScreenRecord r;
    r.screenshot = screen("s", 100, 100);
    r.elements = {element({50, 50, 40, 60})};
    DenoiseOptions o;
    o.mask = RuleMask::parse("2,3,4,5,6");
    auto res = denoise_screen(r, o);
    CHECK(res.cleaned.elements.size() == 1);
    CHECK_FALSE(res.verdicts[0].notes.empty());
  }

  TEST_CASE("audit percent rounds half up and handles empty input") {
    AuditReport a;
    CHECK(a.percent_invalid() == "0.0");
    a.total = 2000;
    a.removed = 1;  // 0.05
    CHECK(a.percent_invalid() == "0.1");
    a.removed = 580;
    CHECK(a.percent_invalid() == "29.0");
    a.total = 3;
    a.removed = 1;
    CHECK(a.percent_invalid() == "33.3");
    CHECK(a.to_table().find("invalid: 33.3%") != std::string::npos);
    Json j = a.to_json();
    CHECK(j["percent_invalid"] == "33.3");
    CHECK(j["rules"].size() == 6);
  }

  TEST_CASE("audit merge sums counts") {
    AuditReport a, b;
    a.total = 10;
    a.removed = 2;
    a.removed_by_rule[NoiseRule::tiny] = 2;
    b.total = 5;
    b.removed = 1;
    b.removed_by_rule[NoiseRule::tiny] = 1;
    a.merge(b);
    CHECK(a.total == 15);
    CHECK(a.removed == 3);
    CHECK(a.removed_by_rule[NoiseRule::tiny] == 3);
  }

  TEST_CASE("reasoning keywords") {
    auto k = ReasoningKeywords::parse("# comment\nclick = click|double_click\nscroll = swipe|scroll\n"
                                      "go back = navigate_back\n");
    CHECK(k.mentioned_actions("I will click the button.") == std::vector<std::string>{"click", "double_click"});
    CHECK(k.mentioned_actions("Now go back, then scroll") ==
          std::vector<std::string>{"swipe", "scroll", "navigate_back"});
    CHECK(k.mentioned_actions("clicking is not a whole word").empty());
    CHECK(k.mismatches("I should scroll down", "click"));
    CHECK_FALSE(k.mismatches("I should scroll down", "swipe"));
    CHECK_FALSE(k.mismatches("nothing relevant here", "click"));
    CHECK_THROWS_AS(ReasoningKeywords::parse("no equals sign"), ConfigError);
    CHECK_NOTHROW(ReasoningKeywords::load(GUIKIT_DATA_DIR "/reasoning_keywords.txt"));
  }

  TEST_CASE("episode repeats are collapsed and steps reindexed") {
    Episode e;
    e.id = "e";
    for (int i = 0; i < 5; ++i) {
      Step s;
      s.screenshot = screen(i == 2 ? "s1" : "s" + std::to_string(i), 100, 100);
      s.gold_action = UnifiedAction(MobileAction{act::NavigateBack{}});
      s.history_index = i;
      e.steps.push_back(s);
    }
    // steps 1 and 2 share screen s1 and action
    auto res = denoise_episode(e, DenoiseOptions{});
    CHECK(res.cleaned.steps.size() == 4);
    CHECK(res.verdicts[2].first_failing_rule == NoiseRule::episode_repeat);
    for (std::size_t i = 0; i < res.cleaned.steps.size(); ++i) CHECK(res.cleaned.steps[i].history_index == int(i));
    CHECK(res.audit.percent_invalid() == "20.0");
  }

  TEST_CASE("episode flags do not remove steps") {
    Episode e;
    e.id = "e";
    Step s;
    s.screenshot = screen("a", 100, 100);
    s.gold_action = UnifiedAction(MobileAction{act::Click{{100, 100}}});
    s.gold_bbox = BBox{0, 0, 20, 20};
    s.reasoning = "I need to scroll first";
    e.steps.push_back(s);
    FakePixels px;
    px.default_std = 0.5;
    auto kw = ReasoningKeywords::load(GUIKIT_DATA_DIR "/reasoning_keywords.txt");
    DenoiseOptions o;
    o.pixels = &px;
    o.keywords = &kw;
    auto res = denoise_episode(e, o);
    CHECK(res.cleaned.steps.size() == 1);
    CHECK(res.verdicts[0].flags.size() == 2);
    CHECK(res.audit.removed == 0);
  }

  TEST_CASE("property: denoising is idempotent and conserves elements") {
    Rng rng(99);
    auto corpus = random_screen_corpus(rng, 60, "p");
    FakePixels px;
    for (const auto& r : corpus) {
      for (const auto& e : r.elements) {
        if (uniform(rng, 0, 5) == 0) px.stds[key(r.screenshot, e.bbox)] = 1.0;
      }
    }
    FakeOcr ocr;
    ocr.fallback = "item";
    DenoiseOptions o;
    o.pixels = &px;
    o.ocr = &ocr;
    auto first = denoise_elements(corpus, o);
    std::size_t total = 0, kept = 0;
    for (const auto& r : corpus) total += r.elements.size();
    for (const auto& r : first.cleaned) kept += r.elements.size();
    CHECK(first.audit.total == total);
    CHECK(first.audit.removed + kept == total);
    std::size_t by_rule = 0;
    for (const auto& [r, n] : first.audit.removed_by_rule) by_rule += n;
    CHECK(by_rule == first.audit.removed);

    auto second = denoise_elements(first.cleaned, o);
    CHECK(second.audit.removed == 0);
    CHECK(second.cleaned == first.cleaned);
  }

  TEST_CASE("property: episode denoising is idempotent") {
    auto eps = synthetic_episodes(30, 12, 5);
    Rng rng(1);
    for (auto& e : eps) {
      for (std::size_t i = 1; i < e.steps.size(); ++i) {
        if (uniform(rng, 0, 4) == 0) e.steps[i] = e.steps[i - 1];
      }
      auto once = denoise_episode(e, DenoiseOptions{});
      auto twice = denoise_episode(once.cleaned, DenoiseOptions{});
      CHECK(twice.audit.removed == 0);
      CHECK(twice.cleaned == once.cleaned);
    }
  }
}
