// Acceptance suite: one pass/fail line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "../golden_actions.hpp"
#include "../support.hpp"
#include "../synthetic.hpp"
#include "guikit/cli.hpp"
#include "guikit/evaluator.hpp"
#include "guikit/source_adapters.hpp"
#include "guikit/taskgen.hpp"

using namespace guikit;
using namespace guikit::test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (out_.pass) out_.detail = what;
    out_.pass = false;
    ++failures_;
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
  int failures_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  int rc = cli::run(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

// 1 --------------------------------------------------------------------------
Outcome grammar_goldens() {
  Checker c;
  auto t0 = std::chrono::steady_clock::now();
  auto golden = load_golden(fixture("grammar_golden.txt"));
  auto actions = golden_actions();
  c.expect(golden.size() == 36 && actions.size() == 36, "expected 36 golden rows");
  c.expect(action_count(Platform::mobile) == 11 && action_count(Platform::web) == 15 &&
               action_count(Platform::desktop) == 10,
           "action table sizes differ from 11/15/10");
  for (std::size_t i = 0; i < std::min(golden.size(), actions.size()); ++i) {
    const auto& [key, text] = golden[i];
    const auto& [akey, a] = actions[i];
    c.expect(key == akey, "row order mismatch at " + key);
    const std::string paper = serialize_action(a, SerializeMode::paper);
    c.expect(paper == text, key + ": got " + paper);
    const std::string strict = serialize_action(a, SerializeMode::strict_json);
    bool ok = nlohmann::json::accept(strict);
    c.expect(ok, key + ": strict form is not JSON: " + strict);
    c.expect(parse_action(text, a.platform()) == a, key + ": golden does not parse back");
  }
  for (Platform p : {Platform::mobile, Platform::web, Platform::desktop}) {
    for (auto name : action_names(p)) {
      bool covered = false;
      for (const auto& [key, a] : actions) {
        covered = covered || key == std::string(to_string(p)) + " " + std::string(name);
      }
      c.expect(covered, "no golden for " + std::string(to_string(p)) + " " + std::string(name));
    }
  }
  const double s = seconds_since(t0);
  c.expect(s < 1.0, "took " + std::to_string(s) + " s");
  c.note("36 goldens byte-identical, " + std::to_string(s) + " s");
  return c.result();
}

// 2 --------------------------------------------------------------------------
Outcome round_trip_fuzz() {
  Checker c;
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  std::size_t failures = 0;
  std::string first;
  for (Platform p : {Platform::mobile, Platform::web, Platform::desktop}) {
    for (int i = 0; i < 10000; ++i) {
      UnifiedAction a = random_action(rng, p);
      for (auto mode : {SerializeMode::paper, SerializeMode::strict_json}) {
        const std::string s = serialize_action(a, mode);
        bool ok = false;
        try {
          ok = parse_action(s, p) == a;
        } catch (const std::exception&) {
        }
        if (!ok && failures++ == 0) first = s;
      }
    }
  }
  const double s = seconds_since(t0);
  c.expect(failures == 0, std::to_string(failures) + " failures, first: " + first);
  c.expect(s < 10.0, "took " + std::to_string(s) + " s");
  c.note("3 x 10000 actions, both modes, 0 failures, " + std::to_string(s) + " s");
  return c.result();
}

// 3 --------------------------------------------------------------------------
std::string repeat_edit(std::size_t n, std::size_t changed) {
  std::string s(n, 'a');
  for (std::size_t i = 0; i < changed; ++i) s[i] = 'b';
  return s;
}

Outcome denoiser_thresholds() {
  Checker c;
  DenoiseThresholds t;
  const ScreenshotMeta s = screen("s", 1000, 1000);

  // Area ratio: removed only when strictly above 0.65.
  c.expect(!check_oversized(element({0, 0, 650, 1000}), s, t).violation, "ratio 0.650 removed");
  c.expect(check_oversized(element({0, 0, 651, 1000}), s, t).violation == NoiseRule::oversized,
           "ratio 0.651 kept");
  // Shorter side: removed only when strictly below 18 px.
  c.expect(check_tiny(element({0, 0, 17, 100}), t).violation == NoiseRule::tiny, "17 px kept");
  c.expect(!check_tiny(element({0, 0, 18, 100}), t).violation, "18 px removed");
  // Colour std: removed only when strictly below 5.
  FakePixels px;
  const BBox b1{0, 0, 20, 20}, b2{20, 0, 40, 20};
  px.stds[key(s, b1)] = 4.99;
  px.stds[key(s, b2)] = 5.0;
  c.expect(check_blank(b1, s, px, t).violation == NoiseRule::blank, "std 4.99 kept");
  c.expect(!check_blank(b2, s, px, t).violation, "std 5.0 removed");
  // OCR similarity: removed only when strictly below 22.
  FakeOcr ocr;
  ElementRecord e1 = element({0, 0, 100, 30});
  ElementRecord e2 = element({0, 40, 100, 70});
  e1.text = repeat_edit(1000, 0);
  e2.text = e1.text;
  ocr.texts[key(s, e1.bbox)] = repeat_edit(1000, 781);  // 21.9
  ocr.texts[key(s, e2.bbox)] = repeat_edit(1000, 780);  // 22.0
  auto r1 = check_invisible_text(e1, s, ocr, t);
  auto r2 = check_invisible_text(e2, s, ocr, t);
  c.expect(r1.violation == NoiseRule::invisible_text, "similarity 21.9 kept");
  c.expect(!r2.violation, "similarity 22.0 removed (" + std::to_string(*r2.value) + ")");

  // 1,000 elements over 10 screens, 29 planted per screen:
  // rule1 6, rule2 4, rule3 6, rule4 5, rule5 4, rule6 4.
  const std::map<NoiseRule, std::size_t> planted{
      {NoiseRule::invalid_bbox, 60}, {NoiseRule::oversized, 40}, {NoiseRule::tiny, 60},
      {NoiseRule::blank, 50},        {NoiseRule::duplicate, 40}, {NoiseRule::invisible_text, 40}};
  std::vector<ScreenRecord> corpus;
  FakePixels pixels;
  FakeOcr texts;
  for (int k = 0; k < 10; ++k) {
    ScreenRecord r;
    r.screenshot = screen("screen" + std::to_string(k), 1000, 2000);
    int slot = 0;
    auto next_box = [&] {
      const int col = slot % 10;
      const int row = slot / 10;
      ++slot;
      return BBox{col * 100 + 10, row * 100 + 10, col * 100 + 70, row * 100 + 50};
    };
    auto labelled = [&](BBox b, const std::string& text, const std::string& seen) {
      ElementRecord e = element(b, r.screenshot.id + "/" + std::to_string(r.elements.size()));
      e.text = text;
      texts.texts[key(r.screenshot, b)] = seen;
      return e;
    };
    for (int i = 0; i < 71; ++i) {
      const std::string label = "item " + std::to_string(i);
      r.elements.push_back(labelled(next_box(), label, label));
    }
    r.elements.push_back(element({-5, 0, 50, 40}));
    r.elements.push_back(element({950, 0, 1001, 40}));
    r.elements.push_back(element({0, 1990, 40, 2001}));
    r.elements.push_back(element({100, 100, 100, 140}));
    r.elements.push_back(element({300, 300, 340, 300}));
    r.elements.push_back(element({500, 500, 480, 540}));
    for (int i = 0; i < 4; ++i) r.elements.push_back(element({i, i, 900 + i, 1500 + i}));
    for (int i = 0; i < 6; ++i) {
      BBox b = next_box();
      b.right = b.left + 17;
      r.elements.push_back(element(b));
    }
    for (int i = 0; i < 5; ++i) {
      BBox b = next_box();
      pixels.stds[key(r.screenshot, b)] = 2.0;
      r.elements.push_back(element(b));
    }
    for (int i = 0; i < 4; ++i) r.elements.push_back(element(r.elements[static_cast<std::size_t>(i * 7)].bbox));
    for (int i = 0; i < 4; ++i) r.elements.push_back(labelled(next_box(), "Settings", "#@&"));
    corpus.push_back(std::move(r));
  }
  DenoiseOptions opts;
  opts.pixels = &pixels;
  opts.ocr = &texts;
  auto result = denoise_elements(corpus, opts);
  c.expect(result.audit.total == 1000, "corpus size " + std::to_string(result.audit.total));
  c.expect(result.audit.removed == 290, "removed " + std::to_string(result.audit.removed));
  c.expect(result.audit.percent_invalid() == "29.0", "percent " + result.audit.percent_invalid());
  for (const auto& [rule, n] : planted) {
    c.expect(result.audit.removed_by_rule.at(rule) == n,
             std::string(to_string(rule)) + " removed " +
                 std::to_string(result.audit.removed_by_rule.at(rule)) + ", planted " +
                 std::to_string(n));
  }
  c.note("boundaries exact, 1000-element corpus reports 29.0% with exact per-rule counts");
  return c.result();
}

// 4 --------------------------------------------------------------------------
Outcome metric_oracles() {
  Checker c;
  Rng rng(7);
  std::vector<PixelPoint> pts;
  std::vector<BBox> boxes;
  for (int i = 0; i < 10000; ++i) {
    BBox b{uniform(rng, 0, 500), uniform(rng, 0, 500), 0, 0};
    b.right = b.left + uniform(rng, 1, 300);
    b.bottom = b.top + uniform(rng, 1, 300);
    PixelPoint p{uniform(rng, 0, 900), uniform(rng, 0, 900)};
    switch (uniform(rng, 0, 4)) {  // aim at the edges now and then
      case 0:
        p.x = b.left;
        break;
      case 1:
        p.y = b.bottom;
        break;
      case 2:
        p.x = b.right + 1;
        break;
      default:
        break;
    }
    pts.push_back(p);
    boxes.push_back(b);
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool in_x = !(pts[i].x < boxes[i].left) && !(pts[i].x > boxes[i].right);
    const bool in_y = !(pts[i].y < boxes[i].top) && !(pts[i].y > boxes[i].bottom);
    if (in_x && in_y) ++hits;
  }
  const double acc = grounding_accuracy(pts, boxes);
  c.expect(acc == 100.0 * static_cast<double>(hits) / 10000.0,
           "grounding " + std::to_string(acc) + " vs brute force " + std::to_string(hits));

  const std::vector<std::tuple<std::string, std::string, double>> f1_cases{
      {R"({"action_type": "click", "target": (231,876)})", R"({"action_type": "click", "target": (231,876)})", 1.0},
      {"", "", 1.0},
      {"", "click", 0.0},
      {"click", "", 0.0},
      {R"(input_text "hello")", R"(input_text "hello world")", 0.8},
      {R"({"action_type": "click", "target": (231,876)})", R"({"action_type": "click", "target": (231,870)})", 0.8},
      {R"({"action_type": "scroll", "direction": "down", "distance": "medium"})",
       R"({"action_type": "scroll", "direction": "up", "distance": "medium"})", 5.0 / 6.0},
      {"A B C", "a b c", 1.0},
      {"a a b", "a b b", 2.0 / 3.0},
      {"a", "b", 0.0},
      {"x y z w", "x", 0.4},
      {R"({"action_type": "navigate_back"})", R"({"action_type": "navigate_home"})", 0.5},
      {R"({"action_type": "status", "goal_status": "successful", "answer": ""})",
       R"({"action_type": "status", "goal_status": "successful", "answer": "42"})", 10.0 / 11.0},
      {"(1,2)", "1 2", 1.0},
      {"a,b:c", "a b c", 1.0},
      {"  ", "", 1.0},
      {"a a a", "a", 0.5},
      {R"({"action_type": "input_text", "text": "Hello World"})",
       R"({"action_type": "input_text", "text": "hello"})", 8.0 / 9.0},
      {R"({"action_type": "hotkey", "key_comb": "Ctrl-S"})", R"({"action_type": "press_key", "key": "ctrl-s"})", 0.5},
      {"a b c d", "c d e f g h", 0.4},
  };
  c.expect(f1_cases.size() == 20, "expected 20 curated pairs");
  for (const auto& [p, g, want] : f1_cases) {
    const double got = op_f1(p, g);
    c.expect(std::abs(got - want) < 1e-9, "op_f1('" + p + "','" + g + "') = " + std::to_string(got));
  }

  auto episodes = synthetic_episodes(50, 10, 99);
  std::vector<Prediction> echo, corrupted;
  std::size_t flipped = 0;
  std::size_t index = 0;
  for (const Episode& e : episodes) {
    for (const Step& s : e.steps) {
      const std::string id = step_id(e, s);
      echo.push_back(make_prediction(id, serialize_action(s.gold_action), e.platform));
      UnifiedAction out = s.gold_action;
      if (index++ % 4 == 0) {
        const auto names = action_names(e.platform);
        std::size_t gold_idx = 0;
        while (names[gold_idx] != s.gold_action.type_name()) ++gold_idx;
        out = random_action(rng, e.platform, (gold_idx + 1) % names.size());
        ++flipped;
      }
      corrupted.push_back(make_prediction(id, serialize_action(out), e.platform));
    }
  }
  MatchPolicy policy;
  auto perfect = step_sr(episodes, echo, policy, 4);
  c.expect(perfect.total == 500, "corpus has " + std::to_string(perfect.total) + " steps");
  c.expect(format_percent(perfect.step_sr()) == "100.0" && perfect.step_sr() == 100.0,
           "gold echo step_sr " + std::to_string(perfect.step_sr()));
  c.expect(perfect.type_acc() == 100.0, "gold echo type_acc");
  auto bad = step_sr(episodes, corrupted, policy, 4);
  c.expect(flipped == 125, "flipped " + std::to_string(flipped));
  c.expect(bad.type_acc() == 75.0, "corrupted type_acc " + std::to_string(bad.type_acc()));
  c.note("grounding exact on 10000 pairs, 20 op_f1 pairs, echo 100.0, corrupted type_acc 75.0");
  return c.result();
}

// 5 --------------------------------------------------------------------------
Outcome adapter_equivalence() {
  Checker c;
  Rng rng(5150);
  AdapterConfig cfg;
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    UnitPoint a{uniform01(rng), uniform01(rng)};
    UnitPoint b = uniform(rng, 0, 4) == 0
                      ? UnitPoint{std::clamp(a.x + (uniform01(rng) - 0.5) * 0.1, 0.0, 1.0),
                                  std::clamp(a.y + (uniform01(rng) - 0.5) * 0.1, 0.0, 1.0)}
                      : UnitPoint{uniform01(rng), uniform01(rng)};
    Gesture g = classify_dual_point(a, b, cfg);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    bool ok;
    if (len <= 0.04) {
      ok = g.kind == Gesture::Kind::tap;
    } else {
      double angle = std::atan2(-dy, dx) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 360.0;
      Direction want = angle >= 45 && angle <= 135    ? Direction::up
                       : angle >= 225 && angle <= 315 ? Direction::down
                       : angle > 135 && angle < 225   ? Direction::left
                                                      : Direction::right;
      SwipeDistance dist = len <= 0.25 ? SwipeDistance::short_
                           : len <= 0.5 ? SwipeDistance::medium
                                        : SwipeDistance::long_;
      ok = g.kind == Gesture::Kind::swipe && g.direction == want && g.distance == dist;
    }
    if (!ok) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " disagreements with the atan2 oracle");

  TempDir dir("accept5");
  const std::string out = dir.file("mini.jsonl");
  int rc = run_cli({"convert", "-i", fixture("mini_aitw.jsonl"), "-o", out, "-s", "aitw"});
  c.expect(rc == 0, "convert exit " + std::to_string(rc));
  c.expect(read_file(out) == read_file(fixture("mini_aitw.expected.jsonl")),
           "mini-AITW output differs from the golden file");
  c.note("10000 gestures agree with atan2 oracle; 50-step fixture byte-identical");
  return c.result();
}

// 6 --------------------------------------------------------------------------
Outcome end_to_end() {
  Checker c;
  TempDir dir("accept6");
  const std::string raw = dir.file("aitw.jsonl");
  write_aitw_export(raw, 10000, 10, 424242);

  auto pipeline = [&](const std::string& jobs, const std::string& tag) {
    auto f = [&](const std::string& n) { return dir.file(tag + "-" + n); };
    const std::vector<std::string> common{"--jobs", jobs, "--seed", "17"};
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.begin(), common.begin(), common.end());
      return a;
    };
    auto t0 = std::chrono::steady_clock::now();
    int rc = run_cli(with({"convert", "-i", raw, "-o", f("episodes.jsonl"), "-s", "aitw"}));
    c.expect(rc == 0, tag + " convert exit " + std::to_string(rc));
    rc = run_cli(with({"denoise", "-i", f("episodes.jsonl"), "-o", f("clean.jsonl"), "--rules", "1,2,3,5",
                       "--audit", f("audit.json")}));
    c.expect(rc == 0, tag + " denoise exit " + std::to_string(rc));
    rc = run_cli(with({"taskgen", "--from", "episodes", "-i", f("clean.jsonl"), "-o", f("samples.jsonl")}));
    c.expect(rc == 0, tag + " taskgen exit " + std::to_string(rc));
    {
      JsonlReader reader(f("samples.jsonl"));
      JsonlWriter preds(f("predictions.jsonl"));
      while (auto line = reader.next()) {
        Json s = parse_json_line(*line);
        preds.write(Json{{"step_id", s["provenance"][0]}, {"output", s["target"]}});
      }
    }
    std::string text;
    rc = run_cli(with({"evaluate", "-g", f("clean.jsonl"), "-p", f("predictions.jsonl"), "--report-json",
                       f("report.json"), "--report-md", f("report.md")}),
                 &text);
    c.expect(rc == 0, tag + " evaluate exit " + std::to_string(rc));
    c.expect(text.find("step_sr: 100.0") != std::string::npos, tag + " echo agent below 100: " + text);
    return seconds_since(t0);
  };

  const double t1 = pipeline("1", "j1");
  const double t8 = pipeline("8", "j8");
  c.expect(t1 < 60.0, "jobs=1 took " + std::to_string(t1) + " s");
  c.expect(t8 < 60.0, "jobs=8 took " + std::to_string(t8) + " s");
  for (const char* name : {"episodes.jsonl", "clean.jsonl", "audit.json", "samples.jsonl",
                           "predictions.jsonl", "report.json", "report.md"}) {
    c.expect(read_file(dir.file(std::string("j1-") + name)) == read_file(dir.file(std::string("j8-") + name)),
             std::string(name) + " differs between jobs=1 and jobs=8");
  }
  const auto steps = read_lines(dir.file("j1-samples.jsonl")).size();
  c.note("100000 raw steps, " + std::to_string(steps) + " samples; jobs=1 " + std::to_string(t1) +
         " s, jobs=8 " + std::to_string(t8) + " s; outputs byte-identical");
  return c.result();
}

// 7 --------------------------------------------------------------------------
Outcome denoise_fixpoint() {
  Checker c;
  TempDir dir("accept7");
  const std::string ocr = dir.file("ocr.sh");
  write_file(ocr, "#!/bin/sh\necho item\n");
  std::filesystem::permissions(ocr, std::filesystem::perms::owner_all);

  Rng rng(777);
  std::size_t first_pass_removed = 0;
  auto removed_in = [&](const std::string& audit) {
    return Json::parse(read_file(audit)).at("removed").get<std::size_t>();
  };
  for (int round = 0; round < 12; ++round) {
    const std::string tag = "r" + std::to_string(round);
    std::vector<Json> lines;
    std::vector<std::string> args;
    if (round % 3 == 2) {
      // Episode corpus with repeated steps.
      auto eps = synthetic_episodes(20, uniform(rng, 1, 12), 1000 + static_cast<std::uint64_t>(round));
      for (auto& e : eps) {
        for (std::size_t i = 1; i < e.steps.size(); ++i) {
          if (uniform(rng, 0, 2) == 0) {
            Step copy = e.steps[i - 1];
            copy.history_index = e.steps[i].history_index;
            e.steps[i] = copy;
          }
        }
        lines.push_back(to_json(e));
      }
    } else {
      auto corpus = random_screen_corpus(rng, 15, tag + "s");
      for (const auto& s : corpus) {
        write_screen_image(dir.file(*s.screenshot.image_ref), s.screenshot, rng);
        lines.push_back(to_json(s));
      }
      args = {"--images", dir.path().string()};
      if (round % 3 == 1) args.insert(args.end(), {"--ocr-cmd", ocr});
    }
    write_jsonl(dir.file(tag + "-in.jsonl"), lines);
    auto pass = [&](const std::string& in, const std::string& out) {
      std::vector<std::string> a{"denoise", "-i", in, "-o", out, "--audit", out + ".audit"};
      a.insert(a.end(), args.begin(), args.end());
      return run_cli(a);
    };
    int rc1 = pass(dir.file(tag + "-in.jsonl"), dir.file(tag + "-p1.jsonl"));
    int rc2 = pass(dir.file(tag + "-p1.jsonl"), dir.file(tag + "-p2.jsonl"));
    c.expect(rc1 == 0 && rc2 == 0, tag + " denoise failed");
    first_pass_removed += removed_in(dir.file(tag + "-p1.jsonl.audit"));
    const auto second = removed_in(dir.file(tag + "-p2.jsonl.audit"));
    c.expect(second == 0, tag + " second pass removed " + std::to_string(second));
    c.expect(read_file(dir.file(tag + "-p1.jsonl")) == read_file(dir.file(tag + "-p2.jsonl")),
             tag + " second pass changed the corpus");
  }
  c.expect(first_pass_removed > 0, "fuzz corpora contained no noise");
  c.note("12 fuzz corpora; first pass removed " + std::to_string(first_pass_removed) +
         ", second pass removed 0");
  return c.result();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 grammar golden files", grammar_goldens},
      {"2 round-trip fuzz", round_trip_fuzz},
      {"3 denoiser thresholds", denoiser_thresholds},
      {"4 metric oracles", metric_oracles},
      {"5 adapter equivalence", adapter_equivalence},
      {"6 end-to-end determinism and throughput", end_to_end},
      {"7 denoiser fixpoint", denoise_fixpoint},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << "  (" << o.detail << ")"
              << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (7 - failed) << "/7 criteria passed" << std::endl;
  return failed;
}
