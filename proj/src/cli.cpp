#include "guikit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "CLI11.hpp"
#include "guikit/json_io.hpp"
#include "guikit/parallel.hpp"
#include "guikit/taskgen.hpp"
#include "guikit/text.hpp"

namespace guikit::cli {

namespace {

std::string dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

// Result of processing one input line: zero or more output lines, or an
// error record for the error log.
struct LineResult {
  std::vector<std::string> lines;
  std::optional<Json> error;
};

Json line_error(const JsonlReader::Line& line, const std::exception& e) {
  return Json{{"line", line.number}, {"error", e.what()}};
}

// Reads `path` chunk by chunk, maps each line on the worker pool and passes
// the results to `sink` in input order. `fn(line, index)` gets the 0-based
// record index across the whole file.
template <class Fn, class Sink>
void for_each_chunk(const std::string& path, const CommonOptions& c, Fn fn, Sink sink) {
  JsonlReader reader(path);
  std::size_t base = 0;
  for (;;) {
    auto lines = reader.next_chunk(std::max<std::size_t>(1, c.chunk_size));
    if (lines.empty()) break;
    auto results = parallel_map(
        lines, [&](const JsonlReader::Line& l, std::size_t i) { return fn(l, base + i); }, c.jobs);
    for (auto& r : results) sink(std::move(r));
    base += lines.size();
  }
}

std::string data_path(const CommonOptions& c, const std::string& rel) {
  return (std::filesystem::path(c.data_dir) / rel).string();
}

void print_counts(std::ostream& out, const std::map<std::string, std::size_t>& counts) {
  for (const auto& [name, n] : counts) out << "  " << std::left << std::setw(20) << name << n << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// convert

int cmd_convert(const ConvertOptions& o, const CommonOptions& c, std::ostream& out,
                std::ostream& err) {
  SourceKind source;
  AdapterRegistry registry;
  try {
    source = parse_source(o.source);
    o.adapter.validate();
    const std::string dir = o.manifests_dir.value_or(data_path(c, "manifests"));
    registry.add(load_manifest((std::filesystem::path(dir) / (o.source + ".json")).string()));
  } catch (const Error& e) {
    err << "convert: " << e.what() << '\n';
    return kInputError;
  }

  struct Converted {
    LineResult result;
    std::size_t steps = 0;
    std::vector<std::string> types;
  };

  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t errors = 0;
  std::map<std::string, std::size_t> per_type;
  try {
    JsonlWriter writer(o.output);
    JsonlWriter error_log(o.error_log.value_or(o.output + ".errors.jsonl"));
    for_each_chunk(
        o.input, c,
        [&](const JsonlReader::Line& line, std::size_t) {
          Converted r;
          std::string episode_id;
          try {
            SourceEpisode se = source_episode_from_json(parse_json_line(line));
            episode_id = se.episode_id;
            if (se.source != source) {
              throw SchemaError("record source '" + std::string(to_string(se.source)) +
                                "' does not match --source " + o.source);
            }
            Episode ep = registry.convert_episode(se, o.adapter);
            r.steps = ep.steps.size();
            for (const Step& s : ep.steps) r.types.emplace_back(s.gold_action.type_name());
            r.result.lines.push_back(dump(to_json(ep)));
          } catch (const ConversionError& e) {
            r.result.error = Json{{"line", line.number},
                                  {"episode_id", episode_id},
                                  {"source", std::string(to_string(e.source()))},
                                  {"step_index", e.step_index()},
                                  {"raw_action", e.raw_action()},
                                  {"error", e.what()}};
          } catch (const Error& e) {
            r.result.error = line_error(line, e);
            if (!episode_id.empty()) (*r.result.error)["episode_id"] = episode_id;
          } catch (const nlohmann::json::exception& e) {
            r.result.error = line_error(line, e);
          }
          return r;
        },
        [&](Converted r) {
          if (r.result.error) {
            ++errors;
            error_log.write(*r.result.error);
            return;
          }
          for (const auto& l : r.result.lines) writer.write_raw(l);
          ++episodes;
          steps += r.steps;
          for (const auto& t : r.types) ++per_type[t];
        });
  } catch (const IoError& e) {
    err << "convert: " << e.what() << '\n';
    return kInputError;
  }

  out << "episodes: " << episodes << "\nsteps: " << steps << "\nconversion errors: " << errors
      << "\naction types:\n";
  print_counts(out, per_type);
  if (errors) {
    err << "convert: " << errors << " record(s) failed; see "
        << o.error_log.value_or(o.output + ".errors.jsonl") << '\n';
    return kRecordErrors;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// denoise

namespace {

CorpusKind detect_corpus(const std::string& path) {
  JsonlReader reader(path);
  auto first = reader.next();
  if (!first) return CorpusKind::elements;
  Json j = parse_json_line(*first);
  if (j.is_object() && j.contains("steps")) return CorpusKind::episodes;
  return CorpusKind::elements;
}

}  // namespace

int cmd_denoise(const DenoiseOptionsCli& o, const CommonOptions& c, std::ostream& out,
                std::ostream& err) {
  DenoiseOptions opts;
  std::optional<ImagePixelProvider> pixels;
  std::optional<CommandTextRecognizer> ocr;
  std::optional<ReasoningKeywords> keywords;
  CorpusKind corpus = o.corpus;
  try {
    opts.mask = RuleMask::parse(o.rules);
    opts.thresholds = o.thresholds;
    if (o.image_dir) {
      pixels.emplace(*o.image_dir);
      opts.pixels = &*pixels;
    }
    std::optional<std::string> ocr_cmd = o.ocr_command;
    if (!ocr_cmd) {
      if (const char* env = std::getenv("GUIKIT_OCR_CMD"); env && *env) ocr_cmd = env;
    }
    if (ocr_cmd) {
      ocr.emplace(*ocr_cmd, o.image_dir.value_or(""));
      opts.ocr = &*ocr;
    }
    if (corpus == CorpusKind::automatic) corpus = detect_corpus(o.input);
    if (corpus == CorpusKind::episodes) {
      keywords = ReasoningKeywords::load(o.keywords_path.value_or(data_path(c, "reasoning_keywords.txt")));
      opts.keywords = &*keywords;
    }
  } catch (const Error& e) {
    err << "denoise: " << e.what() << '\n';
    return kInputError;
  }

  const bool episodes = corpus == CorpusKind::episodes;
  AuditReport audit = episodes ? denoise_episode(Episode{}, opts).audit
                               : denoise_screen(ScreenRecord{}, opts).audit;
  struct Denoised {
    LineResult result;
    std::vector<std::string> verdicts;
    AuditReport audit;
  };
  std::size_t errors = 0;
  const std::string error_path = o.output + ".errors.jsonl";
  try {
    JsonlWriter writer(o.output);
    JsonlWriter error_log(error_path);
    std::optional<JsonlWriter> verdict_log;
    if (o.verdicts_path) verdict_log.emplace(*o.verdicts_path);
    for_each_chunk(
        o.input, c,
        [&](const JsonlReader::Line& line, std::size_t) {
          Denoised r;
          try {
            Json j = parse_json_line(line);
            if (episodes) {
              Episode ep = episode_from_json(j);
              auto d = denoise_episode(ep, opts);
              r.result.lines.push_back(dump(to_json(d.cleaned)));
              for (const auto& v : d.verdicts) r.verdicts.push_back(dump(to_json(v)));
              r.audit = std::move(d.audit);
            } else {
              ScreenRecord s = screen_record_from_json(j);
              auto d = denoise_screen(s, opts);
              r.result.lines.push_back(dump(to_json(d.cleaned)));
              for (const auto& v : d.verdicts) r.verdicts.push_back(dump(to_json(v)));
              r.audit = std::move(d.audit);
            }
          } catch (const Error& e) {
            r.result.error = line_error(line, e);
          } catch (const nlohmann::json::exception& e) {
            r.result.error = line_error(line, e);
          }
          return r;
        },
        [&](Denoised r) {
          if (r.result.error) {
            ++errors;
            error_log.write(*r.result.error);
            return;
          }
          for (const auto& l : r.result.lines) writer.write_raw(l);
          if (verdict_log) {
            for (const auto& v : r.verdicts) verdict_log->write_raw(v);
          }
          audit.merge(r.audit);
        });
    write_file(o.audit_path.value_or(o.output + ".audit.json"), audit.to_json().dump(2) + "\n");
  } catch (const IoError& e) {
    err << "denoise: " << e.what() << '\n';
    return kInputError;
  }

  out << audit.to_table();
  if (errors) {
    err << "denoise: " << errors << " record(s) could not be read; see " << error_path << '\n';
    return kRecordErrors;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// taskgen

namespace {

std::vector<TaskKind> kinds_needed(TaskInput in) {
  switch (in) {
    case TaskInput::triplets: {
      std::vector<TaskKind> out;
      for (TaskKind k : kAllTaskKinds) {
        if (is_grounding_kind(k) || is_referring_kind(k)) out.push_back(k);
      }
      return out;
    }
    case TaskInput::screens:
      return {TaskKind::widget_listing};
    case TaskInput::episodes:
      return {TaskKind::agent_step};
    case TaskInput::passthrough:
      return {};
  }
  return {};
}

// Records per line are seeded apart by this stride so each generated sample
// of a record gets its own stream.
constexpr std::uint64_t kSeedStride = 1024;

}  // namespace

int cmd_taskgen(const TaskgenOptions& o, const CommonOptions& c, std::ostream& out,
                std::ostream& err) {
  TemplateSet templates;
  try {
    templates = TemplateSet::load(o.templates_path.value_or(data_path(c, "templates/default.txt")));
    templates.require_kinds(kinds_needed(o.input_kind));
    if (o.history_window < 1) throw ConfigError("history window must be at least 1");
  } catch (const Error& e) {
    err << "taskgen: " << e.what() << '\n';
    return kInputError;
  }

  struct Generated {
    LineResult result;
    std::vector<TaskKind> kinds;
    bool empty_screen = false;
  };
  std::map<std::string, std::size_t> per_kind;
  std::size_t errors = 0;
  std::size_t empty_screens = 0;
  const std::string error_path = o.output + ".errors.jsonl";
  const AgentFormatConfig agent_cfg{o.history_window};
  try {
    JsonlWriter writer(o.output);
    JsonlWriter error_log(error_path);
    for_each_chunk(
        o.input, c,
        [&](const JsonlReader::Line& line, std::size_t index) {
          Generated g;
          auto emit = [&](const TaskSample& s) {
            g.result.lines.push_back(dump(to_json(s)));
            g.kinds.push_back(s.kind);
          };
          try {
            Json j = parse_json_line(line);
            const std::uint64_t base = index * kSeedStride;
            switch (o.input_kind) {
              case TaskInput::triplets: {
                GroundingTriplet t = triplet_from_json(j, "line-" + std::to_string(line.number));
                std::uint64_t k = 0;
                for (TaskKind kind : kinds_for(t.re.kind)) {
                  emit(gen_triplet_task(t, kind, templates, record_seed(c.seed, base + k++)));
                }
                break;
              }
              case TaskInput::screens: {
                ScreenRecord s = screen_record_from_json(j);
                if (s.elements.empty()) {
                  g.empty_screen = true;
                  break;
                }
                emit(gen_widget_listing(s, templates, record_seed(c.seed, base)));
                break;
              }
              case TaskInput::episodes: {
                Episode ep = episode_from_json(j);
                for (std::size_t i = 0; i < ep.steps.size(); ++i) {
                  emit(format_agent_sample(ep, i, templates, agent_cfg, record_seed(c.seed, base + i)));
                }
                break;
              }
              case TaskInput::passthrough:
                emit(passthrough_sample(j));
                break;
            }
          } catch (const Error& e) {
            g.result.error = line_error(line, e);
            g.result.lines.clear();
            g.kinds.clear();
          } catch (const nlohmann::json::exception& e) {
            g.result.error = line_error(line, e);
            g.result.lines.clear();
            g.kinds.clear();
          }
          return g;
        },
        [&](Generated g) {
          if (g.result.error) {
            ++errors;
            error_log.write(*g.result.error);
            return;
          }
          if (g.empty_screen) ++empty_screens;
          for (const auto& l : g.result.lines) writer.write_raw(l);
          for (TaskKind k : g.kinds) ++per_kind[std::string(to_string(k))];
        });
  } catch (const IoError& e) {
    err << "taskgen: " << e.what() << '\n';
    return kInputError;
  }

  std::size_t total = 0;
  for (const auto& [k, n] : per_kind) total += n;
  out << "samples: " << total << "\nper kind:\n";
  print_counts(out, per_kind);
  if (empty_screens) out << "screens without elements (skipped): " << empty_screens << '\n';
  if (errors) {
    err << "taskgen: " << errors << " record(s) failed; see " << error_path << '\n';
    return kRecordErrors;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

struct PredictionTable {
  std::unordered_map<std::string, std::string> outputs;
  std::vector<std::string> order;  // ids in file order
  std::vector<std::string> duplicate;
};

PredictionTable load_predictions(const std::string& path) {
  PredictionTable t;
  JsonlReader reader(path);
  while (auto line = reader.next()) {
    Json j = parse_json_line(*line);
    if (!j.is_object()) throw SchemaError("line " + std::to_string(line->number) + ": not an object");
    auto id = j.find("step_id");
    if (id == j.end()) id = j.find("id");
    auto output = j.find("output");
    if (id == j.end() || !id->is_string() || output == j.end() || !output->is_string()) {
      throw SchemaError("line " + std::to_string(line->number) +
                        ": prediction needs string fields step_id and output");
    }
    const std::string key = id->get<std::string>();
    if (t.outputs.emplace(key, output->get<std::string>()).second) {
      t.order.push_back(key);
    } else {
      t.duplicate.push_back(key);
    }
  }
  return t;
}

std::optional<NormPoint> find_point(const std::string& text) {
  static const std::regex re(R"(\(\s*(\d{1,4})\s*,\s*(\d{1,4})\s*\))");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  NormPoint p{std::stoi(m[1].str()), std::stoi(m[2].str())};
  if (!p.in_range()) return std::nullopt;
  return p;
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& o, const CommonOptions& c, std::ostream& out,
                 std::ostream& err) {
  PredictionTable preds;
  try {
    o.policy.validate();
    preds = load_predictions(o.predictions);
  } catch (const IoError& e) {
    err << "evaluate: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "evaluate: " << e.what() << '\n';
    return kRecordErrors;
  }

  MetricsReport report;
  std::vector<std::string> missing;
  std::unordered_set<std::string> seen;
  std::size_t errors = 0;

  struct Scored {
    std::optional<Json> error;
    MetricsReport part;
    std::vector<std::string> ids;
    std::vector<std::string> missing;
  };
  try {
    for_each_chunk(
        o.gold, c,
        [&](const JsonlReader::Line& line, std::size_t) {
          Scored s;
          try {
            Json j = parse_json_line(line);
            if (o.grounding) {
              GroundingTriplet t = triplet_from_json(j, "line-" + std::to_string(line.number));
              s.ids.push_back(t.id);
              auto it = preds.outputs.find(t.id);
              if (it == preds.outputs.end()) {
                s.missing.push_back(t.id);
                return s;
              }
              ++s.part.grounding_total;
              if (auto p = find_point(it->second)) {
                if (point_in_bbox(denormalize_point(*p, t.screenshot), t.target_bbox)) {
                  ++s.part.grounding_hits;
                }
              }
              return s;
            }
            Episode ep = episode_from_json(j);
            std::vector<Prediction> chunk;
            for (const Step& step : ep.steps) {
              const std::string id = step_id(ep, step);
              s.ids.push_back(id);
              auto it = preds.outputs.find(id);
              if (it == preds.outputs.end()) {
                s.missing.push_back(id);
              } else {
                chunk.push_back(make_prediction(id, it->second, ep.platform));
              }
            }
            if (s.missing.empty()) {
              s.part = step_sr(std::span<const Episode>(&ep, 1), chunk, o.policy, 1);
            }
          } catch (const Error& e) {
            s.error = line_error(line, e);
          } catch (const nlohmann::json::exception& e) {
            s.error = line_error(line, e);
          }
          return s;
        },
        [&](Scored s) {
          if (s.error) {
            ++errors;
            err << "evaluate: gold " << dump(*s.error) << '\n';
            return;
          }
          for (auto& id : s.ids) seen.insert(std::move(id));
          for (auto& id : s.missing) missing.push_back(std::move(id));
          report.merge(s.part);
        });
  } catch (const IoError& e) {
    err << "evaluate: " << e.what() << '\n';
    return kInputError;
  }

  std::vector<std::string> unknown;
  for (const auto& id : preds.order) {
    if (!seen.count(id)) unknown.push_back(id);
  }
  if (!missing.empty() || !preds.duplicate.empty() || !unknown.empty()) {
    PredictionMismatchError e(missing, preds.duplicate, unknown);
    err << "evaluate: " << e.what() << '\n';
    return kRecordErrors;
  }
  if (errors) {
    err << "evaluate: " << errors << " gold record(s) could not be read\n";
    return kRecordErrors;
  }

  try {
    if (o.report_json) write_file(*o.report_json, emit_report(report, ReportFormat::json));
    if (o.report_markdown) {
      write_file(*o.report_markdown, emit_report(report, ReportFormat::markdown));
    }
  } catch (const IoError& e) {
    err << "evaluate: " << e.what() << '\n';
    return kInputError;
  }

  if (o.grounding) {
    out << "samples: " << report.grounding_total << "\ngrounding_acc: "
        << format_percent(report.grounding_acc().value_or(0.0)) << '\n';
  } else {
    out << "steps: " << report.total << "\nstep_sr: " << format_percent(report.step_sr())
        << "\ntype_acc: " << format_percent(report.type_acc())
        << "\nclick_acc: " << format_percent(report.click_acc())
        << "\nop_f1: " << format_percent(report.op_f1_mean())
        << "\nparse_errors: " << report.parse_errors << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const StatsOptions& o, const CommonOptions& c, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::size_t> per_kind;
  std::size_t total = 0;
  std::size_t errors = 0;
  try {
    for_each_chunk(
        o.input, c,
        [&](const JsonlReader::Line& line, std::size_t) -> std::optional<std::string> {
          try {
            Json j = parse_json_line(line);
            if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) return std::nullopt;
            return j["kind"].get<std::string>();
          } catch (const Error&) {
            return std::nullopt;
          }
        },
        [&](std::optional<std::string> kind) {
          if (!kind) {
            ++errors;
            return;
          }
          ++per_kind[*kind];
          ++total;
        });
  } catch (const IoError& e) {
    err << "stats: " << e.what() << '\n';
    return kInputError;
  }

  Json rows = Json::array();
  out << std::left << std::setw(20) << "kind" << std::right << std::setw(10) << "count"
      << std::setw(10) << "percent" << '\n';
  for (const auto& [kind, n] : per_kind) {
    const double p = 100.0 * static_cast<double>(n) / static_cast<double>(total);
    out << std::left << std::setw(20) << kind << std::right << std::setw(10) << n << std::setw(10)
        << format_percent(p) << '\n';
    rows.push_back(Json{{"kind", kind}, {"count", n}, {"percent", std::stod(format_percent(p))}});
  }
  out << "total: " << total << '\n';
  if (errors) out << "unreadable lines: " << errors << '\n';
  if (o.json_output) {
    try {
      write_file(*o.json_output,
                 Json{{"total", total}, {"kinds", rows}, {"unreadable", errors}}.dump(2) + "\n");
    } catch (const IoError& e) {
      err << "stats: " << e.what() << '\n';
      return kInputError;
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// argument parsing

namespace {

void optional_string(CLI::App* app, const std::string& name, std::optional<std::string>& target,
                     const std::string& help) {
  app->add_option_function<std::string>(
      name, [&target](const std::string& v) { target = v; }, help);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convert, denoise, generate tasks from and evaluate GUI agent datasets", "guikit"};
  app.set_config("--config", "", "TOML config file; command-line flags override its values");
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option("-j,--jobs", common.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", common.seed, "Base seed for template selection");
  app.add_option("--data-dir", common.data_dir, "Directory with manifests, templates and keyword table");
  app.add_option("--chunk-size", common.chunk_size, "Records held in memory per batch")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));

  ConvertOptions conv;
  auto* c_cmd = app.add_subcommand("convert", "Convert a source export into unified episodes");
  c_cmd->add_option("-i,--input", conv.input, "Source export (JSON Lines)")->required();
  c_cmd->add_option("-o,--output", conv.output, "Unified episode JSON Lines")->required();
  c_cmd->add_option("-s,--source", conv.source, "Source dataset tag")->required();
  optional_string(c_cmd, "--manifests", conv.manifests_dir, "Manifest directory");
  optional_string(c_cmd, "--error-log", conv.error_log, "Per-record error log");
  c_cmd->add_option("--tap-threshold", conv.adapter.tap_vs_swipe_threshold,
                    "Gesture length at or below which a gesture is a tap");
  std::vector<double> buckets;
  c_cmd->add_option("--swipe-buckets", buckets, "Upper bounds of short and medium swipes")
      ->expected(2);
  c_cmd->add_option("--history-window", conv.adapter.history_window, "Prior actions kept in prompts");
  c_cmd->add_flag("--invert-scroll,!--no-invert-scroll", conv.adapter.invert_scroll,
                  "Map scroll-down to an upward swipe");

  DenoiseOptionsCli den;
  std::string corpus = "auto";
  auto* d_cmd = app.add_subcommand("denoise", "Remove noisy elements or steps and write an audit");
  d_cmd->add_option("-i,--input", den.input, "Element or episode corpus")->required();
  d_cmd->add_option("-o,--output", den.output, "Cleaned corpus")->required();
  optional_string(d_cmd, "--audit", den.audit_path, "Audit report (JSON)");
  optional_string(d_cmd, "--verdicts", den.verdicts_path, "Per-record verdicts (JSON Lines)");
  d_cmd->add_option("--corpus", corpus, "auto, elements or episodes")
      ->check(CLI::IsMember({"auto", "elements", "episodes"}));
  d_cmd->add_option("--rules", den.rules, "Element rules to apply, e.g. 1,2,3,5");
  d_cmd->add_option("--max-area-ratio", den.thresholds.max_area_ratio);
  d_cmd->add_option("--min-side", den.thresholds.min_side_px);
  d_cmd->add_option("--min-std", den.thresholds.min_color_std);
  d_cmd->add_option("--min-ocr-similarity", den.thresholds.min_ocr_similarity);
  optional_string(d_cmd, "--images", den.image_dir, "Base directory of screenshots (enables rule 4)");
  optional_string(d_cmd, "--ocr-cmd", den.ocr_command,
                  "OCR command run as `cmd <region.ppm>` (enables rule 6; env GUIKIT_OCR_CMD)");
  optional_string(d_cmd, "--keywords", den.keywords_path, "Reasoning keyword table");

  TaskgenOptions tg;
  std::string tg_input = "triplets";
  auto* t_cmd = app.add_subcommand("taskgen", "Generate training samples");
  t_cmd->add_option("-i,--input", tg.input, "Triplets, screens, episodes or pass-through samples")
      ->required();
  t_cmd->add_option("-o,--output", tg.output, "Sample JSON Lines")->required();
  t_cmd->add_option("--from", tg_input, "triplets, screens, episodes or passthrough")
      ->check(CLI::IsMember({"triplets", "screens", "episodes", "passthrough"}));
  optional_string(t_cmd, "--templates", tg.templates_path, "Template file");
  t_cmd->add_option("--history-window", tg.history_window, "Prior actions listed in agent prompts");

  EvaluateOptions ev;
  std::string click_rule = "bbox_then_radius";
  std::string text_rule = "exact_casefold";
  auto* e_cmd = app.add_subcommand("evaluate", "Score predictions against gold");
  e_cmd->add_option("-g,--gold", ev.gold, "Gold episodes (or triplets with --grounding)")->required();
  e_cmd->add_option("-p,--predictions", ev.predictions, "Predictions {step_id, output}")->required();
  e_cmd->add_flag("--grounding", ev.grounding, "Gold is a triplet corpus; outputs are points");
  optional_string(e_cmd, "--report-json", ev.report_json, "Metrics report (JSON)");
  optional_string(e_cmd, "--report-md", ev.report_markdown, "Metrics report (markdown)");
  e_cmd->add_option("--click-rule", click_rule)
      ->check(CLI::IsMember({"bbox_containment", "bbox_then_radius"}));
  e_cmd->add_option("--radius", ev.policy.radius, "Click fallback radius (unit square)");
  e_cmd->add_option("--text-rule", text_rule)->check(CLI::IsMember({"exact_casefold", "fuzzy"}));
  e_cmd->add_option("--fuzzy-threshold", ev.policy.fuzzy_threshold);
  e_cmd->add_flag("--compare-swipe-distance", ev.policy.compare_swipe_distance);
  e_cmd->add_flag("--compare-answer,!--no-compare-answer", ev.policy.compare_answer);

  StatsOptions st;
  auto* s_cmd = app.add_subcommand("stats", "Per-kind counts and proportions of a sample corpus");
  s_cmd->add_option("-i,--input", st.input, "Sample JSON Lines")->required();
  optional_string(s_cmd, "--json", st.json_output, "Also write the table as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "guikit: " << e.what() << '\n';
    return kInputError;
  }

  if (*c_cmd) {
    if (!buckets.empty()) conv.adapter.swipe_distance_buckets = {buckets[0], buckets[1]};
    return cmd_convert(conv, common, out, err);
  }
  if (*d_cmd) {
    den.corpus = corpus == "elements"   ? CorpusKind::elements
                 : corpus == "episodes" ? CorpusKind::episodes
                                        : CorpusKind::automatic;
    return cmd_denoise(den, common, out, err);
  }
  if (*t_cmd) {
    tg.input_kind = tg_input == "screens"       ? TaskInput::screens
                    : tg_input == "episodes"    ? TaskInput::episodes
                    : tg_input == "passthrough" ? TaskInput::passthrough
                                                : TaskInput::triplets;
    return cmd_taskgen(tg, common, out, err);
  }
  if (*e_cmd) {
    ev.policy.click_rule = parse_click_rule(click_rule);
    ev.policy.text_rule = parse_text_rule(text_rule);
    return cmd_evaluate(ev, common, out, err);
  }
  return cmd_stats(st, common, out, err);
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace guikit::cli
