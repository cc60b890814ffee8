#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "guikit/denoiser.hpp"
#include "guikit/evaluator.hpp"
#include "guikit/source_adapters.hpp"

namespace guikit::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kRecordErrors = 2 };

struct CommonOptions {
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::string data_dir = GUIKIT_DATA_DIR;
  std::size_t chunk_size = 4096;
};

struct ConvertOptions {
  std::string input;
  std::string output;
  std::string source;
  std::optional<std::string> manifests_dir;
  std::optional<std::string> error_log;  // default: <output>.errors.jsonl
  AdapterConfig adapter;
};

enum class CorpusKind { automatic, elements, episodes };

struct DenoiseOptionsCli {
  std::string input;
  std::string output;
  std::optional<std::string> audit_path;     // default: <output>.audit.json
  std::optional<std::string> verdicts_path;  // per-record verdicts, optional
  CorpusKind corpus = CorpusKind::automatic;
  std::string rules = "1,2,3,4,5,6";
  DenoiseThresholds thresholds;
  std::optional<std::string> image_dir;
  std::optional<std::string> ocr_command;  // falls back to $GUIKIT_OCR_CMD
  std::optional<std::string> keywords_path;
};

enum class TaskInput { triplets, screens, episodes, passthrough };

struct TaskgenOptions {
  std::string input;
  std::string output;
  TaskInput input_kind = TaskInput::triplets;
  std::optional<std::string> templates_path;
  int history_window = 8;
};

struct EvaluateOptions {
  std::string gold;
  std::string predictions;
  bool grounding = false;  // gold is a triplet corpus, outputs are "(x,y)"
  std::optional<std::string> report_json;
  std::optional<std::string> report_markdown;
  MatchPolicy policy;
};

struct StatsOptions {
  std::string input;
  std::optional<std::string> json_output;
};

int cmd_convert(const ConvertOptions& o, const CommonOptions& c, std::ostream& out, std::ostream& err);
int cmd_denoise(const DenoiseOptionsCli& o, const CommonOptions& c, std::ostream& out,
                std::ostream& err);
int cmd_taskgen(const TaskgenOptions& o, const CommonOptions& c, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& o, const CommonOptions& c, std::ostream& out,
                 std::ostream& err);
int cmd_stats(const StatsOptions& o, const CommonOptions& c, std::ostream& out, std::ostream& err);

// Parses arguments (argv[0] excluded) and dispatches to a subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace guikit::cli
