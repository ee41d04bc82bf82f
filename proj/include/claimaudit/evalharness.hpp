#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimaudit/judge.hpp"
#include "claimaudit/pipeline.hpp"
#include "claimaudit/providers.hpp"

namespace claimaudit {

struct SummEvalRecord {
  std::string record_id;  // "<article id>#<model id>"
  std::string source_text;
  std::string summary_text;
  std::string model_id;
  std::vector<int> expert_consistency;
};

struct SummEvalDataset {
  std::vector<SummEvalRecord> records;  // file order
  std::size_t skipped = 0;              // lines without expert annotations
};

// One JSON object per line with expert_annotations[].consistency. The source
// text is read from "text", "src" or "source"; the summary from "decoded" or
// "summary". Malformed lines raise ParseError with the 1-based line number.
SummEvalDataset load_summeval(const std::filesystem::path& path);
SummEvalDataset parse_summeval(std::istream& in);

struct TokenStats {
  double mean_summary_tokens = 0.0;
  double mean_source_tokens = 0.0;
};
TokenStats token_stats(const std::vector<SummEvalRecord>& records);

// Consistent iff every expert gave 5.
Label binarize_consistency(const std::vector<int>& ratings);

struct ConfusionCounts {
  std::size_t tp = 0;  // positive class = consistent
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<Label>& preds, const std::vector<Label>& labels);
double balanced_accuracy(const ConfusionCounts& c);
double balanced_accuracy(const std::vector<Label>& preds, const std::vector<Label>& labels);

struct SweepResult {
  double best_threshold = 0.0;
  double best_balanced_accuracy = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, balanced accuracy), 99 points
};

// Grid 0.01..0.99; ties go to the smallest threshold.
SweepResult sweep_threshold(const std::vector<double>& scores, const std::vector<Label>& labels);

enum class Method { kHhemBaseline, kGraphEvalPlus, kSici0, kSici1 };
std::string to_string(Method m);
Method method_from_string(std::string_view s);
std::string valid_method_names();

// Pipeline settings for a method: strategy and window radius are forced,
// everything else comes from `base`.
PipelineConfig pipeline_for(Method m, const PipelineConfig& base);

struct ExampleResult {
  std::string record_id;
  double score = 0.0;
  Label pred = Label::kHallucinated;
  Label label = Label::kHallucinated;
  bool failure_forced = false;
};

struct Unevaluable {
  std::string record_id;
  std::string reason;
};

struct EvalReport {
  std::string method_name;
  std::size_t n = 0;
  ConfusionCounts counts;
  std::optional<double> balanced_accuracy;  // empty when only one class was evaluated
  double threshold = kDefaultDecisionThreshold;
  double wall_clock_seconds = 0.0;
  std::size_t provider_invocations = 0;
  std::vector<ExampleResult> per_example;  // sorted by record_id
  std::vector<Unevaluable> unevaluable;
};

struct RunOptions {
  std::size_t workers = 1;
  double threshold = kDefaultDecisionThreshold;
};

// Records whose provider calls keep failing are listed as unevaluable and
// left out of the counts; completed calls stay in the provider cache, so a
// rerun resumes where the outage hit.
EvalReport run_method(const std::vector<SummEvalRecord>& records, Method method, const PipelineConfig& base,
                      ProviderSet& providers, const RunOptions& options = {});

// Indices into the dataset, one per line; blank lines and '#' comments skipped.
std::vector<std::size_t> load_subset(const std::filesystem::path& path);
std::vector<SummEvalRecord> select_subset(const std::vector<SummEvalRecord>& records,
                                          const std::vector<std::size_t>& indices);

nlohmann::json to_json(const EvalReport& r, bool include_per_example = true);
std::string per_example_csv(const EvalReport& r);
std::string sweep_csv(const SweepResult& s);

// Writes report.json, report.csv and config.json (plus sweep.csv when given)
// into `dir`, creating it if needed.
void write_report(const std::filesystem::path& dir, const EvalReport& report, const nlohmann::json& config_snapshot,
                  const std::optional<SweepResult>& sweep = std::nullopt);

}  // namespace claimaudit
