#pragma once

// Stage orchestration. Each stage reads the artifacts of earlier stages from
// the output directory and writes its own there, together with a snapshot of
// the configuration, so runs can be resumed stage by stage.

#include "trollscope/config.hpp"
#include "trollscope/corpus.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace trollscope {

enum class Stage { Ingest, Synth, Prefilter, Features, Train, Cv, Detect, Validate, GroupAnalyze, Report, Serve };

Stage parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

namespace artifact {
inline constexpr const char* kConfig = "run_config.txt";
inline constexpr const char* kCorpusLog = "corpus.log";
inline constexpr const char* kIngestStats = "ingest_stats.json";
inline constexpr const char* kSeed = "seed.txt";
inline constexpr const char* kCandidates = "candidates.txt";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kSeedFeatures = "seed_features.csv";
inline constexpr const char* kTraining = "training.csv";
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kCvReport = "cv_report.json";
inline constexpr const char* kDetections = "detections.csv";
inline constexpr const char* kIndicators = "indicators.jsonl";
inline constexpr const char* kIndicatorSummary = "indicator_summary.json";
inline constexpr const char* kKeywords = "keywords.csv";
inline constexpr const char* kAnnotationSample = "annotation_sample.ndjson";
inline constexpr const char* kGroupAnalysis = "group_analysis.json";
inline constexpr const char* kEvidence = "evidence.jsonl";
}  // namespace artifact

struct StageResult {
  Stage stage = Stage::Ingest;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;  // one line for the console
};

class Pipeline {
public:
  /// The corpus is loaded on first use: from <out>/corpus.log when the
  /// ingest stage has run, otherwise straight from config.corpus.
  explicit Pipeline(RunConfig config);
  /// Shares an already loaded corpus and uses `seed` instead of config.seed_file.
  Pipeline(RunConfig config, std::shared_ptr<const CorpusStore> store, std::optional<SeedSet> seed = std::nullopt);

  /// Serve is not a pipeline stage (the CLI starts the service itself).
  StageResult run(Stage stage);

  const RunConfig& config() const { return config_; }
  const CorpusStore& store();
  std::shared_ptr<const CorpusStore> shared_store() {
    store();
    return store_;
  }
  const SeedSet& seed();
  std::int64_t reference_utc();

private:
  std::filesystem::path path(const char* name) const { return config_.out / name; }
  void snapshot() const;

  StageResult ingest();
  StageResult synth();
  StageResult prefilter_stage();
  StageResult features();
  StageResult train_stage();
  StageResult cv();
  StageResult detect_stage();
  StageResult validate();
  StageResult group_analyze();
  StageResult report();

  RunConfig config_;
  std::shared_ptr<const CorpusStore> store_;
  std::optional<SeedSet> seed_;
};

}  // namespace trollscope
