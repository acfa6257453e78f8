#pragma once

// Run configuration: a flat key = value text file. Every output directory
// gets a snapshot (run_config.txt) of the exact configuration that wrote it.

#include "trollscope/classify.hpp"
#include "trollscope/langmodel.hpp"
#include "trollscope/prefilter.hpp"
#include "trollscope/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace trollscope {

struct RunConfig {
  std::vector<std::filesystem::path> corpus;  // NDJSON partitions (plain, .gz or .zst)
  std::filesystem::path seed_file;
  std::filesystem::path out = "out";
  std::filesystem::path live_fixture;  // mock platform state for validation
  std::string seed_label;              // overrides the seed file's label when set

  std::uint64_t rng_seed = 42;
  std::int64_t reference_utc = 0;  // 0: latest post in the corpus
  unsigned threads = 1;

  PrefilterConfig prefilter;
  ModelKind classifier = ModelKind::RandomForest;
  Hyperparams hyper;
  std::size_t k_folds = 10;
  bool exclude_suspended = true;  // drop suspended accounts from the negative class (needs live_fixture)

  bool validate_status = true;
  bool validate_deletions = true;
  bool validate_creation = true;
  bool validate_keywords = true;
  std::size_t keyword_count = 10;
  double rate_limit = 0;  // platform requests per second, 0: unlimited

  CbowConfig cbow;
  std::vector<std::string> group_keywords;  // empty: the TF-IDF top keywords
  std::size_t graph_target_nodes = 100;
  double graph_threshold = 0;  // 0: bisection to graph_target_nodes
  int max_lag = 180;

  CampaignConfig synth;

  /// Seeds of the individual random steps, all derived from rng_seed.
  std::uint64_t negative_seed() const { return splitmix64(rng_seed ^ 0x01); }
  std::uint64_t model_seed() const { return splitmix64(rng_seed ^ 0x02); }
  std::uint64_t fold_seed() const { return splitmix64(rng_seed ^ 0x03); }
  std::uint64_t sample_seed() const { return splitmix64(rng_seed ^ 0x04); }
};

/// Applies one key = value assignment. Throws InvalidConfig for unknown keys
/// or unparseable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Parses a config file body: '#' comments, blank lines, "key = value".
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key with its current value; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

/// Documented keys with one-line descriptions, for --help and the README.
const std::vector<std::pair<std::string, std::string>>& config_keys();

}  // namespace trollscope
