#include "trollscope/config.hpp"

#include "trollscope/error.hpp"
#include "trollscope/io.hpp"
#include "trollscope/text.hpp"

#include <charconv>
#include <functional>

namespace trollscope {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig, "invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> out;
  for (auto& item : split(value, ','))
    if (auto t = trim(item); !t.empty()) out.emplace_back(t);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct Key {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TS_NUM(key, field, type, help)                                                                   \
  Key {                                                                                                  \
    key, help, [](RunConfig& c, std::string_view v) { c.field = parse_number<type>(key, v); },         \
        [](const RunConfig& c) {                                                                         \
          if constexpr (std::is_floating_point_v<type>) return format_double(static_cast<double>(c.field)); \
          else return std::to_string(c.field);                                                           \
        }                                                                                                \
  }
#define TS_BOOL(key, field, help)                                                                  \
  Key {                                                                                            \
    key, help, [](RunConfig& c, std::string_view v) { c.field = parse_bool(key, v); },            \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }                  \
  }
#define TS_PATH(key, field, help)                                                                  \
  Key {                                                                                            \
    key, help, [](RunConfig& c, std::string_view v) { c.field = std::filesystem::path(v); },      \
        [](const RunConfig& c) { return c.field.string(); }                                         \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"corpus", "comma-separated NDJSON partitions (.gz/.zst accepted)",
          [](RunConfig& c, std::string_view v) {
            c.corpus.clear();
            for (auto& p : parse_list(v)) c.corpus.emplace_back(p);
          },
          [](const RunConfig& c) {
            std::vector<std::string> s;
            for (const auto& p : c.corpus) s.push_back(p.string());
            return join(s);
          }},
      TS_PATH("seed_file", seed_file, "seed account list"),
      TS_PATH("out", out, "output directory"),
      TS_PATH("live_fixture", live_fixture, "mock platform fixture used by validation"),
      Key{"seed_label", "label recorded for the seed set (default: from the seed file)",
          [](RunConfig& c, std::string_view v) { c.seed_label = std::string(v); },
          [](const RunConfig& c) { return c.seed_label; }},
      TS_NUM("rng_seed", rng_seed, std::uint64_t, "master seed; every random step derives from it"),
      TS_NUM("reference_utc", reference_utc, std::int64_t, "time for account age (0: latest post)"),
      TS_NUM("threads", threads, unsigned, "worker threads for ingest, features and forest training"),
      TS_NUM("min_title_len", prefilter.min_title_len, std::size_t, "shortest title (code points) matched by prefilter"),
      Key{"classifier", "knn | decision_tree | random_forest | linear_svm",
          [](RunConfig& c, std::string_view v) { c.classifier = parse_model_kind(v); },
          [](const RunConfig& c) { return std::string(to_string(c.classifier)); }},
      TS_NUM("knn_k", hyper.knn_k, std::size_t, "neighbours for KNN"),
      TS_NUM("max_depth", hyper.max_depth, std::size_t, "tree depth limit (0: unlimited)"),
      TS_NUM("min_leaf", hyper.min_leaf, std::size_t, "minimum samples per leaf"),
      TS_NUM("n_trees", hyper.n_trees, std::size_t, "trees in the random forest"),
      TS_NUM("max_features", hyper.max_features, std::size_t, "features tried per split (0: all)"),
      TS_BOOL("bootstrap", hyper.bootstrap, "bootstrap rows per forest tree"),
      TS_NUM("svm_lambda", hyper.svm_lambda, double, "linear SVM regularization"),
      TS_NUM("svm_steps", hyper.svm_steps, std::size_t, "linear SVM subgradient steps"),
      TS_NUM("threshold", hyper.threshold, double, "decision threshold on the score"),
      TS_NUM("k_folds", k_folds, std::size_t, "cross-validation folds"),
      TS_BOOL("exclude_suspended", exclude_suspended, "drop suspended accounts from the negative class"),
      TS_BOOL("validate_status", validate_status, "check live account status"),
      TS_BOOL("validate_deletions", validate_deletions, "diff archived and live posts"),
      TS_BOOL("validate_creation", validate_creation, "compare creation days with the seed"),
      TS_BOOL("validate_keywords", validate_keywords, "look for the top TF-IDF keywords"),
      TS_NUM("rate_limit", rate_limit, double, "platform requests per second (0: unlimited)"),
      TS_NUM("keyword_count", keyword_count, std::size_t, "number of TF-IDF keywords"),
      TS_NUM("cbow_dim", cbow.dim, int, "embedding dimension"),
      TS_NUM("cbow_window", cbow.window, int, "context window on each side"),
      TS_NUM("cbow_negatives", cbow.negatives, int, "negative samples per word"),
      TS_NUM("cbow_epochs", cbow.epochs, int, "training epochs"),
      TS_NUM("cbow_min_count", cbow.min_count, std::size_t, "minimum word count"),
      TS_NUM("cbow_learning_rate", cbow.learning_rate, double, "initial learning rate"),
      Key{"group_keywords", "comma-separated keywords for group analysis (default: TF-IDF top keywords)",
          [](RunConfig& c, std::string_view v) { c.group_keywords = parse_list(v); },
          [](const RunConfig& c) { return join(c.group_keywords); }},
      TS_NUM("graph_target_nodes", graph_target_nodes, std::size_t, "similarity graph size target"),
      TS_NUM("graph_threshold", graph_threshold, double, "fixed similarity threshold (0: solve for the target size)"),
      TS_NUM("max_lag", max_lag, int, "largest cross-correlation lag in days"),
      TS_NUM("synth_n_trolls", synth.n_trolls, std::size_t, "planted trolls"),
      TS_NUM("synth_n_benign", synth.n_benign, std::size_t, "benign accounts"),
      TS_NUM("synth_seed_size", synth.seed_size, std::size_t, "trolls revealed in the seed file"),
      TS_NUM("synth_rng_seed", synth.rng_seed, std::uint64_t, "generator seed"),
      TS_NUM("synth_days", synth.days, int, "simulated days"),
      TS_NUM("synth_campaign_start_day", synth.campaign_start_day, int, "day trolls start the campaign"),
      TS_NUM("synth_p_troll_comments_on_troll_submission", synth.p_troll_comments_on_troll_submission, double,
             "chance a campaign comment targets a troll submission"),
      TS_NUM("synth_p_reply_to_troll_comment", synth.p_reply_to_troll_comment, double,
             "chance a campaign comment replies to a troll comment"),
      TS_NUM("synth_p_same_title_repost", synth.p_same_title_repost, double,
             "chance a campaign submission reuses a troll title"),
      TS_NUM("synth_p_troll_suspended", synth.p_troll_suspended, double, "troll accounts answering 403"),
      TS_NUM("synth_p_troll_post_deleted", synth.p_troll_post_deleted, double, "troll posts missing from the live listing"),
  };
  return table;
}

#undef TS_NUM
#undef TS_BOOL
#undef TS_PATH

}  // namespace

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : keys())
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  throw Error(ErrorCode::InvalidConfig, "unknown config key: " + std::string(key));
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config(read_file(path), std::move(base));
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const auto list = [] {
    std::vector<std::pair<std::string, std::string>> v;
    for (const auto& k : keys()) v.emplace_back(k.name, k.help);
    return v;
  }();
  return list;
}

}  // namespace trollscope
