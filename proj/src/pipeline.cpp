#include "trollscope/pipeline.hpp"

#include "trollscope/classify.hpp"
#include "trollscope/error.hpp"
#include "trollscope/features.hpp"
#include "trollscope/io.hpp"
#include "trollscope/langmodel.hpp"
#include "trollscope/prefilter.hpp"
#include "trollscope/synth.hpp"
#include "trollscope/text.hpp"
#include "trollscope/threads.hpp"
#include "trollscope/timeseries.hpp"
#include "trollscope/validate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace trollscope {

using nlohmann::ordered_json;

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::Ingest, "ingest"},     {Stage::Synth, "synth"},     {Stage::Prefilter, "prefilter"},
    {Stage::Features, "features"}, {Stage::Train, "train"},     {Stage::Cv, "cv"},
    {Stage::Detect, "detect"},     {Stage::Validate, "validate"}, {Stage::GroupAnalyze, "group-analyze"},
    {Stage::Report, "report"},     {Stage::Serve, "serve"}};

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void require(const std::filesystem::path& p, std::string_view stage) {
  if (!std::filesystem::exists(p))
    throw Error(ErrorCode::MissingInput, p.string() + " not found; run the " + std::string(stage) + " stage first");
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

Stage parse_stage(std::string_view name) {
  for (auto [s, n] : kStageNames)
    if (n == name) return s;
  throw Error(ErrorCode::InvalidArgument, "unknown stage: " + std::string(name));
}

std::string_view to_string(Stage stage) {
  for (auto [s, n] : kStageNames)
    if (s == stage) return n;
  return "?";
}

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
  auto fallback = [&](std::filesystem::path& field, const char* name) {
    if (field.empty() && std::filesystem::exists(config_.out / name)) field = config_.out / name;
  };
  if (config_.corpus.empty() && std::filesystem::exists(config_.out / "corpus.ndjson"))
    config_.corpus.push_back(config_.out / "corpus.ndjson");
  fallback(config_.seed_file, artifact::kSeed);
  fallback(config_.live_fixture, "live_fixture.json");
}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<const CorpusStore> store, std::optional<SeedSet> seed)
    : config_(std::move(config)), store_(std::move(store)), seed_(std::move(seed)) {}

const CorpusStore& Pipeline::store() {
  if (store_) return *store_;
  auto owned = std::make_shared<CorpusStore>();
  if (std::filesystem::exists(path(artifact::kCorpusLog))) {
    *owned = CorpusStore::open_log(path(artifact::kCorpusLog));
  } else {
    if (config_.corpus.empty()) throw Error(ErrorCode::MissingInput, "no corpus configured (set corpus = <path>)");
    ingest_partitions(config_.corpus, *owned, config_.threads);
  }
  store_ = std::move(owned);
  return *store_;
}

const SeedSet& Pipeline::seed() {
  if (!seed_) {
    if (config_.seed_file.empty()) throw Error(ErrorCode::MissingInput, "no seed file configured (set seed_file = <path>)");
    seed_ = load_seed_file(config_.seed_file);
  }
  if (!config_.seed_label.empty()) seed_->label = config_.seed_label;
  return *seed_;
}

std::int64_t Pipeline::reference_utc() {
  return config_.reference_utc ? config_.reference_utc : store().max_created_utc();
}

void Pipeline::snapshot() const {
  std::filesystem::create_directories(config_.out);
  write_file_atomic(path(artifact::kConfig), format_config(config_));
}

StageResult Pipeline::run(Stage stage) {
  snapshot();
  switch (stage) {
    case Stage::Ingest: return ingest();
    case Stage::Synth: return synth();
    case Stage::Prefilter: return prefilter_stage();
    case Stage::Features: return features();
    case Stage::Train: return train_stage();
    case Stage::Cv: return cv();
    case Stage::Detect: return detect_stage();
    case Stage::Validate: return validate();
    case Stage::GroupAnalyze: return group_analyze();
    case Stage::Report: return report();
    case Stage::Serve: break;
  }
  throw Error(ErrorCode::InvalidArgument, "serve is not a pipeline stage");
}

// ---------------------------------------------------------------------------

StageResult Pipeline::ingest() {
  if (config_.corpus.empty()) throw Error(ErrorCode::MissingInput, "no corpus configured (set corpus = <path>)");
  auto log = path(artifact::kCorpusLog);
  std::filesystem::remove(log);
  auto owned = std::make_shared<CorpusStore>();
  owned->attach_log(log);
  IngestStats stats = ingest_partitions(config_.corpus, *owned, config_.threads);
  owned->flush_log();
  ordered_json j = {{"parsed", stats.parsed},
                    {"skipped", stats.skipped},
                    {"malformed", stats.malformed},
                    {"duplicates", stats.duplicates},
                    {"posts", owned->size()},
                    {"authors", owned->authors().size()}};
  write_file_atomic(path(artifact::kIngestStats), dump(j));
  std::string summary = "ingested " + std::to_string(stats.parsed) + " records, skipped " +
                        std::to_string(stats.skipped) + " (" + std::to_string(stats.malformed) + " malformed, " +
                        std::to_string(stats.duplicates) + " duplicate)";
  store_ = std::move(owned);
  return {Stage::Ingest, {log, path(artifact::kIngestStats)}, summary};
}

StageResult Pipeline::synth() {
  SyntheticCampaign c = generate_campaign(config_.synth);
  write_campaign(c, config_.out);
  return {Stage::Synth,
          {path("corpus.ndjson"), path("labels.csv"), path("live_fixture.json"), path(artifact::kSeed)},
          "generated " + std::to_string(c.posts.size()) + " posts for " + std::to_string(c.labels.size()) +
              " accounts (" + std::to_string(config_.synth.n_trolls) + " trolls, seed of " +
              std::to_string(c.seed.names.size()) + ")"};
}

StageResult Pipeline::prefilter_stage() {
  const SeedSet& s = seed();
  CandidateSet c = prefilter(store(), s, config_.prefilter);
  write_file_atomic(path(artifact::kCandidates), format_candidate_file(c, s, config_.prefilter));
  std::vector<std::filesystem::path> out{path(artifact::kCandidates)};
  if (std::filesystem::weakly_canonical(config_.seed_file) != std::filesystem::weakly_canonical(path(artifact::kSeed))) {
    write_file_atomic(path(artifact::kSeed), format_seed_file(s));
    out.push_back(path(artifact::kSeed));
  }
  return {Stage::Prefilter, out,
          std::to_string(c.all.size()) + " candidates (" + std::to_string(c.same_title.size()) + " same title, " +
              std::to_string(c.commenters.size()) + " commenters)"};
}

StageResult Pipeline::features() {
  require(path(artifact::kCandidates), "prefilter");
  auto candidates = load_account_list(path(artifact::kCandidates));
  const SeedSet& s = seed();
  auto table = extract_matrix(candidates, store(), s, reference_utc(), config_.threads);
  std::vector<std::string> seed_names(s.names.begin(), s.names.end());
  auto seed_table = extract_matrix(seed_names, store(), s, reference_utc(), config_.threads);
  write_file_atomic(path(artifact::kFeatures), format_feature_csv(table));
  write_file_atomic(path(artifact::kSeedFeatures), format_feature_csv(seed_table));
  return {Stage::Features,
          {path(artifact::kFeatures), path(artifact::kSeedFeatures)},
          "features for " + std::to_string(table.rows.size()) + " candidates and " +
              std::to_string(seed_table.rows.size()) + " seed accounts (" +
              std::to_string(seed_table.missing_count()) + " seed accounts without archived posts)"};
}

StageResult Pipeline::train_stage() {
  require(path(artifact::kFeatures), "features");
  require(path(artifact::kSeedFeatures), "features");
  FeatureTable candidates = parse_feature_csv(read_file(path(artifact::kFeatures)));
  FeatureTable seed_all = parse_feature_csv(read_file(path(artifact::kSeedFeatures)));

  FeatureTable positives;
  for (std::size_t i = 0; i < seed_all.rows.size(); ++i)
    if (!seed_all.rows[i].no_archived_posts) {
      positives.accounts.push_back(seed_all.accounts[i]);
      positives.rows.push_back(seed_all.rows[i]);
    }

  std::function<bool(const std::string&)> exclude;
  std::optional<MockPlatformClient> client;
  if (config_.exclude_suspended && !config_.live_fixture.empty()) {
    client.emplace(MockPlatformClient::from_file(config_.live_fixture));
    exclude = [&](const std::string& name) {
      return check_active_status(*client, name).status == AccountStatus::Suspended;
    };
  }
  CandidateSet pool;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < candidates.accounts.size(); ++i) {
    if (candidates.rows[i].no_archived_posts) continue;
    pool.all.insert(candidates.accounts[i]);
    row_of[candidates.accounts[i]] = i;
  }
  auto negative_names =
      sample_negative_class(pool, seed(), positives.rows.size(), exclude, config_.negative_seed());
  FeatureTable negatives;
  for (const auto& n : negative_names) {
    negatives.accounts.push_back(n);
    negatives.rows.push_back(candidates.rows[row_of.at(n)]);
  }
  TrainingSet set = make_training_set(positives, negatives);
  set.seed_label = seed().label;
  set.negative_sampling_seed = config_.negative_seed();
  Hyperparams hp = config_.hyper;
  hp.threads = config_.threads;
  Model model = train(config_.classifier, set, hp, config_.model_seed());
  write_file_atomic(path(artifact::kTraining), format_training_csv(set));
  write_file_atomic(path(artifact::kModel), serialize_model(model));
  return {Stage::Train,
          {path(artifact::kTraining), path(artifact::kModel)},
          "trained " + std::string(to_string(config_.classifier)) + " on " + std::to_string(set.size()) + " rows"};
}

StageResult Pipeline::cv() {
  require(path(artifact::kTraining), "train");
  TrainingSet set = parse_training_csv(read_file(path(artifact::kTraining)));
  CVReport r = cross_validate(config_.classifier, set, config_.hyper, config_.k_folds, config_.fold_seed());
  write_file_atomic(path(artifact::kCvReport), format_cv_report_json(r));
  return {Stage::Cv,
          {path(artifact::kCvReport)},
          [&] {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s %zu-fold: precision %.4f recall %.4f accuracy %.4f F1 %.4f",
                          std::string(to_string(r.kind)).c_str(), r.k_folds, r.mean_precision, r.mean_recall,
                          r.mean_accuracy, r.mean_f1);
            return std::string(buf);
          }()};
}

StageResult Pipeline::detect_stage() {
  require(path(artifact::kModel), "train");
  require(path(artifact::kFeatures), "features");
  Model model = deserialize_model(read_file(path(artifact::kModel)));
  FeatureTable table = parse_feature_csv(read_file(path(artifact::kFeatures)));
  auto detections = detect(model, table);
  write_file_atomic(path(artifact::kDetections), format_detection_csv(detections));
  auto trolls = std::count_if(detections.begin(), detections.end(), [](auto& d) { return d.label == Label::Troll; });
  return {Stage::Detect,
          {path(artifact::kDetections)},
          std::to_string(trolls) + " of " + std::to_string(detections.size()) + " candidates classified as trolls"};
}

StageResult Pipeline::validate() {
  require(path(artifact::kDetections), "detect");
  if (config_.live_fixture.empty())
    throw Error(ErrorCode::MissingInput, "validation needs live_fixture (mock platform state)");
  MockPlatformClient mock = MockPlatformClient::from_file(config_.live_fixture);
  std::optional<RateLimiter> limiter;
  std::optional<RateLimitedClient> limited;
  LivePlatformClient* client = &mock;
  if (config_.rate_limit > 0) {
    limiter.emplace(config_.rate_limit, config_.rate_limit);
    limited.emplace(mock, *limiter);
    client = &*limited;
  }

  const CorpusStore& st = store();
  const SeedSet& s = seed();
  std::vector<std::string> troll_docs, full_docs;
  for (const auto& name : s.names)
    for (auto i : st.by_author(name)) troll_docs.push_back(post_text(st.at(i)));
  for (const Post& p : st.posts()) full_docs.push_back(post_text(p));
  auto keywords = tfidf_top_keywords(troll_docs, full_docs, config_.keyword_count);
  std::string kw_csv = "word,score\n";
  std::vector<std::string> kw_words;
  for (const auto& k : keywords) {
    kw_csv += k.word + "," + format_double(k.score) + "\n";
    kw_words.push_back(k.word);
  }

  ValidationInputs inputs{st, s, config_.validate_keywords ? kw_words : std::vector<std::string>{}, {}};
  if (config_.validate_creation) inputs.seed_days = seed_creation_days(*client, s);

  auto detections = parse_detection_csv(read_file(path(artifact::kDetections)));
  std::vector<IndicatorReport> reports;
  std::vector<std::string> undetected;
  for (const auto& d : detections) {
    if (d.label != Label::Troll) {
      undetected.push_back(d.account);
      continue;
    }
    IndicatorReport r = validate_account(*client, d.account, inputs);
    if (!config_.validate_status) r.status = AccountStatus::Unknown;
    if (!config_.validate_deletions) r.deleted_posts = kIndeterminate;
    reports.push_back(std::move(r));
  }
  auto hist = indicator_summary(reports);
  std::size_t at_least_one = reports.size() - hist[0];
  ordered_json summary = {{"accounts", reports.size()},
                          {"histogram", hist},
                          {"at_least_one", at_least_one},
                          {"keywords", kw_words}};

  std::vector<std::filesystem::path> out{path(artifact::kIndicators), path(artifact::kIndicatorSummary),
                                         path(artifact::kKeywords)};
  const std::size_t sample_n = 20;
  if (undetected.size() >= sample_n) {
    auto sample = sample_undetected(undetected, sample_n, config_.sample_seed());
    std::sort(sample.begin(), sample.end());
    std::string lines;
    for (const auto& a : sample)
      for (const Post& p : st.query(QueryKind::ByAuthor, a)) lines += to_record_line(p) + "\n";
    write_file_atomic(path(artifact::kAnnotationSample), lines);
    summary["annotation_sample"] = sample;
    out.push_back(path(artifact::kAnnotationSample));
  }
  write_file_atomic(path(artifact::kIndicators), format_report_jsonl(reports));
  write_file_atomic(path(artifact::kIndicatorSummary), dump(summary));
  write_file_atomic(path(artifact::kKeywords), kw_csv);
  return {Stage::Validate, out,
          std::to_string(at_least_one) + " of " + std::to_string(reports.size()) +
              " detected accounts meet at least one indicator"};
}

StageResult Pipeline::group_analyze() {
  require(path(artifact::kDetections), "detect");
  const CorpusStore& st = store();
  const SeedSet& s = seed();
  auto detections = parse_detection_csv(read_file(path(artifact::kDetections)));
  std::vector<std::string> known(s.names.begin(), s.names.end()), detected, benign;
  for (const auto& d : detections) (d.label == Label::Troll ? detected : benign).push_back(d.account);
  std::sort(detected.begin(), detected.end());
  if (detected.empty()) throw Error(ErrorCode::EmptyCohort, "no detected accounts to analyze");
  if (benign.empty()) throw Error(ErrorCode::EmptyCohort, "no non-troll candidates to compare against");
  std::sort(benign.begin(), benign.end());
  Rng rng(config_.sample_seed() ^ 0x9e37);
  auto nontroll = sample_without_replacement(benign, std::max(detected.size(), known.size()), rng);
  std::sort(nontroll.begin(), nontroll.end());

  std::vector<std::filesystem::path> out{path(artifact::kGroupAnalysis)};
  ordered_json result;
  result["cohorts"] = {{"known", known.size()}, {"detected", detected.size()}, {"nontroll", nontroll.size()}};

  // Language models.
  struct Cohort {
    std::string name;
    std::vector<Sentence> sentences;
    std::optional<EmbeddingModel> model;
  };
  std::vector<Cohort> cohorts{{"known", cohort_sentences(st, known), {}},
                              {"detected", cohort_sentences(st, detected), {}},
                              {"nontroll", cohort_sentences(st, nontroll), {}}};
  for (auto& c : cohorts) {
    try {
      CbowConfig cc = config_.cbow;
      cc.rng_seed = config_.model_seed();
      c.model = train_cbow(c.sentences, cc);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyVocabulary) throw;
    }
  }
  std::vector<std::string> keywords = config_.group_keywords;
  if (keywords.empty() && std::filesystem::exists(path(artifact::kKeywords))) {
    for (const auto& line : split(read_file(path(artifact::kKeywords)), '\n')) {
      auto cells = split(line, ',');
      if (cells.size() == 2 && cells[0] != "word") keywords.push_back(cells[0]);
    }
  }
  ordered_json rows = ordered_json::array();
  Cohort& kn = cohorts[0];
  Cohort& de = cohorts[1];
  Cohort& nt = cohorts[2];
  for (const auto& kw : keywords) {
    ordered_json row = {{"word", kw}};
    bool all = kn.model && de.model && nt.model && kn.model->contains(kw) && de.model->contains(kw) &&
               nt.model->contains(kw);
    if (all) {
      double sim_d = compare_models(*de.model, *kn.model, kw);
      double sim_n = compare_models(*nt.model, *kn.model, kw);
      auto n_d = sentences_containing(de.sentences, kw), n_n = sentences_containing(nt.sentences, kw);
      row["detected_vs_known"] = sim_d;
      row["nontroll_vs_known"] = sim_n;
      row["messages_detected"] = n_d;
      row["messages_nontroll"] = n_n;
      ZTest z = two_proportion_ztest(std::clamp(sim_d, 0.0, 1.0), n_d, std::clamp(sim_n, 0.0, 1.0), n_n);
      row["z"] = z.z;
      row["p_value"] = z.p_value;
    } else {
      row["skipped"] = "keyword missing from at least one cohort vocabulary";
    }
    ordered_json graphs = ordered_json::object();
    for (auto& c : cohorts) {
      if (!c.model || !c.model->contains(kw)) continue;
      SimilarityGraph g = config_.graph_threshold > 0
                              ? build_similarity_graph(*c.model, kw, config_.graph_threshold)
                              : build_similarity_graph_for_size(*c.model, kw, config_.graph_target_nodes);
      assign_communities(g);
      auto file = path(("graph_" + c.name + "_" + kw + ".graphml").c_str());
      write_file_atomic(file, format_graphml(g));
      out.push_back(file);
      int communities = g.community.empty() ? 0 : *std::max_element(g.community.begin(), g.community.end()) + 1;
      graphs[c.name] = {{"threshold", g.threshold},
                        {"nodes", g.nodes.size()},
                        {"edges", g.edges.size()},
                        {"communities", communities},
                        {"modularity", finite_or_zero(g.modularity)}};
    }
    row["graphs"] = graphs;
    rows.push_back(row);
  }
  result["keywords"] = rows;

  // Activity time series.
  std::int64_t first = std::numeric_limits<std::int64_t>::max(), last = std::numeric_limits<std::int64_t>::min();
  for (const Post& p : st.posts()) {
    first = std::min(first, utc_day(p.created_utc));
    last = std::max(last, utc_day(p.created_utc));
  }
  ordered_json series = ordered_json::object();
  for (PostKind kind : {PostKind::Comment, PostKind::Submission}) {
    std::string kname = kind == PostKind::Comment ? "comments" : "submissions";
    std::map<std::string, DailySeries> by_cohort;
    for (auto& [name, members] : {std::pair{"known", &known}, std::pair{"detected", &detected},
                                  std::pair{"nontroll", &nontroll}}) {
      std::set<std::string> set(members->begin(), members->end());
      DailySeries ds = build_series(st, set, kind, first, last, name);
      auto file = path(("series_" + std::string(name) + "_" + kname + ".csv").c_str());
      write_file_atomic(file, format_series_csv(ds));
      out.push_back(file);
      by_cohort.emplace(name, std::move(ds));
    }
    const auto& k = by_cohort.at("known").values;
    ordered_json entry;
    for (const char* other : {"detected", "nontroll"}) {
      const auto& v = by_cohort.at(other).values;
      ordered_json cmp;
      cmp["pearson"] = k.size() >= 2 ? optional_json(pearson(v, k)) : ordered_json(nullptr);
      int max_lag = std::min<int>(config_.max_lag, static_cast<int>((k.size() - 1) / 2));
      cmp["max_lag"] = max_lag;
      try {
        LagResult lag = xcorr_lag(k, v, max_lag);
        cmp["lag"] = lag.lag;
        cmp["lag_correlation"] = lag.correlation;
      } catch (const Error&) {
        cmp["lag"] = nullptr;
      }
      entry[std::string(other) + "_vs_known"] = cmp;
    }
    series[kname] = entry;
  }
  result["time_series"] = series;

  // Interaction fractions: trolls (known and detected) against non-trolls.
  std::vector<std::string> trolls = known;
  trolls.insert(trolls.end(), detected.begin(), detected.end());
  ordered_json ks = ordered_json::object();
  for (auto m : {FractionMetric::CommentedOnStartedBySameClass, FractionMetric::CoCommented, FractionMetric::SameTitle}) {
    auto a = fraction_distribution(st, trolls, m), b = fraction_distribution(st, nontroll, m);
    ks[std::string(to_string(m))] = ks_statistic(a, b);
  }
  result["ks_statistic"] = ks;

  try {
    auto e = engagement_comparison(st, detected, nontroll);
    result["engagement"] = {{"detected_comments", e.comments_a}, {"detected_total_score", e.total_score_a},
                            {"detected_mean_score", e.mean_score_a}, {"nontroll_comments", e.comments_b},
                            {"nontroll_total_score", e.total_score_b}, {"nontroll_mean_score", e.mean_score_b}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyCohort) throw;
    result["engagement"] = nullptr;
  }

  write_file_atomic(path(artifact::kGroupAnalysis), dump(result));
  return {Stage::GroupAnalyze, out,
          "group analysis over " + std::to_string(keywords.size()) + " keywords and " +
              std::to_string(detected.size()) + " detected accounts"};
}

StageResult Pipeline::report() {
  require(path(artifact::kDetections), "detect");
  require(path(artifact::kFeatures), "features");
  const CorpusStore& st = store();
  auto detections = parse_detection_csv(read_file(path(artifact::kDetections)));
  FeatureTable table = parse_feature_csv(read_file(path(artifact::kFeatures)));
  std::map<std::string, std::size_t> feature_row;
  for (std::size_t i = 0; i < table.accounts.size(); ++i) feature_row[table.accounts[i]] = i;
  std::map<std::string, IndicatorReport> indicators;
  if (std::filesystem::exists(path(artifact::kIndicators)))
    for (auto& r : parse_report_jsonl(read_file(path(artifact::kIndicators)))) indicators.emplace(r.account, r);
  ordered_json group = nullptr;
  if (std::filesystem::exists(path(artifact::kGroupAnalysis)))
    group = ordered_json::parse(read_file(path(artifact::kGroupAnalysis)));

  std::set<std::string> detected_set;
  for (const auto& d : detections)
    if (d.label == Label::Troll) detected_set.insert(d.account);

  std::string lines;
  std::size_t n = 0;
  for (const auto& d : detections) {
    if (d.label != Label::Troll) continue;
    ++n;
    ordered_json e;
    e["account"] = d.account;
    e["score"] = d.score;
    e["label"] = std::string(to_string(d.label));
    ordered_json feats = ordered_json::object();
    if (auto it = feature_row.find(d.account); it != feature_row.end()) {
      FeatureRow r = table.rows[it->second].row();
      for (int j = 0; j < kFeatureCount; ++j) feats[std::string(kFeatureNames[static_cast<std::size_t>(j)])] = r(j);
    }
    e["features"] = feats;
    if (auto it = indicators.find(d.account); it != indicators.end()) {
      const auto& r = it->second;
      e["indicators"] = {{"status", std::string(to_string(r.status))},
                         {"deleted_posts", r.deleted_posts},
                         {"same_day_as_seed", r.same_day_as_seed},
                         {"matched_seed", r.matched_seed},
                         {"keyword_hits", r.keyword_hits}};
      e["indicators_met"] = r.indicators_met();
      e["keyword_hits"] = r.keyword_hits;
    } else {
      e["indicators"] = nullptr;
      e["indicators_met"] = 0;
      e["keyword_hits"] = ordered_json::array();
    }

    // Up to three most recent threads the account took part in.
    auto posts = st.query(QueryKind::ByAuthor, d.account);
    std::vector<std::string> thread_ids;
    for (auto it = posts.rbegin(); it != posts.rend() && thread_ids.size() < 3; ++it) {
      std::string sid = it->is_comment() ? *it->link_id : it->id;
      if (std::find(thread_ids.begin(), thread_ids.end(), sid) == thread_ids.end()) thread_ids.push_back(sid);
    }
    ordered_json threads = ordered_json::array();
    for (const auto& sid : thread_ids) {
      std::string text = to_indented_text(build_thread(st, sid));
      auto tl = split(text, '\n');
      if (tl.size() > 40) {
        tl.resize(40);
        tl.push_back("...");
      }
      std::string joined;
      for (const auto& l : tl) joined += l + "\n";
      threads.push_back({{"submission", sid}, {"text", joined}});
    }
    e["sample_threads"] = threads;

    // Daily comments of the account and of the detected cohort over its last 30 active days.
    if (!posts.empty()) {
      std::int64_t last = utc_day(posts.back().created_utc), first = last - 29;
      DailySeries own = build_series(st, {d.account}, PostKind::Comment, first, last);
      DailySeries cohort = build_series(st, detected_set, PostKind::Comment, first, last);
      std::vector<std::int64_t> a, b;
      for (Eigen::Index i = 0; i < own.values.size(); ++i) {
        a.push_back(static_cast<std::int64_t>(own.values(i)));
        b.push_back(static_cast<std::int64_t>(cohort.values(i)));
      }
      e["activity"] = {{"start_day", format_day(first)}, {"account_comments", a}, {"detected_cohort_comments", b}};
    } else {
      e["activity"] = nullptr;
    }
    if (!group.is_null()) e["group_analysis"] = {{"ks_statistic", group.value("ks_statistic", ordered_json())},
                                                 {"time_series", group.value("time_series", ordered_json())}};
    lines += e.dump() + "\n";
  }
  write_file_atomic(path(artifact::kEvidence), lines);
  return {Stage::Report, {path(artifact::kEvidence)}, "evidence for " + std::to_string(n) + " detected accounts"};
}

}  // namespace trollscope
