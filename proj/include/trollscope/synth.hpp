#pragma once

// Synthetic Reddit-style corpora with a planted troll campaign and oracle
// labels. Trolls behave like everyone else for a while, then push keyword
// narratives, comment on each other's submissions, reply to each other and
// repost each other's titles.

#include "trollscope/classify.hpp"
#include "trollscope/corpus.hpp"
#include "trollscope/validate.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace trollscope {

struct CampaignConfig {
  std::size_t n_trolls = 50;
  std::size_t n_benign = 950;
  std::size_t seed_size = 20;  // trolls revealed in the seed file
  std::uint64_t rng_seed = 7;

  std::int64_t start_utc = 1'451'606'400;  // 2016-01-01
  int days = 730;
  int campaign_start_day = 365;            // trolls switch from normal to campaign behaviour
  std::vector<int> creation_wave_days = {-40, -39, 20};  // relative to start; trolls are created on these days

  double p_troll_comments_on_troll_submission = 0.9;
  double p_reply_to_troll_comment = 0.6;
  double p_same_title_repost = 0.4;
  double p_troll_keyword = 0.3;  // per word of troll campaign text

  double troll_normal_comments = 10;    // means of geometric counts
  double troll_campaign_comments = 60;
  std::size_t troll_min_campaign_comments = 20;  // added to the geometric count
  double troll_campaign_submissions = 6;
  double troll_normal_submissions = 3;
  double benign_comments = 40;
  double benign_submissions = 15;
  double benign_max_troll_engagement = 0.05;  // per-account extra chance to seek out campaign posts
  double p_benign_title_copy = 0.01;
  double p_benign_keyword = 0.02;
  double p_deleted_author = 0.005;
  int comment_window_days = 3;  // comments target submissions at most this old

  double troll_mean_score = 5.5;
  double benign_mean_score = 4.5;

  // Live platform state at validation time.
  double p_troll_suspended = 0.25;
  double p_troll_account_deleted = 0.05;
  double p_benign_suspended = 0.01;
  double p_benign_account_deleted = 0.01;
  double p_troll_post_deleted = 0.1;
  double p_benign_post_deleted = 0.01;

  std::vector<std::string> keywords = {"people", "money",  "crypto", "bitcoin", "trump",
                                       "police", "media",  "russia", "hillary", "vote"};

  void validate() const;  // throws InvalidConfig
};

struct SyntheticCampaign {
  std::vector<Post> posts;               // sorted by (created_utc, id)
  std::map<std::string, Label> labels;   // every generated account
  std::map<std::string, std::int64_t> creation_utc;
  SeedSet seed;
  std::map<std::string, MockPlatformClient::Entry> live;

  std::vector<std::string> accounts_with(Label label) const;
};

/// Deterministic in the config: identical configs give identical output.
SyntheticCampaign generate_campaign(const CampaignConfig& config);

/// corpus.ndjson, labels.csv, live_fixture.json and seed.txt under `dir`.
void write_campaign(const SyntheticCampaign& campaign, const std::filesystem::path& dir);

std::string format_labels_csv(const std::map<std::string, Label>& labels);
std::map<std::string, Label> parse_labels_csv(std::string_view csv);

CorpusStore load_campaign_store(const SyntheticCampaign& campaign);

}  // namespace trollscope
