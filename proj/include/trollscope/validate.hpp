#pragma once

// Per-account validation indicators: live status, deleted posts, creation
// day shared with a seed account, and topical keyword use. Also the
// annotation helpers (random sample of undetected accounts, Cohen's kappa).

#include "trollscope/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

enum class AccountStatus { Active, Suspended, Deleted, Unknown };
std::string_view to_string(AccountStatus s);
AccountStatus parse_account_status(std::string_view text);

/// 403 => Suspended, 404 => Deleted, 2xx => Active, anything else Unknown.
AccountStatus status_from_http(int http_status);

struct LivePost {
  std::string id;
  std::int64_t created_utc = 0;
};

struct ProfileResponse {
  int http_status = 0;
  std::optional<std::int64_t> creation_utc;
};

/// Read-only view of the live platform. Implementations throw
/// Error(TransportError) when the request could not be completed.
class LivePlatformClient {
public:
  virtual ~LivePlatformClient() = default;
  virtual ProfileResponse profile(const std::string& account) = 0;
  /// Most recent posts, newest first, at most kLiveListingCap of them.
  virtual std::vector<LivePost> recent_posts(const std::string& account) = 0;
};

inline constexpr std::size_t kLiveListingCap = 1000;

/// Fixture-backed client. Fixture JSON:
///   {"accounts": {"name": {"status": 200, "created_utc": 0,
///                          "posts": [{"id": "...", "created_utc": 0}],
///                          "transport_failures": 0}}}
/// Unknown accounts answer 404. `transport_failures` makes the first N calls
/// for that account throw TransportError.
class MockPlatformClient : public LivePlatformClient {
public:
  struct Entry {
    int status = 200;
    std::optional<std::int64_t> created_utc;
    std::vector<LivePost> posts;
    int transport_failures = 0;
  };

  MockPlatformClient() = default;
  explicit MockPlatformClient(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}
  static MockPlatformClient from_json(std::string_view json);
  static MockPlatformClient from_file(const std::filesystem::path& path);

  void set(const std::string& account, Entry entry);
  ProfileResponse profile(const std::string& account) override;
  std::vector<LivePost> recent_posts(const std::string& account) override;
  std::size_t calls() const { return calls_; }

private:
  Entry* lookup(const std::string& account);

  std::map<std::string, Entry> entries_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::size_t calls_ = 0;
};

std::string format_live_fixture(const std::map<std::string, MockPlatformClient::Entry>& entries);

/// Token bucket shared by every caller. `now` and `sleep` are injectable so
/// tests run without real waiting.
class RateLimiter {
public:
  using Clock = std::function<double()>;  // seconds
  using Sleep = std::function<void(double)>;

  RateLimiter(double rate_per_second, double burst, Clock now = {}, Sleep sleep = {});
  void acquire();
  std::size_t waits() const { return waits_; }

private:
  double rate_, burst_, tokens_, last_;
  Clock now_;
  Sleep sleep_;
  std::mutex mutex_;
  std::size_t waits_ = 0;
};

/// Decorator applying a RateLimiter to every call of the wrapped client.
class RateLimitedClient : public LivePlatformClient {
public:
  RateLimitedClient(LivePlatformClient& inner, RateLimiter& limiter) : inner_(inner), limiter_(limiter) {}
  ProfileResponse profile(const std::string& account) override;
  std::vector<LivePost> recent_posts(const std::string& account) override;

private:
  LivePlatformClient& inner_;
  RateLimiter& limiter_;
};

struct StatusCheck {
  AccountStatus status = AccountStatus::Unknown;
  std::optional<std::int64_t> creation_utc;
  int attempts = 0;
  int transport_failures = 0;
};

/// Retries transport failures up to `max_attempts` times; still failing => Unknown.
StatusCheck check_active_status(LivePlatformClient& client, const std::string& account, int max_attempts = 3);

inline constexpr std::int64_t kIndeterminate = -1;

/// Archived posts by the account that are no newer than now but not older
/// than the oldest live post, and missing from the live listing. Returns
/// kIndeterminate when the listing hit the cap.
std::int64_t detect_deletions(LivePlatformClient& client, const std::string& account, const CorpusStore& store);
std::int64_t count_deletions(std::span<const LivePost> live, std::span<const Post> archived);

struct CreationClusterResult {
  std::map<std::string, std::vector<std::string>> flagged;  // account -> seed accounts sharing its day
  std::size_t skipped = 0;                                   // creation date unknown
};

/// `seed_days` maps a UTC day number to the seed accounts created on it.
CreationClusterResult creation_date_clusters(
    std::span<const std::pair<std::string, std::optional<std::int64_t>>> accounts,
    const std::map<std::int64_t, std::vector<std::string>>& seed_days);

struct Keyword {
  std::string word;
  double score = 0;
};

/// TF over the troll documents as one bag (relative frequency) times
/// ln(N/df) over the full corpus documents. Only positive scores are ranked;
/// ties break lexicographically. Throws EmptyCorpus.
std::vector<Keyword> tfidf_top_keywords(std::span<const std::string> troll_docs, std::span<const std::string> full_docs,
                                        std::size_t k = 10);

/// Text of a post as a document: title and body joined.
std::string post_text(const Post& post);

std::set<std::string> keyword_presence(std::string_view account, const CorpusStore& store,
                                       std::span<const std::string> keywords);

struct IndicatorReport {
  std::string account;
  AccountStatus status = AccountStatus::Unknown;
  std::int64_t deleted_posts = 0;  // kIndeterminate when unknown
  bool same_day_as_seed = false;
  std::vector<std::string> matched_seed;
  std::set<std::string> keyword_hits;
  int status_attempts = 0;

  int indicators_met() const;
};

struct ValidationInputs {
  const CorpusStore& store;
  const SeedSet& seed;
  std::vector<std::string> keywords;
  std::map<std::int64_t, std::vector<std::string>> seed_days;
};

/// Collects seed creation days through the client.
std::map<std::int64_t, std::vector<std::string>> seed_creation_days(LivePlatformClient& client, const SeedSet& seed);

IndicatorReport validate_account(LivePlatformClient& client, const std::string& account,
                                 const ValidationInputs& inputs);

std::string format_report_jsonl(std::span<const IndicatorReport> reports);
std::vector<IndicatorReport> parse_report_jsonl(std::string_view text);

/// Counts of reports by indicators_met, index 0..4.
std::array<std::size_t, 5> indicator_summary(std::span<const IndicatorReport> reports);

/// Uniform sample without replacement (input sorted first, so order of the
/// input never matters). Throws InsufficientAccounts.
std::vector<std::string> sample_undetected(std::vector<std::string> undetected, std::size_t n, std::uint64_t rng_seed);

/// Throws LengthMismatch. Chance agreement of 1 gives 0.
double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);
double cohen_kappa(std::span<const int> a, std::span<const int> b);

}  // namespace trollscope
