#include "trollscope/validate.hpp"

#include "trollscope/error.hpp"
#include "trollscope/random.hpp"
#include "trollscope/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace trollscope {

using nlohmann::json;

std::string_view to_string(AccountStatus s) {
  switch (s) {
    case AccountStatus::Active: return "active";
    case AccountStatus::Suspended: return "suspended";
    case AccountStatus::Deleted: return "deleted";
    case AccountStatus::Unknown: return "unknown";
  }
  return "unknown";
}

AccountStatus parse_account_status(std::string_view text) {
  if (text == "active") return AccountStatus::Active;
  if (text == "suspended") return AccountStatus::Suspended;
  if (text == "deleted") return AccountStatus::Deleted;
  if (text == "unknown") return AccountStatus::Unknown;
  throw Error(ErrorCode::MalformedRecord, "unknown account status: " + std::string(text));
}

AccountStatus status_from_http(int http_status) {
  if (http_status == 403) return AccountStatus::Suspended;
  if (http_status == 404) return AccountStatus::Deleted;
  if (http_status >= 200 && http_status < 300) return AccountStatus::Active;
  return AccountStatus::Unknown;
}

// ---------------------------------------------------------------------------
// Mock client

MockPlatformClient MockPlatformClient::from_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("accounts") || !doc["accounts"].is_object())
    throw Error(ErrorCode::MalformedRecord, "live fixture must be an object with an \"accounts\" object");
  std::map<std::string, Entry> entries;
  try {
    for (auto& [name, v] : doc["accounts"].items()) {
      Entry e;
      e.status = v.value("status", 200);
      if (v.contains("created_utc") && !v["created_utc"].is_null()) e.created_utc = v["created_utc"].get<std::int64_t>();
      e.transport_failures = v.value("transport_failures", 0);
      if (v.contains("posts"))
        for (auto& p : v["posts"]) e.posts.push_back({p.at("id").get<std::string>(), p.at("created_utc").get<std::int64_t>()});
      std::sort(e.posts.begin(), e.posts.end(), [](const LivePost& a, const LivePost& b) {
        return a.created_utc != b.created_utc ? a.created_utc > b.created_utc : a.id < b.id;
      });
      entries.emplace(name, std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("live fixture: ") + ex.what());
  }
  return MockPlatformClient(std::move(entries));
}

MockPlatformClient MockPlatformClient::from_file(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

void MockPlatformClient::set(const std::string& account, Entry entry) {
  std::lock_guard lock(*mutex_);
  entries_[account] = std::move(entry);
}

MockPlatformClient::Entry* MockPlatformClient::lookup(const std::string& account) {
  ++calls_;
  auto it = entries_.find(account);
  if (it == entries_.end()) return nullptr;
  if (it->second.transport_failures > 0) {
    --it->second.transport_failures;
    throw Error(ErrorCode::TransportError, "simulated transport failure for " + account);
  }
  return &it->second;
}

ProfileResponse MockPlatformClient::profile(const std::string& account) {
  std::lock_guard lock(*mutex_);
  Entry* e = lookup(account);
  if (!e) return {404, std::nullopt};
  return {e->status, e->status >= 200 && e->status < 300 ? e->created_utc : std::nullopt};
}

std::vector<LivePost> MockPlatformClient::recent_posts(const std::string& account) {
  std::lock_guard lock(*mutex_);
  Entry* e = lookup(account);
  if (!e || e->status < 200 || e->status >= 300) return {};
  std::vector<LivePost> posts = e->posts;
  std::stable_sort(posts.begin(), posts.end(),
                   [](const LivePost& a, const LivePost& b) { return a.created_utc > b.created_utc; });
  if (posts.size() > kLiveListingCap) posts.resize(kLiveListingCap);
  return posts;
}

std::string format_live_fixture(const std::map<std::string, MockPlatformClient::Entry>& entries) {
  json accounts = json::object();
  for (const auto& [name, e] : entries) {
    json v = {{"status", e.status}};
    if (e.created_utc) v["created_utc"] = *e.created_utc;
    if (e.transport_failures) v["transport_failures"] = e.transport_failures;
    json posts = json::array();
    for (const auto& p : e.posts) posts.push_back({{"id", p.id}, {"created_utc", p.created_utc}});
    v["posts"] = std::move(posts);
    accounts[name] = std::move(v);
  }
  return json{{"accounts", accounts}}.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Rate limiting

namespace {

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

RateLimiter::RateLimiter(double rate_per_second, double burst, Clock now, Sleep sleep)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      now_(now ? std::move(now) : Clock(steady_seconds)),
      sleep_(sleep ? std::move(sleep) : Sleep([](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
      })) {
  if (!(rate_ > 0)) throw Error(ErrorCode::InvalidConfig, "rate limit must be positive");
  last_ = now_();
}

void RateLimiter::acquire() {
  std::lock_guard lock(mutex_);
  for (;;) {
    double t = now_();
    tokens_ = std::min(burst_, tokens_ + (t - last_) * rate_);
    last_ = t;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    ++waits_;
    sleep_((1.0 - tokens_) / rate_);
  }
}

ProfileResponse RateLimitedClient::profile(const std::string& account) {
  limiter_.acquire();
  return inner_.profile(account);
}

std::vector<LivePost> RateLimitedClient::recent_posts(const std::string& account) {
  limiter_.acquire();
  return inner_.recent_posts(account);
}

// ---------------------------------------------------------------------------
// Indicators

StatusCheck check_active_status(LivePlatformClient& client, const std::string& account, int max_attempts) {
  StatusCheck result;
  for (int i = 0; i < std::max(1, max_attempts); ++i) {
    ++result.attempts;
    try {
      ProfileResponse r = client.profile(account);
      result.status = status_from_http(r.http_status);
      result.creation_utc = r.creation_utc;
      return result;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      ++result.transport_failures;
    }
  }
  result.status = AccountStatus::Unknown;
  return result;
}

std::int64_t count_deletions(std::span<const LivePost> live, std::span<const Post> archived) {
  if (live.size() >= kLiveListingCap) return kIndeterminate;
  std::unordered_set<std::string_view> live_ids;
  std::int64_t oldest = std::numeric_limits<std::int64_t>::min();
  if (!live.empty()) oldest = std::numeric_limits<std::int64_t>::max();
  for (const auto& p : live) {
    live_ids.insert(p.id);
    oldest = std::min(oldest, p.created_utc);
  }
  std::int64_t deleted = 0;
  for (const auto& p : archived)
    if (p.created_utc >= oldest && !live_ids.contains(p.id)) ++deleted;
  return deleted;
}

std::int64_t detect_deletions(LivePlatformClient& client, const std::string& account, const CorpusStore& store) {
  auto live = client.recent_posts(account);
  auto archived = store.query(QueryKind::ByAuthor, account);
  return count_deletions(live, archived);
}

CreationClusterResult creation_date_clusters(
    std::span<const std::pair<std::string, std::optional<std::int64_t>>> accounts,
    const std::map<std::int64_t, std::vector<std::string>>& seed_days) {
  CreationClusterResult r;
  for (const auto& [name, created] : accounts) {
    if (!created) {
      ++r.skipped;
      continue;
    }
    auto it = seed_days.find(utc_day(*created));
    if (it == seed_days.end()) continue;
    std::vector<std::string> others;
    for (const auto& s : it->second)
      if (s != name) others.push_back(s);
    if (!others.empty()) r.flagged.emplace(name, std::move(others));
  }
  return r;
}

std::vector<Keyword> tfidf_top_keywords(std::span<const std::string> troll_docs, std::span<const std::string> full_docs,
                                        std::size_t k) {
  std::map<std::string, std::size_t> tf;
  std::size_t troll_tokens = 0;
  for (const auto& d : troll_docs)
    for (auto& w : tokenize(d)) {
      ++tf[w];
      ++troll_tokens;
    }
  std::unordered_map<std::string, std::size_t> df;
  std::size_t full_nonempty = 0;
  for (const auto& d : full_docs) {
    auto tokens = tokenize(d);
    if (!tokens.empty()) ++full_nonempty;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& w : tokens)
      if (tf.contains(w)) ++df[w];
  }
  if (troll_tokens == 0 || full_nonempty == 0)
    throw Error(ErrorCode::EmptyCorpus, "no tokens in troll or full corpus");

  const double n = static_cast<double>(full_docs.size());
  std::vector<Keyword> scored;
  for (const auto& [w, count] : tf) {
    auto it = df.find(w);
    if (it == df.end()) continue;
    double s = static_cast<double>(count) / static_cast<double>(troll_tokens) *
               std::log(n / static_cast<double>(it->second));
    if (s > 0) scored.push_back({w, s});
  }
  std::sort(scored.begin(), scored.end(), [](const Keyword& a, const Keyword& b) {
    return a.score != b.score ? a.score > b.score : a.word < b.word;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::string post_text(const Post& post) {
  std::string text = post.title.value_or("");
  if (post.body) {
    if (!text.empty()) text += '\n';
    text += *post.body;
  }
  return text;
}

std::set<std::string> keyword_presence(std::string_view account, const CorpusStore& store,
                                       std::span<const std::string> keywords) {
  std::set<std::string> wanted(keywords.begin(), keywords.end());
  std::set<std::string> hits;
  for (auto idx : store.by_author(account)) {
    for (auto& w : tokenize(post_text(store.at(idx))))
      if (wanted.contains(w)) hits.insert(w);
    if (hits.size() == wanted.size()) break;
  }
  return hits;
}

int IndicatorReport::indicators_met() const {
  return (status == AccountStatus::Suspended || status == AccountStatus::Deleted) + (deleted_posts > 0) +
         same_day_as_seed + !keyword_hits.empty();
}

std::map<std::int64_t, std::vector<std::string>> seed_creation_days(LivePlatformClient& client, const SeedSet& seed) {
  std::map<std::int64_t, std::vector<std::string>> days;
  for (const auto& name : seed.names) {
    auto check = check_active_status(client, name);
    if (check.creation_utc) days[utc_day(*check.creation_utc)].push_back(name);
  }
  return days;
}

IndicatorReport validate_account(LivePlatformClient& client, const std::string& account,
                                 const ValidationInputs& inputs) {
  IndicatorReport r;
  r.account = account;
  StatusCheck check = check_active_status(client, account);
  r.status = check.status;
  r.status_attempts = check.attempts;
  r.deleted_posts = kIndeterminate;
  if (check.status == AccountStatus::Active) {
    try {
      r.deleted_posts = detect_deletions(client, account, inputs.store);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
    }
  }
  std::pair<std::string, std::optional<std::int64_t>> one{account, check.creation_utc};
  auto clusters = creation_date_clusters(std::span(&one, 1), inputs.seed_days);
  if (auto it = clusters.flagged.find(account); it != clusters.flagged.end()) {
    r.same_day_as_seed = true;
    r.matched_seed = it->second;
  }
  r.keyword_hits = keyword_presence(account, inputs.store, inputs.keywords);
  return r;
}

std::string format_report_jsonl(std::span<const IndicatorReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    json j = {{"account", r.account},
              {"status", std::string(to_string(r.status))},
              {"deleted_posts", r.deleted_posts},
              {"same_day_as_seed", r.same_day_as_seed},
              {"matched_seed", r.matched_seed},
              {"keyword_hits", r.keyword_hits},
              {"status_attempts", r.status_attempts},
              {"indicators_met", r.indicators_met()}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<IndicatorReport> parse_report_jsonl(std::string_view text) {
  std::vector<IndicatorReport> out;
  for (const auto& line : split(text, '\n')) {
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "bad report line");
    try {
      IndicatorReport r;
      r.account = j.at("account").get<std::string>();
      r.status = parse_account_status(j.at("status").get<std::string>());
      r.deleted_posts = j.at("deleted_posts").get<std::int64_t>();
      r.same_day_as_seed = j.at("same_day_as_seed").get<bool>();
      r.matched_seed = j.at("matched_seed").get<std::vector<std::string>>();
      r.keyword_hits = j.at("keyword_hits").get<std::set<std::string>>();
      r.status_attempts = j.value("status_attempts", 0);
      out.push_back(std::move(r));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::MalformedRecord, std::string("report line: ") + ex.what());
    }
  }
  return out;
}

std::array<std::size_t, 5> indicator_summary(std::span<const IndicatorReport> reports) {
  std::array<std::size_t, 5> h{};
  for (const auto& r : reports) ++h[static_cast<std::size_t>(r.indicators_met())];
  return h;
}

std::vector<std::string> sample_undetected(std::vector<std::string> undetected, std::size_t n, std::uint64_t rng_seed) {
  if (undetected.size() < n)
    throw Error(ErrorCode::InsufficientAccounts,
                "need " + std::to_string(n) + " accounts, have " + std::to_string(undetected.size()));
  std::sort(undetected.begin(), undetected.end());
  Rng rng(rng_seed);
  return sample_without_replacement(std::move(undetected), n, rng);
}

namespace {

template <typename T>
double kappa_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "annotation lists differ in length");
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "no annotations");
  std::map<T, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    agree += a[i] == b[i];
  }
  const double n = static_cast<double>(a.size());
  double po = static_cast<double>(agree) / n;
  double pe = 0;
  for (const auto& [label, m] : marginals) pe += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  if (pe >= 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace

double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) { return kappa_impl(a, b); }
double cohen_kappa(std::span<const int> a, std::span<const int> b) { return kappa_impl(a, b); }

}  // namespace trollscope
