#include "oracles.hpp"

#include "trollscope/error.hpp"
#include "trollscope/text.hpp"
#include "trollscope/validate.hpp"

#include <doctest.h>

#include <cmath>

using namespace trollscope;

namespace {

std::vector<LivePost> live_posts(std::initializer_list<std::pair<const char*, std::int64_t>> items) {
  std::vector<LivePost> out;
  for (auto [id, t] : items) out.push_back({id, t});
  return out;
}

}  // namespace

TEST_CASE("HTTP status mapping through the mock") {
  MockPlatformClient mock = MockPlatformClient::from_json(R"({"accounts": {
      "banned": {"status": 403},
      "gone": {"status": 404},
      "fine": {"status": 200, "created_utc": 1451606400},
      "weird": {"status": 500},
      "flaky": {"status": 200, "transport_failures": 2},
      "dead": {"status": 200, "transport_failures": 10}}})");
  CHECK(check_active_status(mock, "banned").status == AccountStatus::Suspended);
  CHECK(check_active_status(mock, "gone").status == AccountStatus::Deleted);
  CHECK(check_active_status(mock, "unlisted").status == AccountStatus::Deleted);
  StatusCheck fine = check_active_status(mock, "fine");
  CHECK(fine.status == AccountStatus::Active);
  CHECK(fine.creation_utc == 1451606400);
  CHECK(check_active_status(mock, "weird").status == AccountStatus::Unknown);
  StatusCheck flaky = check_active_status(mock, "flaky", 3);
  CHECK(flaky.status == AccountStatus::Active);
  CHECK(flaky.attempts == 3);
  CHECK(flaky.transport_failures == 2);
  StatusCheck dead = check_active_status(mock, "dead", 3);
  CHECK(dead.status == AccountStatus::Unknown);
  CHECK(dead.transport_failures == 3);
  CHECK(status_from_http(204) == AccountStatus::Active);
}

TEST_CASE("deletion counting") {
  std::vector<Post> archived;
  for (int i = 0; i < 10; ++i) archived.push_back(oracle::make_comment("p" + std::to_string(i), "a", 100 + i, "s", "s"));
  std::vector<LivePost> seven;
  for (int i = 3; i < 10; ++i) seven.push_back({"p" + std::to_string(i), 100 + i});

  SUBCASE("live equals archived") {
    std::vector<Post> same(archived.begin() + 3, archived.end());
    CHECK(count_deletions(seven, same) == 0);
  }
  SUBCASE("archived 10, live 7 inside the window") {
    std::vector<LivePost> live = live_posts({{"p0", 100}, {"p1", 101}, {"p3", 103}, {"p4", 104}, {"p6", 106}, {"p8", 108}, {"p9", 109}});
    CHECK(count_deletions(live, archived) == 3);
  }
  SUBCASE("posts older than the live window are not compared") {
    CHECK(count_deletions(seven, archived) == 0);
  }
  SUBCASE("a capped listing is indeterminate") {
    std::vector<LivePost> capped;
    for (std::size_t i = 0; i < kLiveListingCap; ++i) capped.push_back({"q" + std::to_string(i), 1000 + static_cast<std::int64_t>(i)});
    CHECK(count_deletions(capped, archived) == kIndeterminate);
  }
  SUBCASE("empty live listing counts everything") {
    CHECK(count_deletions({}, archived) == 10);
  }
}

TEST_CASE("detect_deletions through the mock client caps at 1000") {
  CorpusStore store;
  for (int i = 0; i < 1200; ++i) store.insert(oracle::make_comment("p" + std::to_string(i), "busy", 100 + i, "s", "s"));
  MockPlatformClient::Entry e;
  for (int i = 0; i < 1200; ++i) e.posts.push_back({"p" + std::to_string(i), 100 + i});
  MockPlatformClient mock;
  mock.set("busy", e);
  CHECK(mock.recent_posts("busy").size() == kLiveListingCap);
  CHECK(detect_deletions(mock, "busy", store) == kIndeterminate);

  e.posts.resize(5);
  mock.set("busy", e);
  CHECK(mock.recent_posts("busy").front().id == "p4");  // newest first
  CHECK(detect_deletions(mock, "busy", store) == 1195);
}

TEST_CASE("creation day clusters") {
  const std::int64_t day = utc_day(1451606400);
  std::map<std::int64_t, std::vector<std::string>> seed_days = {{day, {"s1"}}, {day + 3, {"s2", "s3"}}};
  std::vector<std::pair<std::string, std::optional<std::int64_t>>> accounts = {
      {"a", 1451606400 + 100}, {"b", 1451606400 + 86399}, {"c", 1451606400 + 86400 * 3},
      {"d", 1451606400 + 86400}, {"e", std::nullopt}, {"s1", 1451606400}};
  CreationClusterResult r = creation_date_clusters(accounts, seed_days);
  CHECK(r.skipped == 1);
  CHECK(r.flagged.size() == 3);
  CHECK(r.flagged["a"] == std::vector<std::string>{"s1"});
  CHECK(r.flagged.count("b"));
  CHECK(r.flagged["c"] == std::vector<std::string>{"s2", "s3"});
  CHECK_FALSE(r.flagged.count("s1"));

  std::map<std::int64_t, std::vector<std::string>> other = {{day + 100, {"s9"}}};
  CHECK(creation_date_clusters(accounts, other).flagged.empty());
}

TEST_CASE("tf-idf on a hand-computed three document fixture") {
  std::vector<std::string> full = {"crypto market wallet", "crypto bitcoin", "crypto wallet weather"};
  std::vector<std::string> troll = {full[0], full[1]};
  // Troll bag has 5 tokens. crypto is in every document, so its IDF is 0.
  auto kw = tfidf_top_keywords(troll, full, 10);
  REQUIRE(kw.size() == 3);
  CHECK(kw[0].word == "bitcoin");
  CHECK(kw[1].word == "market");
  CHECK(kw[2].word == "wallet");
  CHECK(std::abs(kw[0].score - 0.2 * std::log(3.0)) < 1e-9);
  CHECK(std::abs(kw[1].score - 0.2 * std::log(3.0)) < 1e-9);
  CHECK(std::abs(kw[2].score - 0.2 * std::log(1.5)) < 1e-9);

  std::vector<std::string> reversed(full.rbegin(), full.rend());
  auto again = tfidf_top_keywords(troll, reversed, 10);
  REQUIRE(again.size() == kw.size());
  for (std::size_t i = 0; i < kw.size(); ++i) CHECK(again[i].score == kw[i].score);
  CHECK(tfidf_top_keywords(troll, full, 1).size() == 1);
  CHECK_THROWS_AS(tfidf_top_keywords(std::vector<std::string>{"a an the"}, full), Error);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("Crypto is DOWN, buy BTC2 now!!") == std::vector<std::string>{"crypto", "buy"});
  CHECK(is_stopword("the"));
}

TEST_CASE("keyword presence and indicator reports") {
  CorpusStore store;
  store.insert(oracle::make_submission("s1", "a", 10, "Bitcoin news today"));
  store.insert(oracle::make_comment("c1", "a", 11, "s1", "s1", "crypto is down"));
  std::vector<std::string> keywords = {"crypto", "bitcoin", "vote"};
  CHECK(keyword_presence("a", store, keywords) == std::set<std::string>{"bitcoin", "crypto"});
  CHECK(keyword_presence("nobody", store, keywords).empty());

  MockPlatformClient mock = MockPlatformClient::from_json(R"({"accounts": {
      "a": {"status": 200, "created_utc": 1451606400, "posts": [{"id": "s1", "created_utc": 10}]},
      "s": {"status": 200, "created_utc": 1451606500}}})");
  SeedSet seed{{"s"}, "l"};
  ValidationInputs in{store, seed, keywords, seed_creation_days(mock, seed)};
  IndicatorReport r = validate_account(mock, "a", in);
  CHECK(r.status == AccountStatus::Active);
  CHECK(r.deleted_posts == 1);
  CHECK(r.same_day_as_seed);
  CHECK(r.matched_seed == std::vector<std::string>{"s"});
  CHECK(r.keyword_hits.size() == 2);
  CHECK(r.indicators_met() == 3);

  IndicatorReport gone = validate_account(mock, "zzz", in);
  CHECK(gone.status == AccountStatus::Deleted);
  CHECK(gone.deleted_posts == kIndeterminate);
  CHECK(gone.indicators_met() == 1);

  std::vector<IndicatorReport> reports = {r, gone, IndicatorReport{}};
  auto back = parse_report_jsonl(format_report_jsonl(reports));
  REQUIRE(back.size() == 3);
  CHECK(back[0].keyword_hits == r.keyword_hits);
  CHECK(back[0].matched_seed == r.matched_seed);
  CHECK(back[1].deleted_posts == kIndeterminate);
  auto h = indicator_summary(reports);
  CHECK(h == std::array<std::size_t, 5>{1, 1, 0, 1, 0});
}

TEST_CASE("indicator count is the four-way boolean sum") {
  for (int mask = 0; mask < 16; ++mask) {
    IndicatorReport r;
    r.status = mask & 1 ? AccountStatus::Suspended : AccountStatus::Active;
    r.deleted_posts = mask & 2 ? 4 : 0;
    r.same_day_as_seed = mask & 4;
    if (mask & 8) r.keyword_hits.insert("vote");
    CHECK(r.indicators_met() == __builtin_popcount(static_cast<unsigned>(mask)));
  }
}

TEST_CASE("rate limiter waits with an injected clock") {
  double now = 0;
  std::vector<double> sleeps;
  RateLimiter limiter(2.0, 1.0, [&] { return now; }, [&](double s) { sleeps.push_back(s); now += s; });
  for (int i = 0; i < 5; ++i) limiter.acquire();
  CHECK(limiter.waits() == 4);
  CHECK(now == doctest::Approx(2.0));

  MockPlatformClient mock;
  RateLimitedClient client(mock, limiter);
  client.profile("x");
  CHECK(mock.calls() == 1);
}

TEST_CASE("annotation sampling and kappa") {
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("u" + std::to_string(i));
  auto a = sample_undetected(pool, 20, 3);
  auto reversed = pool;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(a == sample_undetected(reversed, 20, 3));
  CHECK(std::set<std::string>(a.begin(), a.end()).size() == 20);
  auto all = sample_undetected(pool, 30, 3);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == 30);
  CHECK_THROWS_AS(sample_undetected(pool, 31, 3), Error);

  // 20 annotations, 19 agreements, the coders marked 2 and 1 trolls.
  std::vector<int> x(20, 0), y(20, 0);
  x[0] = x[1] = 1;
  y[0] = 1;
  const double po = 19.0 / 20.0, pe = (2.0 / 20) * (1.0 / 20) + (18.0 / 20) * (19.0 / 20);
  CHECK(std::abs(cohen_kappa(x, y) - (po - pe) / (1 - pe)) < 1e-9);
  CHECK(std::abs(cohen_kappa(x, y) - 0.6428571428571429) < 1e-9);
  CHECK(cohen_kappa(x, x) == doctest::Approx(1.0));
  std::vector<int> same(5, 1);
  CHECK(cohen_kappa(same, same) == 0.0);
  std::vector<std::string> s1 = {"t", "b", "b", "t"}, s2 = {"t", "b", "t", "t"};
  // Hand table: agree 3/4; marginals t: 2/4 and 3/4.
  double pe2 = 0.5 * 0.75 + 0.5 * 0.25;
  CHECK(std::abs(cohen_kappa(s1, s2) - (0.75 - pe2) / (1 - pe2)) < 1e-9);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 0}), Error);
}

TEST_CASE("live fixture round trip") {
  std::map<std::string, MockPlatformClient::Entry> entries;
  entries["a"] = {403, 5, {{"x", 1}}, 0};
  entries["b"] = {200, std::nullopt, {}, 1};
  MockPlatformClient m = MockPlatformClient::from_json(format_live_fixture(entries));
  CHECK(m.profile("a").http_status == 403);
  CHECK_THROWS_AS(m.profile("b"), Error);
  CHECK(m.profile("b").http_status == 200);
}
