#include "oracles.hpp"

#include "trollscope/corpus.hpp"
#include "trollscope/error.hpp"
#include "trollscope/io.hpp"
#include "trollscope/text.hpp"

#include <doctest.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>

using namespace trollscope;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trollscope_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("parse_post_record strips prefixes and infers the kind") {
  Post s = parse_post_record(R"({"id":"t3_x1","author":"a","subreddit":"r","created_utc":10,"title":"A"})");
  CHECK(s.kind == PostKind::Submission);
  CHECK(s.id == "x1");
  CHECK(s.title == "A");
  CHECK_FALSE(s.link_id);

  Post c = parse_post_record(
      R"({"id":"t1_c1","author":"b","subreddit":"r","created_utc":11,"body":"hi","link_id":"t3_x1","parent_id":"t3_x1","score":-3})");
  CHECK(c.kind == PostKind::Comment);
  CHECK(c.id == "c1");
  CHECK(c.link_id == "x1");
  CHECK(c.parent_id == "x1");
  CHECK(c.score == -3);
  CHECK(c.is_top_level());
}

TEST_CASE("parse_post_record errors") {
  CHECK(code_of([] { parse_post_record(R"({"id":"t3_x1","author":"a","subreddit":"r","title":"A"})"); }) ==
        ErrorCode::MissingField);
  CHECK(code_of([] { parse_post_record("{not json"); }) == ErrorCode::MalformedRecord);
  CHECK(code_of([] { parse_post_record("[1,2]"); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("to_record_line round-trips") {
  Post c = oracle::make_comment("c9", "b", 99, "x1", "c8", "body \"quoted\"\nline");
  c.score = 4;
  CHECK(parse_post_record(to_record_line(c)) == c);
  Post s = oracle::make_submission("x1", "a", 98, "Hello  world");
  CHECK(parse_post_record(to_record_line(s)) == s);
}

TEST_CASE("ingest_stream counts parsed and skipped records") {
  SUBCASE("empty") {
    StringSource src("");
    CorpusStore store;
    IngestStats st = ingest_stream(src, store);
    CHECK(st.parsed == 0);
    CHECK(st.skipped == 0);
  }
  SUBCASE("three valid and one malformed") {
    std::string data =
        R"({"id":"t3_a","author":"x","subreddit":"r","created_utc":1,"title":"T"})" "\n"
        R"({"id":"t1_b","author":"y","subreddit":"r","created_utc":2,"body":"b","link_id":"t3_a","parent_id":"t3_a"})" "\n"
        "garbage\n"
        R"({"id":"t1_c","author":"z","subreddit":"r","created_utc":3,"body":"c","link_id":"t3_a","parent_id":"t1_b"})" "\n";
    StringSource src(data);
    CorpusStore store;
    IngestStats st = ingest_stream(src, store);
    CHECK(st.parsed == 3);
    CHECK(st.skipped == 1);
    CHECK(st.malformed == 1);
  }
  SUBCASE("duplicate record keeps the first") {
    std::string line = R"({"id":"t3_a","author":"x","subreddit":"r","created_utc":1,"title":"T"})";
    std::string other = R"({"id":"t3_a","author":"other","subreddit":"r","created_utc":1,"title":"T"})";
    StringSource src(line + "\n" + other + "\n");
    CorpusStore store;
    IngestStats st = ingest_stream(src, store);
    CHECK(st.parsed == 1);
    CHECK(st.skipped == 1);
    CHECK(st.duplicates == 1);
    CHECK(store.find("a")->author == "x");
  }
}

TEST_CASE("queries equal linear scans and are chronological") {
  Rng rng(5);
  auto fx = oracle::random_corpus(rng, {});
  CorpusStore store;
  for (const auto& p : fx.posts) store.insert(p);

  auto scan = [&](auto pred) {
    std::vector<Post> out;
    for (const auto& p : fx.posts)
      if (pred(p)) out.push_back(p);
    std::sort(out.begin(), out.end(), ChronologicalOrder{});
    return out;
  };
  for (const auto& a : fx.accounts)
    CHECK(store.query(QueryKind::ByAuthor, a) == scan([&](const Post& p) { return p.author == a; }));
  CHECK(store.query(QueryKind::ByAuthor, "[deleted]").empty());
  CHECK(store.query(QueryKind::ByAuthor, "nobody").empty());
  for (const auto& s : fx.posts) {
    if (s.is_comment()) continue;
    CHECK(store.query(QueryKind::CommentsOnSubmission, s.id) ==
          scan([&](const Post& p) { return p.is_comment() && p.link_id == s.id; }));
    std::string norm = oracle::ascii_normalize(*s.title);
    CHECK(store.query(QueryKind::SubmissionsWithTitle, norm) ==
          scan([&](const Post& p) { return !p.is_comment() && oracle::ascii_normalize(*p.title) == norm; }));
    CHECK(store.query(QueryKind::RepliesTo, s.id) ==
          scan([&](const Post& p) { return p.is_comment() && p.parent_id == s.id; }));
  }
  auto authors = store.authors();
  CHECK(std::is_sorted(authors.begin(), authors.end()));
  CHECK(std::find(authors.begin(), authors.end(), "[deleted]") == authors.end());
}

TEST_CASE("title normalization") {
  CHECK(normalize_title("  Hello \t  world  ") == "Hello world");
  CHECK(normalize_title("Case Kept") != normalize_title("case kept"));
  // "e" + combining acute composes to U+00E9.
  CHECK(normalize_title("caf\x65\xcc\x81") == "caf\xc3\xa9");
  CHECK(utf8_length("caf\xc3\xa9") == 4);
}

TEST_CASE("record log rebuilds the same store") {
  auto dir = temp_dir("log");
  Rng rng(9);
  auto fx = oracle::random_corpus(rng, {});
  CorpusStore store;
  store.attach_log(dir / "corpus.log");
  for (const auto& p : fx.posts) store.insert(p);
  store.insert(fx.posts.front());  // duplicate, not logged
  store.flush_log();

  CorpusStore again = CorpusStore::open_log(dir / "corpus.log");
  REQUIRE(again.size() == store.size());
  for (std::size_t i = 0; i < store.size(); ++i) CHECK(again.at(static_cast<std::uint32_t>(i)) == store.at(static_cast<std::uint32_t>(i)));
  for (const auto& a : fx.accounts) CHECK(again.query(QueryKind::ByAuthor, a) == store.query(QueryKind::ByAuthor, a));
}

TEST_CASE("ingesting twice is idempotent and partitions keep partition order") {
  auto dir = temp_dir("parts");
  Rng rng(2);
  auto fx = oracle::random_corpus(rng, {});
  std::string all;
  for (const auto& p : fx.posts) all += to_record_line(p) + "\n";
  {
    std::ofstream(dir / "a.ndjson") << all;
    // Second partition repeats an id with another author; the first partition wins.
    Post dup = fx.posts.front();
    dup.author = "intruder";
    std::ofstream(dir / "b.ndjson") << to_record_line(dup) << "\n";
  }
  std::vector<std::filesystem::path> parts = {dir / "a.ndjson", dir / "b.ndjson"};
  CorpusStore store;
  IngestStats st = ingest_partitions(parts, store, 2);
  CHECK(st.parsed == fx.posts.size());
  CHECK(st.duplicates == 1);
  CHECK(store.find(fx.posts.front().id)->author == fx.posts.front().author);

  IngestStats again = ingest_partitions(parts, store, 2);
  CHECK(again.parsed == 0);
  CHECK(again.parsed + again.skipped == fx.posts.size() + 1);
  CHECK(store.size() == fx.posts.size());
}

TEST_CASE("gzip input is detected by magic bytes") {
  auto dir = temp_dir("gz");
  std::string line = R"({"id":"t3_a","author":"x","subreddit":"r","created_utc":1,"title":"T"})";
  gzFile gz = gzopen((dir / "p.gz").c_str(), "wb");
  gzwrite(gz, line.data(), static_cast<unsigned>(line.size()));
  gzwrite(gz, "\n", 1);
  gzclose(gz);
  auto src = open_record_file(dir / "p.gz");
  std::string got;
  REQUIRE(src->next_line(got));
  CHECK(got == line);
  CHECK_FALSE(src->next_line(got));
  CHECK(detect_compression("\x28\xb5\x2f\xfd") == Compression::Zstd);
  CHECK(detect_compression("{\"a\"") == Compression::None);
}

TEST_CASE("seed files") {
  auto dir = temp_dir("seed");
  std::ofstream(dir / "seed.txt") << "# label=russia-2015-2018\n# a comment\nbob\n\nalice\nbob\n";
  SeedSet s = load_seed_file(dir / "seed.txt");
  CHECK(s.label == "russia-2015-2018");
  CHECK(s.names == std::set<std::string>{"alice", "bob"});
  std::ofstream(dir / "again.txt") << format_seed_file(s);
  SeedSet t = load_seed_file(dir / "again.txt");
  CHECK(t.names == s.names);
  CHECK(t.label == s.label);
}

TEST_CASE("account_summary") {
  CorpusStore store;
  store.insert(oracle::make_submission("s1", "a", 50, "x"));
  store.insert(oracle::make_comment("c1", "a", 40, "s1", "s1"));
  SeedSet seed{{"a"}, "l"};
  auto acc = account_summary(store, "a", &seed);
  REQUIRE(acc);
  CHECK(acc->first_activity_utc == 40);
  CHECK(acc->is_seed_troll);
  CHECK_FALSE(account_summary(store, "nobody"));
}

TEST_CASE("day helpers") {
  CHECK(utc_day(0) == 0);
  CHECK(utc_day(-1) == -1);
  CHECK(format_day(utc_day(1451606400)) == "2016-01-01");
  CHECK(parse_day("2016-01-01") == utc_day(1451606400));
  CHECK(code_of([] { parse_day("2016-13-01"); }) == ErrorCode::InvalidArgument);
  CHECK(std::stod(format_double(0.1)) == 0.1);
}
