#pragma once

// Pushshift-format submissions and comments: parsing, an append-only record
// log, and the secondary indexes every later stage queries.

#include "trollscope/io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trollscope {

enum class PostKind { Submission, Comment };

struct Post {
  std::string id;  // bare id, type prefix stripped
  PostKind kind = PostKind::Submission;
  std::string author;
  std::string subreddit;
  std::int64_t created_utc = 0;
  std::optional<std::string> title;      // submissions only
  std::optional<std::string> body;       // comment body or submission selftext
  std::optional<std::string> link_id;    // comments only: owning submission
  std::optional<std::string> parent_id;  // comments only: parent submission or comment
  std::int64_t score = 0;

  bool is_comment() const { return kind == PostKind::Comment; }
  bool is_top_level() const { return is_comment() && parent_id == link_id; }

  friend bool operator==(const Post&, const Post&) = default;
};

/// Orders posts by (created_utc, id); the canonical order of every query.
struct ChronologicalOrder {
  bool operator()(const Post& a, const Post& b) const {
    return a.created_utc != b.created_utc ? a.created_utc < b.created_utc : a.id < b.id;
  }
};

inline constexpr std::string_view kDeletedAuthor = "[deleted]";

/// Parses one NDJSON line. Throws Error(MalformedRecord | MissingField).
Post parse_post_record(std::string_view line);

/// Serializes back to a Pushshift-schema line (prefixed link_id/parent_id).
std::string to_record_line(const Post& post);

struct IngestStats {
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  std::size_t malformed = 0;   // subset of skipped
  std::size_t duplicates = 0;  // subset of skipped

  IngestStats& operator+=(const IngestStats& o) {
    parsed += o.parsed;
    skipped += o.skipped;
    malformed += o.malformed;
    duplicates += o.duplicates;
    return *this;
  }
};

enum class QueryKind { ByAuthor, CommentsOnSubmission, SubmissionsWithTitle, RepliesTo };

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

template <typename T>
using StringMap = std::unordered_map<std::string, T, StringHash, std::equal_to<>>;

class CorpusStore {
public:
  using Index = StringMap<std::vector<std::uint32_t>>;

  CorpusStore();
  CorpusStore(CorpusStore&&) noexcept;
  CorpusStore& operator=(CorpusStore&&) noexcept;
  ~CorpusStore();

  /// Rebuilds a store (posts and all indexes) from a record log.
  static CorpusStore open_log(const std::filesystem::path& log_path, IngestStats* stats = nullptr);

  /// Every subsequently inserted post is appended to `log_path`.
  void attach_log(const std::filesystem::path& log_path);
  void flush_log();

  /// Inserts and indexes; returns false (and stores nothing) for a duplicate id.
  /// Safe to call from several threads.
  bool insert(Post post);

  std::size_t size() const { return posts_.size(); }
  const Post& at(std::uint32_t index) const { return posts_[index]; }
  std::span<const Post> posts() const { return posts_; }
  const Post* find(std::string_view id) const;

  /// Raw index rows (insertion order). Unknown keys give an empty span.
  std::span<const std::uint32_t> by_author(std::string_view author) const;
  std::span<const std::uint32_t> by_link(std::string_view submission_id) const;
  std::span<const std::uint32_t> by_title(std::string_view normalized_title) const;
  std::span<const std::uint32_t> by_parent(std::string_view parent_id) const;

  /// Query result in chronological order (created_utc, then id).
  std::vector<Post> query(QueryKind kind, std::string_view key) const;

  /// Attributable authors (never "[deleted]"), sorted.
  std::vector<std::string> authors() const;
  std::int64_t max_created_utc() const { return max_created_utc_; }

private:
  static std::span<const std::uint32_t> lookup(const Index& index, std::string_view key);

  std::vector<Post> posts_;
  StringMap<std::uint32_t> by_id_;
  Index by_author_;
  Index by_link_;
  Index by_title_;
  Index by_parent_;
  std::int64_t max_created_utc_ = 0;
  std::unique_ptr<std::mutex> mutex_;
  std::unique_ptr<std::ofstream> log_;
};

/// Parses every line of `source` into `store`. Unparseable records and
/// duplicate ids are skipped and counted; the stream is never aborted.
IngestStats ingest_stream(RecordSource& source, CorpusStore& store);

/// Parses disjoint partitions concurrently and inserts them in partition
/// order, so "first occurrence wins" is deterministic.
IngestStats ingest_partitions(std::span<const std::filesystem::path> partitions, CorpusStore& store,
                              unsigned max_threads = 0);

struct SeedSet {
  std::set<std::string> names;
  std::string label;

  bool contains(std::string_view name) const { return names.find(std::string(name)) != names.end(); }
};

/// Seed file: one account per line; "# label=<label>" header; '#' lines are comments.
SeedSet load_seed_file(const std::filesystem::path& path);
std::string format_seed_file(const SeedSet& seed);

struct Account {
  std::string name;
  std::int64_t first_activity_utc = 0;
  std::optional<std::int64_t> creation_utc;
  bool is_seed_troll = false;
};

/// Account summary from the archive; nullopt when the account has no posts.
std::optional<Account> account_summary(const CorpusStore& store, std::string_view name,
                                       const SeedSet* seed = nullptr);

}  // namespace trollscope
