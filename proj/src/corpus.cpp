#include "trollscope/corpus.hpp"

#include "trollscope/error.hpp"
#include "trollscope/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <atomic>
#include <thread>

namespace trollscope {

using nlohmann::json;

namespace {

std::string_view strip_type_prefix(std::string_view id, char* type) {
  *type = 0;
  if (id.size() > 3 && id[0] == 't' && id[1] >= '1' && id[1] <= '9' && id[2] == '_') {
    *type = id[1];
    id.remove_prefix(3);
  }
  return id;
}

const json* field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string required_string(const json& obj, const char* name) {
  const json* v = field(obj, name);
  if (!v) throw Error(ErrorCode::MissingField, std::string("missing field: ") + name);
  if (!v->is_string()) throw Error(ErrorCode::MalformedRecord, std::string("field not a string: ") + name);
  return v->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* name) {
  const json* v = field(obj, name);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw Error(ErrorCode::MalformedRecord, std::string("field not a string: ") + name);
  return v->get<std::string>();
}

std::int64_t integer_field(const json& v, const char* name) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::int64_t out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return out;
  }
  throw Error(ErrorCode::MalformedRecord, std::string("field not an integer: ") + name);
}

}  // namespace

Post parse_post_record(std::string_view line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) throw Error(ErrorCode::MalformedRecord, "unparseable record");

  Post p;
  char id_type = 0;
  p.id = std::string(strip_type_prefix(required_string(obj, "id"), &id_type));
  if (p.id.empty()) throw Error(ErrorCode::MalformedRecord, "empty id");
  p.author = required_string(obj, "author");
  p.subreddit = required_string(obj, "subreddit");
  const json* created = field(obj, "created_utc");
  if (!created) throw Error(ErrorCode::MissingField, "missing field: created_utc");
  p.created_utc = integer_field(*created, "created_utc");
  if (p.created_utc <= 0) throw Error(ErrorCode::MalformedRecord, "created_utc must be positive");
  if (const json* score = field(obj, "score")) p.score = integer_field(*score, "score");

  if (auto link = optional_string(obj, "link_id")) {
    if (id_type == '3') throw Error(ErrorCode::MalformedRecord, "submission id with link_id");
    char t = 0;
    p.kind = PostKind::Comment;
    p.link_id = std::string(strip_type_prefix(*link, &t));
    auto parent = optional_string(obj, "parent_id");
    if (!parent) throw Error(ErrorCode::MissingField, "missing field: parent_id");
    p.parent_id = std::string(strip_type_prefix(*parent, &t));
    if (p.link_id->empty() || p.parent_id->empty()) throw Error(ErrorCode::MalformedRecord, "empty link/parent id");
    p.body = optional_string(obj, "body");
  } else {
    if (id_type == '1') throw Error(ErrorCode::MalformedRecord, "comment id without link_id");
    p.kind = PostKind::Submission;
    auto title = optional_string(obj, "title");
    if (!title) throw Error(ErrorCode::MissingField, "missing field: title");
    p.title = std::move(title);
    p.body = optional_string(obj, "selftext");
  }
  return p;
}

std::string to_record_line(const Post& post) {
  json obj;
  obj["id"] = post.id;
  obj["author"] = post.author;
  obj["subreddit"] = post.subreddit;
  obj["created_utc"] = post.created_utc;
  obj["score"] = post.score;
  if (post.is_comment()) {
    obj["link_id"] = "t3_" + *post.link_id;
    obj["parent_id"] = (post.parent_id == post.link_id ? "t3_" : "t1_") + *post.parent_id;
    if (post.body) obj["body"] = *post.body;
  } else {
    obj["title"] = post.title.value_or("");
    if (post.body) obj["selftext"] = *post.body;
  }
  return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

// ---------------------------------------------------------------------------

CorpusStore::CorpusStore() : mutex_(std::make_unique<std::mutex>()) {}
CorpusStore::CorpusStore(CorpusStore&&) noexcept = default;
CorpusStore& CorpusStore::operator=(CorpusStore&&) noexcept = default;
CorpusStore::~CorpusStore() = default;

CorpusStore CorpusStore::open_log(const std::filesystem::path& log_path, IngestStats* stats) {
  CorpusStore store;
  auto source = open_record_file(log_path);
  IngestStats s = ingest_stream(*source, store);
  if (stats) *stats = s;
  return store;
}

void CorpusStore::attach_log(const std::filesystem::path& log_path) {
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  auto out = std::make_unique<std::ofstream>(log_path, std::ios::binary | std::ios::app);
  if (!*out) throw Error(ErrorCode::StorageFailure, "cannot open log " + log_path.string());
  std::lock_guard lock(*mutex_);
  log_ = std::move(out);
}

void CorpusStore::flush_log() {
  std::lock_guard lock(*mutex_);
  if (log_ && !log_->flush()) throw Error(ErrorCode::StorageFailure, "record log flush failed");
}

bool CorpusStore::insert(Post post) {
  std::lock_guard lock(*mutex_);
  if (by_id_.find(post.id) != by_id_.end()) return false;
  if (log_) {
    *log_ << to_record_line(post) << '\n';
    if (!*log_) throw Error(ErrorCode::StorageFailure, "record log write failed");
  }
  auto idx = static_cast<std::uint32_t>(posts_.size());
  by_id_.emplace(post.id, idx);
  if (post.author != kDeletedAuthor) by_author_[post.author].push_back(idx);
  if (post.is_comment()) {
    by_link_[*post.link_id].push_back(idx);
    by_parent_[*post.parent_id].push_back(idx);
  } else {
    by_title_[normalize_title(*post.title)].push_back(idx);
  }
  max_created_utc_ = std::max(max_created_utc_, post.created_utc);
  posts_.push_back(std::move(post));
  return true;
}

const Post* CorpusStore::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &posts_[it->second];
}

std::span<const std::uint32_t> CorpusStore::lookup(const Index& index, std::string_view key) {
  auto it = index.find(key);
  if (it == index.end()) return {};
  return it->second;
}

std::span<const std::uint32_t> CorpusStore::by_author(std::string_view a) const { return lookup(by_author_, a); }
std::span<const std::uint32_t> CorpusStore::by_link(std::string_view s) const { return lookup(by_link_, s); }
std::span<const std::uint32_t> CorpusStore::by_title(std::string_view t) const { return lookup(by_title_, t); }
std::span<const std::uint32_t> CorpusStore::by_parent(std::string_view p) const { return lookup(by_parent_, p); }

std::vector<Post> CorpusStore::query(QueryKind kind, std::string_view key) const {
  std::span<const std::uint32_t> rows;
  switch (kind) {
    case QueryKind::ByAuthor: rows = by_author(key); break;
    case QueryKind::CommentsOnSubmission: rows = by_link(key); break;
    case QueryKind::SubmissionsWithTitle: rows = by_title(normalize_title(key)); break;
    case QueryKind::RepliesTo: rows = by_parent(key); break;
  }
  std::vector<Post> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(posts_[i]);
  std::sort(out.begin(), out.end(), ChronologicalOrder{});
  return out;
}

std::vector<std::string> CorpusStore::authors() const {
  std::vector<std::string> out;
  out.reserve(by_author_.size());
  for (const auto& [name, rows] : by_author_) out.push_back(name);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

IngestStats ingest_stream(RecordSource& source, CorpusStore& store) {
  IngestStats stats;
  std::string line;
  while (source.next_line(line)) {
    if (line.empty()) continue;
    try {
      if (store.insert(parse_post_record(line))) {
        ++stats.parsed;
      } else {
        ++stats.skipped;
        ++stats.duplicates;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StorageFailure) throw;
      ++stats.skipped;
      ++stats.malformed;
    }
  }
  return stats;
}

IngestStats ingest_partitions(std::span<const std::filesystem::path> partitions, CorpusStore& store,
                              unsigned max_threads) {
  struct Parsed {
    std::vector<Post> posts;
    IngestStats stats;
    std::exception_ptr error;
  };
  std::vector<Parsed> parsed(partitions.size());
  unsigned workers = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, partitions.size())));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < partitions.size(); i = next++) {
      try {
        auto source = open_record_file(partitions[i]);
        std::string line;
        while (source->next_line(line)) {
          if (line.empty()) continue;
          try {
            parsed[i].posts.push_back(parse_post_record(line));
          } catch (const Error&) {
            ++parsed[i].stats.skipped;
            ++parsed[i].stats.malformed;
          }
        }
      } catch (...) {
        parsed[i].error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  pool.clear();

  IngestStats total;
  for (auto& part : parsed) {
    if (part.error) std::rethrow_exception(part.error);
    for (auto& post : part.posts) {
      if (store.insert(std::move(post))) {
        ++part.stats.parsed;
      } else {
        ++part.stats.skipped;
        ++part.stats.duplicates;
      }
    }
    total += part.stats;
  }
  return total;
}

// ---------------------------------------------------------------------------

SeedSet load_seed_file(const std::filesystem::path& path) {
  SeedSet seed;
  std::string content = read_file(path);
  for (const auto& raw : split(content, '\n')) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      line = trim(line);
      if (line.starts_with("label=")) seed.label = std::string(line.substr(6));
      continue;
    }
    seed.names.emplace(line);
  }
  if (seed.names.empty()) throw Error(ErrorCode::InvalidArgument, "seed file is empty: " + path.string());
  return seed;
}

std::string format_seed_file(const SeedSet& seed) {
  std::string out = "# label=" + seed.label + "\n";
  for (const auto& n : seed.names) out += n + "\n";
  return out;
}

std::optional<Account> account_summary(const CorpusStore& store, std::string_view name, const SeedSet* seed) {
  auto rows = store.by_author(name);
  if (rows.empty()) return std::nullopt;
  Account a;
  a.name = std::string(name);
  a.first_activity_utc = store.at(rows.front()).created_utc;
  for (auto i : rows) a.first_activity_utc = std::min(a.first_activity_utc, store.at(i).created_utc);
  a.is_seed_troll = seed && seed->contains(name);
  return a;
}

}  // namespace trollscope
