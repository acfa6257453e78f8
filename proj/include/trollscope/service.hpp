#pragma once

// Analyst-facing HTTP API: detections and evidence of pipeline runs, analyst
// labels with an append-only audit log, content-addressed seed snapshots and
// a single-worker run queue. See docs/api.md for the payloads.

#include "trollscope/config.hpp"
#include "trollscope/corpus.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace trollscope {

enum class Verdict { ConfirmedTroll, Rejected, Undecided };
std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);

struct AnalystLabel {
  std::string account;
  Verdict verdict = Verdict::Undecided;
  std::string analyst;
  std::int64_t timestamp = 0;  // unix seconds
  std::string note;
  std::uint64_t seq = 0;  // position in the audit log, 1-based
};

enum class RunStatus { Queued, Running, Done, Failed };
std::string_view to_string(RunStatus s);

struct RunRecord {
  std::string id;
  std::string seed_snapshot;
  std::size_t seed_size = 0;
  std::string seed_label;
  std::string config;  // format_config text
  RunStatus status = RunStatus::Queued;
  std::size_t candidates = 0;
  std::size_t detections = 0;  // accounts labelled troll
  std::string error;
  std::filesystem::path dir;
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;  // raw Authorization header
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

struct ServiceOptions {
  RunConfig base;                  // template for new runs; base.out may hold an existing run
  std::filesystem::path state_dir; // seeds/, runs/, labels_audit.jsonl
  std::string token;               // empty: no authentication
  std::size_t page_size = 50;
  std::function<std::int64_t()> clock;  // unix seconds; defaults to the system clock
};

class ApiService {
public:
  /// `store` is shared by every run. `seed` becomes the initial snapshot.
  ApiService(ServiceOptions options, std::shared_ptr<const CorpusStore> store, SeedSet seed);
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  ApiResponse handle(const ApiRequest& request);

  /// Routes every endpoint of `server` to handle().
  void mount(httplib::Server& server);

  /// Blocks until the run queue is empty and no run is executing.
  void wait_idle();

  std::string head_snapshot() const;
  std::optional<RunRecord> run(const std::string& id) const;
  std::map<std::string, AnalystLabel> current_labels(const std::string& account) const;

  /// Rebuilds current labels from an audit log; used to check replay.
  static std::map<std::string, std::map<std::string, AnalystLabel>> replay_audit(std::string_view audit_jsonl);

private:
  ApiResponse get_detections(const ApiRequest& r);
  ApiResponse get_evidence(const std::string& account, const ApiRequest& r);
  ApiResponse post_label(const std::string& account, const ApiRequest& r);
  ApiResponse post_promote(const ApiRequest& r);
  ApiResponse post_run(const ApiRequest& r);
  ApiResponse get_run(const std::string& id);

  std::string write_snapshot(const SeedSet& seed);
  SeedSet read_snapshot(const std::string& id) const;
  void save_run(const RunRecord& rec) const;
  std::optional<RunRecord> resolve_run(const ApiRequest& r) const;
  void worker();
  void execute(const std::string& id);

  ServiceOptions options_;
  std::shared_ptr<const CorpusStore> store_;

  mutable std::mutex mutex_;
  std::string head_;
  std::map<std::string, RunRecord> runs_;
  std::vector<std::string> run_order_;
  std::map<std::string, std::map<std::string, AnalystLabel>> labels_;  // account -> analyst -> label
  std::map<std::string, std::uint64_t> account_seq_;                   // latest audit seq per account
  std::uint64_t audit_seq_ = 0;

  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace trollscope
