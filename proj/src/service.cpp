#include "trollscope/service.hpp"

#include "trollscope/classify.hpp"
#include "trollscope/error.hpp"
#include "trollscope/io.hpp"
#include "trollscope/pipeline.hpp"
#include "trollscope/text.hpp"
#include "trollscope/validate.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

namespace trollscope {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::ConfirmedTroll: return "confirmed_troll";
    case Verdict::Rejected: return "rejected";
    case Verdict::Undecided: return "undecided";
  }
  return "undecided";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "confirmed_troll") return Verdict::ConfirmedTroll;
  if (text == "rejected") return Verdict::Rejected;
  if (text == "undecided") return Verdict::Undecided;
  return std::nullopt;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Queued: return "queued";
    case RunStatus::Running: return "running";
    case RunStatus::Done: return "done";
    case RunStatus::Failed: return "failed";
  }
  return "failed";
}

namespace {

RunStatus parse_run_status(std::string_view s) {
  for (auto v : {RunStatus::Queued, RunStatus::Running, RunStatus::Done, RunStatus::Failed})
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::MalformedRecord, "bad run status: " + std::string(s));
}

ApiResponse reply(int status, const ordered_json& body) { return {status, body.dump()}; }
ApiResponse fail(int status, const std::string& message) { return reply(status, {{"error", message}}); }

ordered_json label_json(const AnalystLabel& l) {
  return {{"account", l.account}, {"verdict", std::string(to_string(l.verdict))},
          {"analyst", l.analyst}, {"timestamp", l.timestamp},
          {"note", l.note},       {"seq", l.seq}};
}

ordered_json run_json(const RunRecord& r) {
  return {{"id", r.id},
          {"seed_snapshot", r.seed_snapshot},
          {"seed_size", r.seed_size},
          {"seed_label", r.seed_label},
          {"status", std::string(to_string(r.status))},
          {"candidates", r.candidates},
          {"detections", r.detections},
          {"error", r.error},
          {"config", r.config}};
}

std::vector<std::string> path_parts(std::string_view path) {
  std::vector<std::string> parts;
  for (auto& p : split(path, '/'))
    if (!p.empty()) parts.push_back(httplib::detail::decode_url(p, false));
  return parts;
}

std::int64_t system_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

void append_line(const std::filesystem::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot append to " + p.string());
}

}  // namespace

ApiService::ApiService(ServiceOptions options, std::shared_ptr<const CorpusStore> store, SeedSet seed)
    : options_(std::move(options)), store_(std::move(store)) {
  if (!options_.clock) options_.clock = system_seconds;
  auto& dir = options_.state_dir;
  std::filesystem::create_directories(dir / "seeds");
  std::filesystem::create_directories(dir / "runs");

  std::string initial = write_snapshot(seed);
  head_ = initial;
  if (std::filesystem::exists(dir / "seed_head")) head_ = std::string(trim(read_file(dir / "seed_head")));

  if (std::filesystem::exists(dir / "labels_audit.jsonl")) {
    std::string audit = read_file(dir / "labels_audit.jsonl");
    labels_ = replay_audit(audit);
    for (const auto& [account, by_analyst] : labels_)
      for (const auto& [analyst, l] : by_analyst) {
        account_seq_[account] = std::max(account_seq_[account], l.seq);
        audit_seq_ = std::max(audit_seq_, l.seq);
      }
    audit_seq_ = std::max<std::uint64_t>(audit_seq_, std::count(audit.begin(), audit.end(), '\n'));
  }

  std::vector<std::filesystem::path> run_dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir / "runs"))
    if (std::filesystem::exists(e.path() / "run.json")) run_dirs.push_back(e.path());
  std::sort(run_dirs.begin(), run_dirs.end());
  for (const auto& d : run_dirs) {
    json j = json::parse(read_file(d / "run.json"));
    RunRecord r;
    r.id = j.at("id");
    r.seed_snapshot = j.at("seed_snapshot");
    r.seed_size = j.at("seed_size");
    r.seed_label = j.at("seed_label");
    r.status = parse_run_status(j.at("status").get<std::string>());
    r.candidates = j.at("candidates");
    r.detections = j.at("detections");
    r.error = j.at("error");
    r.config = j.at("config");
    r.dir = d;
    if (r.status == RunStatus::Queued || r.status == RunStatus::Running) {
      r.status = RunStatus::Failed;
      r.error = "interrupted by service restart";
      save_run(r);
    }
    run_order_.push_back(r.id);
    runs_.emplace(r.id, std::move(r));
  }

  // A pipeline output directory given at startup is exposed as run "base".
  if (!runs_.contains("base") && std::filesystem::exists(options_.base.out / artifact::kDetections)) {
    RunRecord r;
    r.id = "base";
    r.seed_snapshot = initial;
    r.seed_size = seed.names.size();
    r.seed_label = seed.label;
    r.config = format_config(options_.base);
    r.status = RunStatus::Done;
    r.dir = options_.base.out;
    auto det = parse_detection_csv(read_file(r.dir / artifact::kDetections));
    r.candidates = det.size();
    r.detections = static_cast<std::size_t>(std::count_if(det.begin(), det.end(), [](auto& d) { return d.label == Label::Troll; }));
    run_order_.insert(run_order_.begin(), r.id);
    runs_.emplace(r.id, std::move(r));
  }

  worker_ = std::thread([this] { worker(); });
}

ApiService::~ApiService() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::string ApiService::write_snapshot(const SeedSet& seed) {
  std::string text = format_seed_file(seed);
  std::string id = hex64(fnv1a64(text));
  auto p = options_.state_dir / "seeds" / (id + ".txt");
  if (!std::filesystem::exists(p)) write_file_atomic(p, text);
  return id;
}

SeedSet ApiService::read_snapshot(const std::string& id) const {
  auto p = options_.state_dir / "seeds" / (id + ".txt");
  if (id.empty() || id.find('/') != std::string::npos || !std::filesystem::exists(p))
    throw Error(ErrorCode::MissingInput, "unknown seed snapshot: " + id);
  return load_seed_file(p);
}

void ApiService::save_run(const RunRecord& rec) const {
  std::filesystem::create_directories(rec.dir);
  write_file_atomic(rec.dir / "run.json", run_json(rec).dump(2) + "\n");
}

std::string ApiService::head_snapshot() const {
  std::lock_guard lock(mutex_);
  return head_;
}

std::optional<RunRecord> ApiService::run(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = runs_.find(id);
  if (it == runs_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, AnalystLabel> ApiService::current_labels(const std::string& account) const {
  std::lock_guard lock(mutex_);
  auto it = labels_.find(account);
  return it == labels_.end() ? std::map<std::string, AnalystLabel>{} : it->second;
}

std::map<std::string, std::map<std::string, AnalystLabel>> ApiService::replay_audit(std::string_view audit) {
  std::map<std::string, std::map<std::string, AnalystLabel>> out;
  for (const auto& line : split(audit, '\n')) {
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "bad audit line");
    AnalystLabel l;
    l.account = j.at("account");
    l.analyst = j.at("analyst");
    auto v = parse_verdict(j.at("verdict").get<std::string>());
    if (!v) throw Error(ErrorCode::MalformedRecord, "bad verdict in audit log");
    l.verdict = *v;
    l.timestamp = j.at("timestamp");
    l.note = j.value("note", "");
    l.seq = j.at("seq");
    out[l.account][l.analyst] = l;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Requests

ApiResponse ApiService::handle(const ApiRequest& r) {
  if (!options_.token.empty() && r.authorization != "Bearer " + options_.token)
    return fail(401, "missing or invalid bearer token");
  auto parts = path_parts(r.path);
  try {
    if (r.method == "GET") {
      if (parts.size() == 1 && parts[0] == "detections") return get_detections(r);
      if (parts.size() == 3 && parts[0] == "accounts" && parts[2] == "evidence") return get_evidence(parts[1], r);
      if (parts.size() == 2 && parts[0] == "runs") return get_run(parts[1]);
      if (parts.size() == 1 && parts[0] == "runs") {
        std::lock_guard lock(mutex_);
        ordered_json list = ordered_json::array();
        for (const auto& id : run_order_) list.push_back(run_json(runs_.at(id)));
        return reply(200, {{"runs", list}});
      }
      if (parts.size() == 1 && parts[0] == "seed") {
        std::string head = head_snapshot();
        SeedSet s = read_snapshot(head);
        return reply(200, {{"snapshot", head}, {"label", s.label}, {"size", s.names.size()}, {"accounts", s.names}});
      }
    } else if (r.method == "POST") {
      if (parts.size() == 3 && parts[0] == "detections" && parts[2] == "label") return post_label(parts[1], r);
      if (parts.size() == 2 && parts[0] == "seed" && parts[1] == "promote") return post_promote(r);
      if (parts.size() == 1 && parts[0] == "runs") return post_run(r);
    }
    return fail(404, "no such endpoint: " + r.method + " " + r.path);
  } catch (const Error& e) {
    int status = e.code() == ErrorCode::MissingInput ? 404 : e.code() == ErrorCode::InvalidConfig ? 400 : 500;
    return fail(status, std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(500, e.what());
  }
}

std::optional<RunRecord> ApiService::resolve_run(const ApiRequest& r) const {
  std::lock_guard lock(mutex_);
  if (auto it = r.query.find("run"); it != r.query.end()) {
    auto run = runs_.find(it->second);
    if (run == runs_.end()) return std::nullopt;
    return run->second;
  }
  for (auto it = run_order_.rbegin(); it != run_order_.rend(); ++it)
    if (runs_.at(*it).status == RunStatus::Done) return runs_.at(*it);
  return std::nullopt;
}

ApiResponse ApiService::get_detections(const ApiRequest& r) {
  auto run = resolve_run(r);
  if (!run) return fail(404, "unknown run");
  if (run->status != RunStatus::Done) return fail(409, "run " + run->id + " is " + std::string(to_string(run->status)));

  double min_score = -1;
  std::size_t page = 1, page_size = options_.page_size;
  try {
    if (auto it = r.query.find("min_score"); it != r.query.end()) min_score = std::stod(it->second);
    if (auto it = r.query.find("page"); it != r.query.end()) page = std::stoul(it->second);
    if (auto it = r.query.find("page_size"); it != r.query.end()) page_size = std::stoul(it->second);
  } catch (const std::exception&) {
    return fail(400, "bad query parameter");
  }
  if (page == 0 || page_size == 0 || page_size > 1000) return fail(400, "page and page_size must be in range");

  std::vector<Detection> detections;
  if (std::filesystem::exists(run->dir / artifact::kDetections))
    detections = parse_detection_csv(read_file(run->dir / artifact::kDetections));
  std::map<std::string, int> met;
  if (std::filesystem::exists(run->dir / artifact::kIndicators))
    for (const auto& rep : parse_report_jsonl(read_file(run->dir / artifact::kIndicators)))
      met[rep.account] = rep.indicators_met();

  std::vector<const Detection*> kept;
  for (const auto& d : detections)
    if (d.score >= min_score) kept.push_back(&d);
  ordered_json items = ordered_json::array();
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t i = begin; i < kept.size() && i < begin + page_size; ++i) {
    const Detection& d = *kept[i];
    ordered_json item = {{"account", d.account},
                         {"score", d.score},
                         {"label", std::string(to_string(d.label))},
                         {"indicators_met", met.contains(d.account) ? met[d.account] : 0}};
    auto labels = current_labels(d.account);
    const AnalystLabel* latest = nullptr;
    for (const auto& [a, l] : labels)
      if (!latest || l.seq > latest->seq) latest = &l;
    item["verdict"] = latest ? ordered_json(std::string(to_string(latest->verdict))) : ordered_json(nullptr);
    items.push_back(std::move(item));
  }
  return reply(200, {{"run", run->id},
                     {"page", page},
                     {"page_size", page_size},
                     {"total", kept.size()},
                     {"items", items}});
}

ApiResponse ApiService::get_evidence(const std::string& account, const ApiRequest& r) {
  auto run = resolve_run(r);
  if (!run) return fail(404, "unknown run");
  auto file = run->dir / artifact::kEvidence;
  if (std::filesystem::exists(file)) {
    for (const auto& line : split(read_file(file), '\n')) {
      if (trim(line).empty()) continue;
      ordered_json e = ordered_json::parse(line);
      if (e.value("account", "") != account) continue;
      ordered_json labels = ordered_json::array();
      for (const auto& [a, l] : current_labels(account)) labels.push_back(label_json(l));
      e["run"] = run->id;
      e["labels"] = labels;
      return reply(200, e);
    }
  }
  return fail(404, "no evidence for " + account + " in run " + run->id);
}

ApiResponse ApiService::post_label(const std::string& account, const ApiRequest& r) {
  json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) return fail(400, "body must be a JSON object");
  if (!body.contains("verdict") || !body["verdict"].is_string()) return fail(400, "verdict is required");
  auto verdict = parse_verdict(body["verdict"].get<std::string>());
  if (!verdict) return fail(400, "verdict must be confirmed_troll, rejected or undecided");
  if (!body.contains("analyst") || !body["analyst"].is_string() || body["analyst"].get<std::string>().empty())
    return fail(400, "analyst is required");
  std::optional<std::uint64_t> base_seq;
  if (body.contains("base_seq")) {
    if (!body["base_seq"].is_number_unsigned()) return fail(400, "base_seq must be a non-negative integer");
    base_seq = body["base_seq"].get<std::uint64_t>();
  }

  std::lock_guard lock(mutex_);
  AnalystLabel l;
  l.account = account;
  l.verdict = *verdict;
  l.analyst = body["analyst"].get<std::string>();
  l.note = body.value("note", "");
  l.timestamp = options_.clock();
  l.seq = ++audit_seq_;
  const std::uint64_t previous = account_seq_[account];
  const bool conflict = base_seq && *base_seq != previous;

  ordered_json audit = label_json(l);
  if (base_seq) audit["base_seq"] = *base_seq;
  audit["conflict"] = conflict;
  append_line(options_.state_dir / "labels_audit.jsonl", audit.dump());
  labels_[account][l.analyst] = l;
  account_seq_[account] = l.seq;

  if (conflict)
    return reply(409, {{"error", "label changed since base_seq; this write was applied (last writer wins)"},
                       {"previous_seq", previous},
                       {"label", label_json(l)}});
  return reply(200, label_json(l));
}

ApiResponse ApiService::post_promote(const ApiRequest& r) {
  json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("accounts") || !body["accounts"].is_array())
    return fail(400, "body must be {\"accounts\": [...]}");
  std::vector<std::string> accounts;
  for (const auto& a : body["accounts"]) {
    if (!a.is_string()) return fail(400, "accounts must be strings");
    accounts.push_back(a.get<std::string>());
  }

  std::lock_guard lock(mutex_);
  std::string base = body.contains("base") && body["base"].is_string() ? body["base"].get<std::string>() : head_;
  SeedSet seed = read_snapshot(base);
  std::vector<std::string> unconfirmed;
  for (const auto& a : accounts) {
    const AnalystLabel* latest = nullptr;
    if (auto it = labels_.find(a); it != labels_.end())
      for (const auto& [analyst, l] : it->second)
        if (!latest || l.seq > latest->seq) latest = &l;
    if (!latest || latest->verdict != Verdict::ConfirmedTroll) unconfirmed.push_back(a);
  }
  if (!unconfirmed.empty())
    return reply(400, {{"error", "accounts are not confirmed trolls"}, {"accounts", unconfirmed}});
  std::size_t before = seed.names.size();
  seed.names.insert(accounts.begin(), accounts.end());
  std::string id = write_snapshot(seed);
  head_ = id;
  write_file_atomic(options_.state_dir / "seed_head", id + "\n");
  return reply(200, {{"snapshot", id}, {"base", base}, {"seed_size", seed.names.size()}, {"added", seed.names.size() - before}});
}

ApiResponse ApiService::post_run(const ApiRequest& r) {
  json body = r.body.empty() ? json::object() : json::parse(r.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) return fail(400, "body must be a JSON object");

  std::unique_lock lock(mutex_);
  std::string snapshot =
      body.contains("seed_snapshot") && body["seed_snapshot"].is_string() ? body["seed_snapshot"].get<std::string>() : head_;
  SeedSet seed;
  try {
    seed = read_snapshot(snapshot);
  } catch (const Error&) {
    return fail(400, "unknown seed snapshot: " + snapshot);
  }
  RunConfig cfg = options_.base;
  if (body.contains("config")) {
    if (!body["config"].is_object()) return fail(400, "config must be an object of key: value strings");
    for (auto& [k, v] : body["config"].items()) {
      std::string value = v.is_string() ? v.get<std::string>() : v.dump();
      try {
        set_config_value(cfg, k, value);
      } catch (const Error& e) {
        return fail(400, e.what());
      }
    }
  }
  char buf[32];
  std::size_t n = static_cast<std::size_t>(std::count_if(run_order_.begin(), run_order_.end(),
                                                         [](const std::string& id) { return id != "base"; }));
  std::snprintf(buf, sizeof buf, "run-%04zu", n + 1);
  RunRecord rec;
  rec.id = buf;
  while (runs_.contains(rec.id)) rec.id += "x";
  rec.dir = options_.state_dir / "runs" / rec.id;
  cfg.out = rec.dir;
  cfg.seed_file = options_.state_dir / "seeds" / (snapshot + ".txt");
  rec.seed_snapshot = snapshot;
  rec.seed_size = seed.names.size();
  rec.seed_label = seed.label;
  rec.config = format_config(cfg);
  rec.status = RunStatus::Queued;
  save_run(rec);
  runs_.emplace(rec.id, rec);
  run_order_.push_back(rec.id);
  queue_.push_back(rec.id);
  lock.unlock();
  queue_cv_.notify_one();
  return reply(202, run_json(rec));
}

ApiResponse ApiService::get_run(const std::string& id) {
  auto rec = run(id);
  if (!rec) return fail(404, "unknown run: " + id);
  return reply(200, run_json(*rec));
}

// ---------------------------------------------------------------------------
// Run queue

void ApiService::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void ApiService::worker() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      busy_ = true;
      runs_.at(id).status = RunStatus::Running;
      save_run(runs_.at(id));
    }
    execute(id);
    {
      std::lock_guard lock(mutex_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void ApiService::execute(const std::string& id) {
  RunRecord rec = *run(id);
  try {
    RunConfig cfg = parse_config(rec.config);
    SeedSet seed = read_snapshot(rec.seed_snapshot);
    Pipeline p(cfg, store_, seed);
    for (Stage s : {Stage::Prefilter, Stage::Features, Stage::Train, Stage::Detect}) p.run(s);
    if (!cfg.live_fixture.empty()) p.run(Stage::Validate);
    p.run(Stage::Report);
    auto det = parse_detection_csv(read_file(rec.dir / artifact::kDetections));
    rec.candidates = det.size();
    rec.detections = static_cast<std::size_t>(std::count_if(det.begin(), det.end(), [](auto& d) { return d.label == Label::Troll; }));
    rec.status = RunStatus::Done;
  } catch (const Error& e) {
    rec.status = RunStatus::Failed;
    rec.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    rec.status = RunStatus::Failed;
    rec.error = e.what();
  }
  std::lock_guard lock(mutex_);
  runs_[id] = rec;
  save_run(rec);
}

void ApiService::mount(httplib::Server& server) {
  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    r.authorization = req.get_header_value("Authorization");
    ApiResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(".*", adapt);
  server.Post(".*", adapt);
}

}  // namespace trollscope
