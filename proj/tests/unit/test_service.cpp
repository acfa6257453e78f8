#include "trollscope/io.hpp"
#include "trollscope/pipeline.hpp"
#include "trollscope/service.hpp"
#include "trollscope/synth.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <filesystem>

using namespace trollscope;
using nlohmann::json;

namespace {

struct Fixture {
  std::filesystem::path root;
  RunConfig base;
  std::shared_ptr<const CorpusStore> store;
  SeedSet seed;

  Fixture() {
    root = std::filesystem::temp_directory_path() / "trollscope_test_service";
    std::filesystem::remove_all(root);
    RunConfig cfg;
    cfg.out = root / "base";
    cfg.synth.n_trolls = 20;
    cfg.synth.n_benign = 200;
    cfg.synth.seed_size = 8;
    cfg.synth.days = 240;
    cfg.synth.campaign_start_day = 120;
    cfg.k_folds = 4;
    cfg.hyper.n_trees = 30;
    Pipeline(cfg).run(Stage::Synth);
    Pipeline p(cfg);
    for (Stage s : {Stage::Prefilter, Stage::Features, Stage::Train, Stage::Detect, Stage::Validate, Stage::Report}) p.run(s);
    base = p.config();
    store = p.shared_store();
    seed = p.seed();
  }

  ServiceOptions options(const std::string& state = "state") const {
    ServiceOptions o;
    o.base = base;
    o.state_dir = root / state;
    o.token = "secret";
    o.clock = [] { return std::int64_t{1700000000}; };
    return o;
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

ApiRequest req(std::string method, std::string path, std::string body = {}, std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.body = std::move(body);
  r.query = std::move(query);
  r.authorization = "Bearer secret";
  return r;
}

json call(ApiService& s, const ApiRequest& r, int expect) {
  ApiResponse res = s.handle(r);
  CHECK_MESSAGE(res.status == expect, r.method, " ", r.path, " -> ", res.body);
  return json::parse(res.body);
}

std::string label_body(const std::string& verdict, const std::string& analyst) {
  return json{{"verdict", verdict}, {"analyst", analyst}, {"note", "n"}}.dump();
}

}  // namespace

TEST_CASE("requests without the bearer token are rejected") {
  ApiService s(fixture().options("state_auth"), fixture().store, fixture().seed);
  ApiRequest r = req("GET", "/detections");
  r.authorization = "";
  CHECK(s.handle(r).status == 401);
  r.authorization = "Bearer wrong";
  CHECK(s.handle(r).status == 401);
  CHECK(s.handle(req("GET", "/nowhere")).status == 404);
}

TEST_CASE("detections endpoint mirrors the detection file") {
  ApiService s(fixture().options("state_det"), fixture().store, fixture().seed);
  auto file = parse_detection_csv(read_file(fixture().base.out / artifact::kDetections));
  json all = call(s, req("GET", "/detections", {}, {{"page_size", "1000"}}), 200);
  CHECK(all["run"] == "base");
  REQUIRE(all["items"].size() == file.size());
  for (std::size_t i = 0; i < file.size(); ++i) {
    CHECK(all["items"][i]["account"] == file[i].account);
    CHECK(all["items"][i]["score"].get<double>() == file[i].score);
  }

  json paged = json::array();
  for (int page = 1;; ++page) {
    json p = call(s, req("GET", "/detections", {}, {{"page", std::to_string(page)}, {"page_size", "7"}}), 200);
    if (p["items"].empty()) break;
    for (auto& item : p["items"]) paged.push_back(item);
  }
  CHECK(paged == all["items"]);

  CHECK(call(s, req("GET", "/detections", {}, {{"min_score", "1.01"}}), 200)["items"].empty());
  json high = call(s, req("GET", "/detections", {}, {{"min_score", "0.5"}, {"page_size", "1000"}}), 200);
  for (auto& item : high["items"]) CHECK(item["score"].get<double>() >= 0.5);
  call(s, req("GET", "/detections", {}, {{"run", "nope"}}), 404);
  call(s, req("GET", "/detections", {}, {{"page", "zero"}}), 400);
}

TEST_CASE("evidence endpoint serves stored evidence") {
  ApiService s(fixture().options("state_ev"), fixture().store, fixture().seed);
  auto file = parse_detection_csv(read_file(fixture().base.out / artifact::kDetections));
  REQUIRE(!file.empty());
  REQUIRE(file.front().label == Label::Troll);
  json e = call(s, req("GET", "/accounts/" + file.front().account + "/evidence"), 200);
  CHECK(e["account"] == file.front().account);
  CHECK(e.contains("features"));
  CHECK(e.contains("indicators"));
  CHECK(e["labels"].empty());
  call(s, req("GET", "/accounts/nobody_here/evidence"), 404);
}

TEST_CASE("labels, audit replay and conflicts") {
  auto opts = fixture().options("state_lbl");
  ApiService s(opts, fixture().store, fixture().seed);
  call(s, req("POST", "/detections/acct/label", label_body("maybe", "ann")), 400);
  call(s, req("POST", "/detections/acct/label", "not json"), 400);
  call(s, req("POST", "/detections/acct/label", json{{"verdict", "rejected"}}.dump()), 400);

  json first = call(s, req("POST", "/detections/acct/label", label_body("confirmed_troll", "ann")), 200);
  CHECK(first["verdict"] == "confirmed_troll");
  CHECK(first["timestamp"] == 1700000000);
  json second = call(s, req("POST", "/detections/acct/label", label_body("rejected", "bob")), 200);
  CHECK(second["seq"].get<std::uint64_t>() > first["seq"].get<std::uint64_t>());

  auto current = s.current_labels("acct");
  REQUIRE(current.size() == 2);
  CHECK(current["ann"].verdict == Verdict::ConfirmedTroll);
  CHECK(current["bob"].verdict == Verdict::Rejected);

  // A stale base_seq is still applied but answered with 409.
  json stale = json{{"verdict", "undecided"}, {"analyst", "ann"}, {"base_seq", first["seq"]}};
  json conflict = call(s, req("POST", "/detections/acct/label", stale.dump()), 409);
  CHECK(conflict["label"]["verdict"] == "undecided");
  CHECK(s.current_labels("acct")["ann"].verdict == Verdict::Undecided);
  json fresh = json{{"verdict", "confirmed_troll"}, {"analyst", "ann"}, {"base_seq", conflict["label"]["seq"]}};
  call(s, req("POST", "/detections/acct/label", fresh.dump()), 200);

  std::string audit = read_file(opts.state_dir / "labels_audit.jsonl");
  CHECK(std::count(audit.begin(), audit.end(), '\n') == 4);
  auto replayed = ApiService::replay_audit(audit);
  for (const auto& [analyst, l] : s.current_labels("acct")) {
    CHECK(replayed["acct"][analyst].verdict == l.verdict);
    CHECK(replayed["acct"][analyst].seq == l.seq);
  }
}

TEST_CASE("promotion and re-runs") {
  auto opts = fixture().options("state_run");
  auto& fx = fixture();
  std::string head;
  std::string run_id;
  auto det = parse_detection_csv(read_file(fx.base.out / artifact::kDetections));
  {
    ApiService s(opts, fx.store, fx.seed);
    head = s.head_snapshot();
    CHECK(call(s, req("POST", "/seed/promote", R"({"accounts": []})"), 200)["snapshot"] == head);
    CHECK(call(s, req("POST", "/seed/promote", R"({"accounts": ["x"]})"), 400)["accounts"][0] == "x");
    call(s, req("POST", "/seed/promote", "{}"), 400);

    call(s, req("POST", "/detections/" + det[0].account + "/label", label_body("confirmed_troll", "ann")), 200);
    call(s, req("POST", "/detections/" + det[1].account + "/label", label_body("rejected", "ann")), 200);
    call(s, req("POST", "/seed/promote", json{{"accounts", {det[0].account, det[1].account}}}.dump()), 400);
    json promoted = call(s, req("POST", "/seed/promote", json{{"accounts", {det[0].account}}}.dump()), 200);
    CHECK(promoted["seed_size"] == fx.seed.names.size() + 1);
    CHECK(promoted["snapshot"] != head);
    CHECK(s.head_snapshot() == promoted["snapshot"]);

    call(s, req("POST", "/runs", json{{"seed_snapshot", "unknown"}}.dump()), 400);
    call(s, req("POST", "/runs", json{{"config", {{"no_such_key", "1"}}}}.dump()), 400);
    json queued = call(s, req("POST", "/runs", json{{"config", {{"n_trees", "20"}}}}.dump()), 202);
    run_id = queued["id"];
    CHECK(queued["seed_snapshot"] == promoted["snapshot"]);
    s.wait_idle();
    json rec = call(s, req("GET", "/runs/" + run_id), 200);
    CHECK_MESSAGE(rec["status"] == "done", rec.dump());
    CHECK(rec["seed_size"] == fx.seed.names.size() + 1);
    call(s, req("GET", "/runs/missing"), 404);

    json dets = call(s, req("GET", "/detections", {}, {{"run", run_id}, {"page_size", "1000"}}), 200);
    for (auto& item : dets["items"]) CHECK(item["account"] != det[0].account);
    json latest = call(s, req("GET", "/detections", {}, {{"page_size", "1"}}), 200);
    CHECK(latest["run"] == run_id);
  }
  // State survives a restart.
  ApiService again(opts, fx.store, fx.seed);
  CHECK(again.head_snapshot() != head);
  CHECK(again.run(run_id)->status == RunStatus::Done);
  CHECK(again.current_labels(det[0].account).at("ann").verdict == Verdict::ConfirmedTroll);
  json second = call(again, req("POST", "/detections/z/label", label_body("undecided", "ann")), 200);
  CHECK(second["seq"].get<std::uint64_t>() > 2);
}

TEST_CASE("the service answers over HTTP") {
  ApiService s(fixture().options("state_http"), fixture().store, fixture().seed);
  httplib::Server server;
  s.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto unauth = client.Get("/detections");
  REQUIRE(unauth);
  CHECK(unauth->status == 401);
  httplib::Headers h = {{"Authorization", "Bearer secret"}};
  auto ok = client.Get("/detections?page_size=2&min_score=0", h);
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(json::parse(ok->body)["items"].size() <= 2);
  auto posted = client.Post("/detections/some%20one/label", h, label_body("rejected", "ann"), "application/json");
  REQUIRE(posted);
  CHECK(posted->status == 200);
  CHECK(json::parse(posted->body)["account"] == "some one");
  server.stop();
  t.join();
}
