#include "trollscope/config.hpp"
#include "trollscope/error.hpp"
#include "trollscope/pipeline.hpp"
#include "trollscope/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <iostream>

using namespace trollscope;

namespace {

struct Options {
  std::string config;
  std::string seed_file;
  std::string out;
  std::optional<std::uint64_t> rng_seed;
  std::optional<unsigned> threads;
  std::vector<std::string> corpus;
  std::vector<std::string> sets;
  std::string state_dir;
};

RunConfig effective_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& kv : o.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got: " + kv);
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.corpus.empty()) cfg.corpus.assign(o.corpus.begin(), o.corpus.end());
  if (!o.seed_file.empty()) cfg.seed_file = o.seed_file;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.rng_seed) cfg.rng_seed = *o.rng_seed;
  if (o.threads) cfg.threads = *o.threads;
  return cfg;
}

std::pair<std::string, int> listen_address() {
  std::string addr = "127.0.0.1:8080";
  if (const char* env = std::getenv("TROLLSCOPE_LISTEN"); env && *env) addr = env;
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "TROLLSCOPE_LISTEN must be host:port");
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad port in TROLLSCOPE_LISTEN: " + addr);
  }
  return {addr.substr(0, colon), port};
}

int serve(const RunConfig& cfg, const Options& o) {
  Pipeline pipeline(cfg);
  ServiceOptions so;
  so.base = pipeline.config();
  for (auto& c : so.base.corpus) c = std::filesystem::absolute(c);
  for (auto* p : {&so.base.out, &so.base.seed_file, &so.base.live_fixture})
    if (!p->empty()) *p = std::filesystem::absolute(*p);
  so.state_dir = std::filesystem::absolute(o.state_dir.empty() ? so.base.out / "service" : std::filesystem::path(o.state_dir));
  if (const char* token = std::getenv("TROLLSCOPE_TOKEN")) so.token = token;
  ApiService service(so, pipeline.shared_store(), pipeline.seed());

  httplib::Server server;
  service.mount(server);
  auto [host, port] = listen_address();
  std::cerr << "listening on " << host << ':' << port << (so.token.empty() ? " (no token set)" : "") << '\n';
  if (!server.listen(host, port)) throw Error(ErrorCode::StorageFailure, "cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detects coordinated troll accounts from a seed of known ones."};
  app.require_subcommand(1);
  Options o;

  std::string keys_help = "Config keys (--set key=value or a config file):\n";
  for (const auto& [k, d] : config_keys()) keys_help += "  " + k + "  " + d + "\n";
  app.footer(keys_help);

  const std::vector<Stage> stages = {Stage::Ingest,   Stage::Synth,    Stage::Prefilter,    Stage::Features,
                                     Stage::Train,    Stage::Cv,       Stage::Detect,       Stage::Validate,
                                     Stage::GroupAnalyze, Stage::Report, Stage::Serve};
  std::vector<std::pair<CLI::App*, Stage>> commands;
  for (Stage s : stages) {
    auto* sub = app.add_subcommand(std::string(to_string(s)));
    sub->add_option("--config", o.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--seed-file", o.seed_file, "Seed account list");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--rng-seed", o.rng_seed, "Master random seed");
    sub->add_option("--threads", o.threads, "Worker threads");
    sub->add_option("--corpus", o.corpus, "NDJSON corpus partition (repeatable)");
    sub->add_option("--set", o.sets, "Override one config key (key=value, repeatable)");
    if (s == Stage::Serve) sub->add_option("--state-dir", o.state_dir, "Service state directory (default <out>/service)");
    commands.emplace_back(sub, s);
  }
  commands[0].first->description("Index NDJSON partitions into <out>/corpus.log");
  commands[1].first->description("Generate a synthetic campaign (corpus, labels, live fixture, seed)");
  commands[2].first->description("Select candidate accounts that interacted with the seed");
  commands[3].first->description("Compute the nine features for every candidate");
  commands[4].first->description("Train the classifier on seed positives and sampled negatives");
  commands[5].first->description("k-fold cross-validation of the classifier");
  commands[6].first->description("Score candidates and write detections.csv");
  commands[7].first->description("Check detected accounts against the platform fixture");
  commands[8].first->description("Compare language use and activity between cohorts");
  commands[9].first->description("Merge everything into evidence.jsonl");
  commands[10].first->description("Start the analyst API (TROLLSCOPE_LISTEN, TROLLSCOPE_TOKEN)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Stage stage = Stage::Ingest;
    for (auto& [sub, s] : commands)
      if (sub->parsed()) stage = s;
    RunConfig cfg = effective_config(o);
    if (stage == Stage::Serve) return serve(cfg, o);
    Pipeline pipeline(cfg);
    StageResult result = pipeline.run(stage);
    std::cout << to_string(result.stage) << '\t' << result.summary << '\n';
    for (const auto& a : result.artifacts) std::cout << "  " << a.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error\t" << to_string(e.code()) << '\t' << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error\tInternal\t" << e.what() << '\n';
    return 1;
  }
}
