#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "exsel/harness.hpp"

using namespace exsel;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

// A small planted task on disk, shared by the harness tests.
std::string make_task_dir() {
  static std::string cached;
  if (!cached.empty()) return cached;
  fs::path dir = fresh_dir("exsel_harness_task");
  GeneratedTask task;
  Rng rng(31);
  for (int i = 0; i < 8; ++i) {
    Exemplar e;
    e.id = std::to_string(i);
    long long x = -150 + static_cast<long long>(rng.below(300));
    e.input = std::to_string(x);
    e.output = i < 3 ? std::to_string(-4 * x + 6) : "word" + std::to_string(i);
    task.pool.add(std::move(e));
  }
  for (int i = 0; i < 6; ++i) {
    long long x = -150 + static_cast<long long>(rng.below(300));
    task.validation.items.push_back(
        {"v" + std::to_string(i), std::to_string(x), std::to_string(-4 * x + 6), {}});
  }
  task.manifest = {{"family", "synthetic"}};
  write_task_dir(dir.string(), task);
  cached = dir.string();
  return cached;
}

RunSetup make_setup(Strategy strategy = Strategy::Ease, int budget = 9) {
  RunSetup setup;
  setup.task_dir = make_task_dir();
  setup.config = RunConfig{};
  setup.config.strategy = strategy;
  setup.config.k = 3;
  setup.config.budget = budget;
  setup.config.t_init = 3;
  setup.config.q = 60;
  setup.config.q_prime = 20;
  setup.config.hidden = {8, 8};
  setup.config.epochs = 50;
  setup.config.learning_rate = 0.05;
  setup.config.seed = 7;
  setup.provider.kind = "local-deterministic";
  setup.provider.dim = 16;
  setup.provider.seed = 3;
  setup.scorer.kind = "sim-planted";
  setup.scorer.planted.clean_ids = {"0", "1", "2"};
  setup.scorer.planted.position_weights = {0.5, 0.3, 0.2};
  setup.scorer.planted.seed = 11;
  return setup;
}

}  // namespace

TEST_CASE("a run writes one ledger line per evaluation plus header and final") {
  fs::path dir = fresh_dir("exsel_harness_run1");
  RunSetup setup = make_setup();
  RunOutcome outcome = start_run(dir.string(), setup);
  CHECK(outcome.history.size() == 9);

  Ledger ledger = read_ledger((dir / "ledger.jsonl").string());
  CHECK(ledger.records.size() == 9);
  CHECK(ledger.final_record.has_value());
  CHECK(ledger.header["config_hash"] == setup.hash());
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "timings.jsonl"));

  // starting again in the same directory is refused
  CHECK_THROWS_AS(start_run(dir.string(), setup), Error);
}

TEST_CASE("ledger replay reproduces the in-memory history field for field") {
  fs::path dir = fresh_dir("exsel_harness_replay");
  RunSetup setup = make_setup();
  RunOutcome outcome = start_run(dir.string(), setup);

  Ledger ledger = read_ledger((dir / "ledger.jsonl").string());
  LoadedTask task = load_task_dir(setup.task_dir);
  History replayed = history_from_ledger(ledger, task.pool);
  REQUIRE(replayed.size() == outcome.history.size());
  for (size_t i = 0; i < replayed.size(); ++i) {
    CHECK(replayed.at(i).sequence == outcome.history.at(i).sequence);
    CHECK(replayed.at(i).score == outcome.history.at(i).score);
    CHECK(replayed.at(i).iteration == outcome.history.at(i).iteration);
  }
}

TEST_CASE("identical runs produce byte-identical ledgers") {
  for (Strategy strategy : {Strategy::Ease, Strategy::BestOfN, Strategy::Evo,
                            Strategy::OtMetric, Strategy::CosineRetrieval}) {
    fs::path a = fresh_dir("exsel_harness_bytes_a");
    fs::path b = fresh_dir("exsel_harness_bytes_b");
    RunSetup setup = make_setup(strategy);
    setup.config.retrieve_r = 5;
    start_run(a.string(), setup);
    start_run(b.string(), setup);
    CHECK(slurp((a / "ledger.jsonl").string()) == slurp((b / "ledger.jsonl").string()));
  }
}

TEST_CASE("interrupting and resuming equals the uninterrupted run") {
  RunSetup setup = make_setup(Strategy::Ease, 10);
  fs::path full = fresh_dir("exsel_harness_full");
  start_run(full.string(), setup);
  std::string full_bytes = slurp((full / "ledger.jsonl").string());

  // Fabricate the interruption: keep the header and the first 5 evaluations
  // (streamed lines are crash-consistent prefixes by construction).
  fs::path cut = fresh_dir("exsel_harness_cut");
  fs::create_directories(cut);
  fs::copy_file(full / "config.json", cut / "config.json");
  {
    std::istringstream in(full_bytes);
    std::ofstream out((cut / "ledger.jsonl").string(), std::ios::binary);
    std::string line;
    for (int i = 0; i < 6 && std::getline(in, line); ++i) out << line << '\n';
  }
  RunOutcome resumed = resume_run(cut.string());
  CHECK(resumed.history.size() == 10);
  CHECK(slurp((cut / "ledger.jsonl").string()) == full_bytes);
}

TEST_CASE("resume of a complete run is a no-op") {
  fs::path dir = fresh_dir("exsel_harness_noop");
  RunSetup setup = make_setup(Strategy::BestOfN, 6);
  RunOutcome first = start_run(dir.string(), setup);
  std::string before = slurp((dir / "ledger.jsonl").string());
  RunOutcome second = resume_run(dir.string());
  CHECK(second.history.size() == first.history.size());
  CHECK(slurp((dir / "ledger.jsonl").string()) == before);
}

TEST_CASE("resume refuses a mismatched config hash") {
  fs::path dir = fresh_dir("exsel_harness_mismatch");
  RunSetup setup = make_setup(Strategy::BestOfN, 6);
  start_run(dir.string(), setup);
  // tamper with the snapshot
  nlohmann::json j;
  {
    std::ifstream in((dir / "config.json").string());
    j = nlohmann::json::parse(in);
  }
  j["config"]["budget"] = 99;
  {
    std::ofstream out((dir / "config.json").string(), std::ios::trunc);
    out << j.dump(2) << '\n';
  }
  CHECK_THROWS_WITH_AS(resume_run(dir.string()),
                       doctest::Contains("config hash mismatch"), Error);
}

TEST_CASE("corrupt ledger lines are reported with their line number") {
  fs::path dir = fresh_dir("exsel_harness_corrupt");
  fs::create_directories(dir);
  {
    std::ofstream out((dir / "ledger.jsonl").string());
    out << R"({"type":"header","config_hash":"x"})" << '\n';
    out << "{this is not json}" << '\n';
  }
  CHECK_THROWS_WITH_AS(read_ledger((dir / "ledger.jsonl").string()),
                       doctest::Contains("line 2"), Error);
}

TEST_CASE("ledger sequences must resolve against the pool") {
  fs::path dir = fresh_dir("exsel_harness_badid");
  fs::create_directories(dir);
  {
    std::ofstream out((dir / "ledger.jsonl").string());
    out << R"({"type":"header","config_hash":"x"})" << '\n';
    out << R"({"type":"eval","iter":0,"exemplars":["nope"],"instruction":null,"score":0.5,"ot":null})"
        << '\n';
  }
  Ledger ledger = read_ledger((dir / "ledger.jsonl").string());
  LoadedTask task = load_task_dir(make_task_dir());
  CHECK_THROWS_AS(history_from_ledger(ledger, task.pool), Error);
}

namespace {

void write_fake_ledger(const fs::path& path, const std::string& strategy,
                       const std::vector<double>& scores) {
  std::ofstream out(path.string(), std::ios::trunc);
  nlohmann::json header{{"type", "header"},
                        {"config_hash", "fake"},
                        {"setup", {{"config", {{"strategy", strategy}}}}}};
  out << header.dump() << '\n';
  for (size_t i = 0; i < scores.size(); ++i)
    out << nlohmann::json{{"type", "eval"},
                          {"iter", static_cast<int>(i)},
                          {"exemplars", {"0"}},
                          {"instruction", nullptr},
                          {"score", scores[i]},
                          {"ot", nullptr}}
               .dump()
        << '\n';
}

}  // namespace

TEST_CASE("report aggregates mean and standard error per strategy") {
  fs::path dir = fresh_dir("exsel_harness_report");
  fs::create_directories(dir);
  write_fake_ledger(dir / "a.jsonl", "ease", {0.1, 0.8, 0.5});
  write_fake_ledger(dir / "b.jsonl", "ease", {0.9, 0.2});
  write_fake_ledger(dir / "c.jsonl", "ease", {0.3, 1.0});
  write_fake_ledger(dir / "d.jsonl", "best-of-n", {0.4});

  ReportSummary summary = report({(dir / "a.jsonl").string(), (dir / "b.jsonl").string(),
                                  (dir / "c.jsonl").string(), (dir / "d.jsonl").string()});
  REQUIRE(summary.ledgers.size() == 4);
  CHECK(summary.ledgers[0].best_score == 0.8);
  CHECK(summary.ledgers[0].best_iteration == 1);
  // running maxima are non-decreasing
  for (const auto& ls : summary.ledgers)
    for (size_t i = 1; i < ls.best_so_far.size(); ++i)
      CHECK(ls.best_so_far[i] >= ls.best_so_far[i - 1]);

  const StrategyStats* ease_stats = nullptr;
  const StrategyStats* bon_stats = nullptr;
  for (const auto& st : summary.by_strategy) {
    if (st.strategy == "ease") ease_stats = &st;
    if (st.strategy == "best-of-n") bon_stats = &st;
  }
  REQUIRE(ease_stats != nullptr);
  REQUIRE(bon_stats != nullptr);
  // bests 0.8, 0.9, 1.0: mean 0.9, sample sd 0.1, standard error 0.1/sqrt(3)
  CHECK(ease_stats->mean_best == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(ease_stats->standard_error == doctest::Approx(0.057735026919).epsilon(1e-9));
  CHECK(bon_stats->mean_best == doctest::Approx(0.4));
  CHECK(bon_stats->standard_error == 0.0);  // single ledger

  nlohmann::json j = report_to_json(summary);
  CHECK(j["by_strategy"].size() == 2);
  std::string text = report_to_text(summary);
  CHECK(text.find("ease") != std::string::npos);
}
