#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exsel/core.hpp"
#include "exsel/evaluate.hpp"
#include "exsel/optimizer.hpp"
#include "exsel/sha256.hpp"
#include "exsel/taskgen.hpp"

namespace exsel {

// Everything a run needs, as persisted in <run_dir>/config.json. The hash of
// the canonical dump guards resume against config edits.
struct RunSetup {
  RunConfig config;
  EmbeddingProviderSpec provider;
  ScorerSpec scorer;
  std::string task_dir;

  nlohmann::json to_json() const {
    return {{"config", config.to_json()},
            {"provider", provider.to_json()},
            {"scorer", scorer.to_json()},
            {"task_dir", task_dir}};
  }

  static RunSetup from_json(const nlohmann::json& j) {
    RunSetup s;
    s.config = RunConfig::from_json(j.at("config"));
    s.provider = EmbeddingProviderSpec::from_json(j.at("provider"));
    s.scorer = ScorerSpec::from_json(j.at("scorer"));
    s.task_dir = j.at("task_dir").get<std::string>();
    return s;
  }

  std::string hash() const { return Sha256::hex(to_json().dump()); }
};

struct LedgerRecord {
  int iteration = 0;
  std::vector<std::string> exemplar_ids;
  std::optional<int> instruction_id;
  double score = 0.0;
  std::optional<double> ot_distance;
};

struct Ledger {
  nlohmann::json header;
  std::vector<LedgerRecord> records;
  std::optional<nlohmann::json> final_record;
};

namespace detail {

inline nlohmann::json record_to_json(const EvalRecord& r) {
  nlohmann::json j{{"type", "eval"},
                   {"iter", r.observation.iteration},
                   {"exemplars", r.observation.sequence.exemplar_ids()},
                   {"score", r.observation.score}};
  j["instruction"] = r.observation.sequence.instruction_id()
                         ? nlohmann::json(*r.observation.sequence.instruction_id())
                         : nlohmann::json(nullptr);
  j["ot"] = r.ot_distance ? nlohmann::json(*r.ot_distance) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

inline Ledger read_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ledger '" + path + "'");
  Ledger ledger;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw Error("corrupt ledger line " + std::to_string(line_no) + " in '" + path +
                  "': " + ex.what());
    }
    std::string type = j.value("type", "");
    if (type == "header") {
      ledger.header = j;
    } else if (type == "eval") {
      LedgerRecord r;
      try {
        r.iteration = j.at("iter").get<int>();
        r.exemplar_ids = j.at("exemplars").get<std::vector<std::string>>();
        if (!j.at("instruction").is_null()) r.instruction_id = j.at("instruction").get<int>();
        r.score = j.at("score").get<double>();
        if (!j.at("ot").is_null()) r.ot_distance = j.at("ot").get<double>();
      } catch (const nlohmann::json::exception& ex) {
        throw Error("corrupt ledger line " + std::to_string(line_no) + " in '" + path +
                    "': " + ex.what());
      }
      ledger.records.push_back(std::move(r));
    } else if (type == "final") {
      ledger.final_record = j;
    } else {
      throw Error("corrupt ledger line " + std::to_string(line_no) + " in '" + path +
                  "': unknown record type");
    }
  }
  return ledger;
}

// Rebuilds History from ledger records, checking every sequence against the
// pool (ids resolvable, distinct).
inline History history_from_ledger(const Ledger& ledger, const ExemplarPool& pool) {
  History history;
  for (const auto& r : ledger.records) {
    for (const auto& id : r.exemplar_ids)
      if (!pool.contains(id))
        throw Error("ledger references unknown exemplar id '" + id + "'");
    history.append({ExemplarSequence(r.exemplar_ids, r.instruction_id), r.score, r.iteration});
  }
  return history;
}

// ---- run orchestration ----------------------------------------------------------

struct RunPaths {
  std::filesystem::path dir;

  std::string config() const { return (dir / "config.json").string(); }
  std::string ledger() const { return (dir / "ledger.jsonl").string(); }
  std::string timings() const { return (dir / "timings.jsonl").string(); }
  std::string summary() const { return (dir / "summary.json").string(); }
  std::string embed_cache() const { return (dir / "embed-cache.bin").string(); }
};

struct RunOutcome {
  ExemplarSequence best;
  History history;
  std::string summary_path;
};

namespace detail {

inline void write_summary(const RunPaths& paths, const RunSetup& setup, const RunResult& result,
                          const LoadedTask& task) {
  const Observation& best = best_observation(result.history);
  nlohmann::json j{
      {"strategy", to_string(setup.config.strategy)},
      {"budget", setup.config.budget},
      {"best_iteration", best.iteration},
      {"best_score", best.score},
      {"best_exemplars", best.sequence.exemplar_ids()},
      {"best_instruction", best.sequence.instruction_id()
                               ? nlohmann::json(*best.sequence.instruction_id())
                               : nlohmann::json(nullptr)},
      {"best_rendering",
       render_sequence_text(best.sequence, task.pool,
                            task.instructions ? &*task.instructions : nullptr)}};
  std::ofstream out(paths.summary(), std::ios::trunc);
  if (!out) throw Error("cannot write '" + paths.summary() + "'");
  out << j.dump(2) << '\n';
}

// Shared by fresh runs and resumes: executes the strategy with the ledger as
// the streaming sink, then writes final record and summary.
inline RunOutcome execute(const RunPaths& paths, const RunSetup& setup, History preload) {
  LoadedTask task = load_task_dir(setup.task_dir);
  EmbeddingService embedder(setup.provider);
  if (setup.provider.kind == "remote") embedder.cache().load(paths.embed_cache());
  auto scorer = setup.scorer.instantiate();

  std::ofstream ledger_out(paths.ledger(), std::ios::app);
  if (!ledger_out) throw Error("cannot write '" + paths.ledger() + "'");
  std::ofstream timings_out(paths.timings(), std::ios::app);
  auto last_clock = std::chrono::steady_clock::now();

  RunConfig cfg = setup.config;
  ExemplarPool working_pool = task.pool;
  if (cfg.prefilter_m > 0) {
    EmbeddingTable table = precompute_pool_embeddings(embedder, task.pool, task.validation);
    working_pool = retrieval_prefilter(task.pool, task.validation, cfg.prefilter_m, table);
  }

  RunInputs inputs{working_pool,
                   task.validation,
                   *scorer,
                   embedder,
                   task.instructions ? &*task.instructions : nullptr,
                   std::move(preload),
                   [&](const EvalRecord& r) {
                     ledger_out << record_to_json(r).dump() << '\n';
                     ledger_out.flush();
                     auto now = std::chrono::steady_clock::now();
                     auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   now - last_clock).count();
                     last_clock = now;
                     timings_out << nlohmann::json{{"iter", r.observation.iteration},
                                                   {"wall_ms", ms}}.dump()
                                 << '\n';
                     timings_out.flush();
                   }};

  RunResult result;
  try {
    result = run(cfg, std::move(inputs));
  } catch (...) {
    if (setup.provider.kind == "remote") embedder.cache().save(paths.embed_cache());
    throw;  // partial ledger stays on disk
  }

  ledger_out << nlohmann::json{{"type", "final"},
                               {"best_iter", best_observation(result.history).iteration},
                               {"best_score", best_observation(result.history).score}}
                    .dump()
             << '\n';
  ledger_out.flush();
  if (setup.provider.kind == "remote") embedder.cache().save(paths.embed_cache());
  write_summary(paths, setup, result, task);
  return {result.best, std::move(result.history), paths.summary()};
}

}  // namespace detail

// Starts a fresh run in `dir`: snapshots the resolved setup, writes the ledger
// header, executes the strategy, streams one ledger line per evaluation.
inline RunOutcome start_run(const std::string& dir, const RunSetup& setup) {
  RunPaths paths{dir};
  std::filesystem::create_directories(paths.dir);
  if (std::filesystem::exists(paths.ledger()))
    throw Error("run directory '" + dir + "' already contains a ledger; use resume");

  {
    std::ofstream cfg_out(paths.config(), std::ios::trunc);
    if (!cfg_out) throw Error("cannot write '" + paths.config() + "'");
    cfg_out << setup.to_json().dump(2) << '\n';
  }
  std::string hash = setup.hash();
  {
    std::ofstream ledger_out(paths.ledger(), std::ios::trunc);
    nlohmann::json header{{"type", "header"},
                          {"run_id", hash.substr(0, 12)},
                          {"config_hash", hash},
                          {"setup", setup.to_json()}};
    ledger_out << header.dump() << '\n';
  }
  return detail::execute(paths, setup, History{});
}

// Continues an interrupted run to its budget. The ledger must be a prefix of
// a valid run and the config snapshot must hash to the recorded value.
inline RunOutcome resume_run(const std::string& dir) {
  RunPaths paths{dir};
  std::ifstream cfg_in(paths.config());
  if (!cfg_in) throw Error("no config.json in '" + dir + "'");
  nlohmann::json setup_json = nlohmann::json::parse(cfg_in);
  RunSetup setup = RunSetup::from_json(setup_json);

  Ledger ledger = read_ledger(paths.ledger());
  std::string recorded = ledger.header.value("config_hash", "");
  if (recorded.empty()) throw Error("ledger in '" + dir + "' has no header");
  if (recorded != setup.hash())
    throw Error("refusing to resume '" + dir + "': config hash mismatch");

  LoadedTask task = load_task_dir(setup.task_dir);
  History preload = history_from_ledger(ledger, task.pool);
  if (static_cast<int>(preload.size()) > setup.config.budget)
    throw Error("ledger in '" + dir + "' exceeds the configured budget");
  if (static_cast<int>(preload.size()) == setup.config.budget && ledger.final_record) {
    RunResult done{best_observation(preload).sequence, std::move(preload)};
    return {done.best, std::move(done.history), paths.summary()};  // complete: no-op
  }
  return detail::execute(paths, setup, std::move(preload));
}

// ---- reporting ------------------------------------------------------------------

struct LedgerSummary {
  std::string path;
  std::string strategy;
  double best_score = 0.0;
  int best_iteration = 0;
  std::vector<double> best_so_far;  // running maximum per evaluation
};

struct StrategyStats {
  std::string strategy;
  int runs = 0;
  double mean_best = 0.0;
  double standard_error = 0.0;
};

struct ReportSummary {
  std::vector<LedgerSummary> ledgers;
  std::vector<StrategyStats> by_strategy;
};

inline ReportSummary report(const std::vector<std::string>& ledger_paths) {
  ReportSummary summary;
  std::map<std::string, std::vector<double>> bests;
  for (const auto& path : ledger_paths) {
    Ledger ledger = read_ledger(path);
    if (ledger.records.empty()) throw Error("ledger '" + path + "' has no evaluations");
    LedgerSummary ls;
    ls.path = path;
    ls.strategy = ledger.header.contains("setup")
                      ? ledger.header["setup"]["config"].value("strategy", "?")
                      : "?";
    double running = -1.0;
    for (const auto& r : ledger.records) {
      if (r.score > running) {  // strict: ties keep the earlier iteration
        running = r.score;
        ls.best_score = r.score;
        ls.best_iteration = r.iteration;
      }
      ls.best_so_far.push_back(running);
    }
    bests[ls.strategy].push_back(ls.best_score);
    summary.ledgers.push_back(std::move(ls));
  }
  for (const auto& [strategy, values] : bests) {
    StrategyStats st;
    st.strategy = strategy;
    st.runs = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    if (values.size() > 1) {
      for (double v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size() - 1);
    }
    st.mean_best = mean;
    st.standard_error = values.size() > 1
                            ? std::sqrt(var) / std::sqrt(static_cast<double>(values.size()))
                            : 0.0;
    summary.by_strategy.push_back(std::move(st));
  }
  return summary;
}

inline nlohmann::json report_to_json(const ReportSummary& summary) {
  nlohmann::json j;
  j["ledgers"] = nlohmann::json::array();
  for (const auto& ls : summary.ledgers)
    j["ledgers"].push_back({{"path", ls.path},
                            {"strategy", ls.strategy},
                            {"best_score", ls.best_score},
                            {"best_iteration", ls.best_iteration},
                            {"best_so_far", ls.best_so_far}});
  j["by_strategy"] = nlohmann::json::array();
  for (const auto& st : summary.by_strategy)
    j["by_strategy"].push_back({{"strategy", st.strategy},
                                {"runs", st.runs},
                                {"mean_best", st.mean_best},
                                {"standard_error", st.standard_error}});
  return j;
}

inline std::string report_to_text(const ReportSummary& summary) {
  std::string out;
  out += "ledger                                     strategy           best   at\n";
  for (const auto& ls : summary.ledgers) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-42s %-18s %.4f  %d\n", ls.path.c_str(),
                  ls.strategy.c_str(), ls.best_score, ls.best_iteration);
    out += line;
  }
  out += "\nstrategy            runs   mean best   std err\n";
  for (const auto& st : summary.by_strategy) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %5d   %9.4f   %.4f\n", st.strategy.c_str(), st.runs,
                  st.mean_best, st.standard_error);
    out += line;
  }
  return out;
}

}  // namespace exsel
