// Command-line front end: run / resume / gen-task / report / embed-cache.
// Exit codes: 0 success, 1 runtime failure, 2 invalid usage or config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exsel/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!exsel::trim(item).empty()) out.push_back(exsel::trim(item));
  return out;
}

struct RunFlags {
  std::string task_dir, out_dir, config_file;
  std::string strategy, embed_mode, polarity;
  int k = 0, budget = 0, t_init = 0, q = 0, q_prime = 0, k_max = 0;
  int retrieve_r = 0, prefilter_m = 0, epochs = 0;
  double nu = 0, pair_factor = 0, lr = 0, weight_decay = 0, lambda = 0, sinkhorn_epsilon = 0;
  bool ot_sinkhorn = false;
  std::uint64_t seed = 0;
  bool joint = false, k_range = false, no_dedup = false, warm_start = false;
  std::string hidden;

  std::string embed_provider, embed_endpoint, embed_model;
  int embed_dim = 0, embed_batch = 0, embed_retries = 0, embed_backoff = 0;
  std::uint64_t embed_seed = 0;

  std::string scorer_kind, scorer_endpoint, scorer_model;
  int max_tokens = 0, scorer_retries = 0, scorer_backoff = 0;
  std::string planted_clean, planted_weights, planted_bonus;
  std::uint64_t oracle_seed = 0;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--task", f.task_dir, "task directory (pool.jsonl, validation.jsonl, ...)");
  cmd->add_option("--out", f.out_dir, "run directory for ledger and results")->required();
  cmd->add_option("--config", f.config_file, "JSON config file (flags override it)");
  cmd->add_option("--strategy", f.strategy,
                  "ease | best-of-n | evo | ot-metric | cosine-retrieval");
  cmd->add_option("--k", f.k, "exemplars per prompt");
  cmd->add_option("--budget", f.budget, "total black-box evaluations T");
  cmd->add_option("--t-init", f.t_init, "random warm-up evaluations");
  cmd->add_option("--q", f.q, "domain sample size per iteration");
  cmd->add_option("--q-prime", f.q_prime, "candidates kept after OT filtering");
  cmd->add_option("--nu", f.nu, "exploration weight");
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_flag("--joint", f.joint, "jointly optimize instruction and exemplars");
  cmd->add_option("--pair-factor", f.pair_factor, "instruction pairing factor r");
  cmd->add_option("--embed-mode", f.embed_mode, "ordered-text | avg-exemplar");
  cmd->add_flag("--k-range", f.k_range, "sample sequence length uniformly in [1, k-max]");
  cmd->add_option("--k-max", f.k_max, "maximum length in k-range mode");
  cmd->add_flag("--no-dedup", f.no_dedup, "allow re-evaluating sequences");
  cmd->add_option("--polarity", f.polarity, "ot-metric ranking polarity: min | max");
  cmd->add_flag("--ot-sinkhorn", f.ot_sinkhorn, "approximate OT distances entropically");
  cmd->add_option("--sinkhorn-epsilon", f.sinkhorn_epsilon, "entropic regularization strength");
  cmd->add_option("--retrieve-r", f.retrieve_r, "cosine-retrieval candidate count R");
  cmd->add_option("--prefilter-m", f.prefilter_m,
                  "retrieval pre-filter: nearest neighbors per validation item (0 = off)");
  cmd->add_option("--hidden", f.hidden, "surrogate hidden widths, e.g. 128,128");
  cmd->add_option("--epochs", f.epochs, "surrogate training epochs");
  cmd->add_option("--lr", f.lr, "surrogate learning rate");
  cmd->add_option("--weight-decay", f.weight_decay, "surrogate weight decay");
  cmd->add_option("--lambda", f.lambda, "uncertainty regularizer");
  cmd->add_flag("--warm-start", f.warm_start, "warm-start surrogate training");

  cmd->add_option("--embed-provider", f.embed_provider, "local-deterministic | remote");
  cmd->add_option("--embed-dim", f.embed_dim, "local embedder dimension");
  cmd->add_option("--embed-seed", f.embed_seed, "local embedder seed");
  cmd->add_option("--embed-endpoint", f.embed_endpoint, "remote embedding endpoint URL");
  cmd->add_option("--embed-model", f.embed_model, "remote embedding model name");
  cmd->add_option("--embed-batch-size", f.embed_batch, "remote embedding batch size");
  cmd->add_option("--embed-max-retries", f.embed_retries, "remote embedding retries");
  cmd->add_option("--embed-backoff-ms", f.embed_backoff, "remote embedding retry backoff");

  cmd->add_option("--scorer", f.scorer_kind, "sim-exactrule | sim-planted | remote-llm");
  cmd->add_option("--scorer-endpoint", f.scorer_endpoint, "chat completion endpoint URL");
  cmd->add_option("--scorer-model", f.scorer_model, "chat completion model name");
  cmd->add_option("--max-tokens", f.max_tokens, "completion token cap (0 = omit)");
  cmd->add_option("--scorer-max-retries", f.scorer_retries, "scorer retries");
  cmd->add_option("--scorer-backoff-ms", f.scorer_backoff, "scorer retry backoff");
  cmd->add_option("--planted-clean", f.planted_clean, "sim-planted clean ids, comma separated");
  cmd->add_option("--planted-weights", f.planted_weights,
                  "sim-planted position weights, comma separated");
  cmd->add_option("--planted-bonus", f.planted_bonus,
                  "sim-planted instruction bonuses, e.g. 2:0.3,4:0.1");
  cmd->add_option("--oracle-seed", f.oracle_seed, "sim oracle seed");
}

exsel::RunSetup build_setup(const CLI::App* cmd, const RunFlags& f) {
  exsel::RunSetup setup;
  setup.scorer.kind = "sim-exactrule";
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw exsel::ConfigError("cannot open config file '" + f.config_file + "'");
    setup = exsel::RunSetup::from_json(json::parse(in));
  }
  auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };

  if (passed("--task")) setup.task_dir = f.task_dir;
  if (setup.task_dir.empty()) throw exsel::ConfigError("no task directory given");

  auto& c = setup.config;
  if (passed("--strategy")) c.strategy = exsel::strategy_from_string(f.strategy);
  if (passed("--k")) c.k = f.k;
  if (passed("--budget")) c.budget = f.budget;
  if (passed("--t-init")) c.t_init = f.t_init;
  if (passed("--q")) c.q = f.q;
  if (passed("--q-prime")) c.q_prime = f.q_prime;
  if (passed("--nu")) c.nu = f.nu;
  if (passed("--seed")) c.seed = f.seed;
  if (passed("--joint")) c.joint_instructions = true;
  if (passed("--pair-factor")) c.pair_factor = f.pair_factor;
  if (passed("--embed-mode")) c.embed_mode = exsel::embed_mode_from_string(f.embed_mode);
  if (passed("--k-range")) c.k_range = true;
  if (passed("--k-max")) c.k_max = f.k_max;
  if (passed("--no-dedup")) c.dedup_across_history = false;
  if (passed("--polarity"))
    c.ot_polarity = f.polarity == "max" ? exsel::OtPolarity::Max : exsel::OtPolarity::Min;
  if (passed("--ot-sinkhorn")) c.ot_sinkhorn = true;
  if (passed("--sinkhorn-epsilon")) c.sinkhorn_epsilon = f.sinkhorn_epsilon;
  if (passed("--retrieve-r")) c.retrieve_r = f.retrieve_r;
  if (passed("--prefilter-m")) c.prefilter_m = f.prefilter_m;
  if (passed("--hidden")) {
    c.hidden.clear();
    for (const auto& part : split_csv(f.hidden)) c.hidden.push_back(std::stoi(part));
  }
  if (passed("--epochs")) c.epochs = f.epochs;
  if (passed("--lr")) c.learning_rate = f.lr;
  if (passed("--weight-decay")) c.weight_decay = f.weight_decay;
  if (passed("--lambda")) c.lambda = f.lambda;
  if (passed("--warm-start")) c.warm_start = true;

  auto& p = setup.provider;
  if (passed("--embed-provider")) p.kind = f.embed_provider;
  if (passed("--embed-dim")) p.dim = f.embed_dim;
  if (passed("--embed-seed")) p.seed = f.embed_seed;
  if (passed("--embed-endpoint")) p.remote.endpoint_url = f.embed_endpoint;
  if (passed("--embed-model")) p.remote.model = f.embed_model;
  if (passed("--embed-batch-size")) p.remote.batch_size = f.embed_batch;
  if (passed("--embed-max-retries")) p.remote.max_retries = f.embed_retries;
  if (passed("--embed-backoff-ms")) p.remote.retry_backoff_ms = f.embed_backoff;

  auto& s = setup.scorer;
  if (passed("--scorer")) s.kind = f.scorer_kind;
  if (passed("--scorer-endpoint")) s.remote.endpoint_url = f.scorer_endpoint;
  if (passed("--scorer-model")) s.remote.model = f.scorer_model;
  if (passed("--max-tokens")) s.remote.max_tokens = f.max_tokens;
  if (passed("--scorer-max-retries")) s.remote.max_retries = f.scorer_retries;
  if (passed("--scorer-backoff-ms")) s.remote.retry_backoff_ms = f.scorer_backoff;
  if (passed("--planted-clean")) s.planted.clean_ids = split_csv(f.planted_clean);
  if (passed("--planted-weights")) {
    s.planted.position_weights.clear();
    for (const auto& part : split_csv(f.planted_weights))
      s.planted.position_weights.push_back(std::stod(part));
  }
  if (passed("--planted-bonus")) {
    for (const auto& part : split_csv(f.planted_bonus)) {
      auto colon = part.find(':');
      if (colon == std::string::npos)
        throw exsel::ConfigError("bad --planted-bonus entry '" + part + "'");
      s.planted.instruction_bonus[std::stoi(part.substr(0, colon))] =
          std::stod(part.substr(colon + 1));
    }
  }
  if (passed("--oracle-seed")) s.planted.seed = f.oracle_seed;
  return setup;
}

struct GenFlags {
  std::string out_dir, in_file;
  long long a = -4, b = 6, lo = -200, hi = 200;
  int n = 100, val_size = 20;
  std::uint64_t seed = 0, noise_seed = 0;
  double noise = 0.0;
  std::string noise_mode = "random-label";
  bool compat_vowel_yay = false;
};

exsel::GeneratedTask apply_noise(exsel::GeneratedTask task, const GenFlags& g) {
  if (g.noise > 0.0) {
    exsel::NoiseSpec spec;
    spec.ratio = g.noise;
    spec.mode = exsel::noise_mode_from_string(g.noise_mode);
    spec.seed = g.noise_seed;
    task.pool = exsel::inject_noise(task.pool, spec);
    task.manifest["noise"] = {{"ratio", g.noise}, {"mode", g.noise_mode}, {"seed", g.noise_seed}};
  }
  return task;
}

void emit_task(const exsel::GeneratedTask& task, const std::string& out_dir) {
  exsel::write_task_dir(out_dir, task);
  std::cout << (fs::path(out_dir) / "manifest.json").string() << "\n";
}

std::vector<exsel::Exemplar> load_labeled_jsonl(const std::string& path) {
  exsel::ExemplarPool pool = exsel::load_pool_jsonl(path);
  return pool.items();
}

// Label-transforming generators share the split/emit plumbing.
void gen_label_task(const GenFlags& g, const std::string& family,
                    const std::function<std::string(const std::string&)>& map_label) {
  auto items = load_labeled_jsonl(g.in_file);
  if (static_cast<int>(items.size()) <= g.val_size)
    throw exsel::ConfigError("need more items than the validation size");
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  exsel::Rng rng = exsel::Rng::stream(g.seed, "label-split");
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  exsel::GeneratedTask task;
  size_t n = items.size() - static_cast<size_t>(g.val_size);
  for (size_t i = 0; i < order.size(); ++i) {
    exsel::Exemplar e;
    e.id = std::to_string(i);
    e.input = items[order[i]].input;
    e.output = map_label(items[order[i]].output);
    if (i < n)
      task.pool.add(std::move(e));
    else
      task.validation.items.push_back(std::move(e));
  }
  task.manifest = {{"family", family},
                   {"n", n},
                   {"validation_size", g.val_size},
                   {"seed", g.seed},
                   {"source", g.in_file}};
  emit_task(apply_noise(std::move(task), g), g.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"black-box selection of in-context exemplar sequences"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "execute a selection strategy");
  add_run_options(run_cmd, rf);

  std::string resume_dir;
  auto* resume_cmd = app.add_subcommand("resume", "continue an interrupted run");
  resume_cmd->add_option("run_dir", resume_dir, "run directory")->required();

  auto* gen_cmd = app.add_subcommand("gen-task", "generate a task directory");
  gen_cmd->require_subcommand(1);
  GenFlags gf;
  auto add_common_gen = [&](CLI::App* c, bool takes_input) {
    c->add_option("--out", gf.out_dir, "output task directory")->required();
    c->add_option("--val-size", gf.val_size, "validation set size");
    c->add_option("--seed", gf.seed, "generator seed");
    c->add_option("--noise", gf.noise, "noise ratio in [0,1]");
    c->add_option("--noise-mode", gf.noise_mode, "random-label | lr-structured | lp-repeat-input");
    c->add_option("--noise-seed", gf.noise_seed, "noise seed");
    if (takes_input) c->add_option("--in", gf.in_file, "input file")->required();
  };
  auto* lr_cmd = gen_cmd->add_subcommand("lr", "linear-rule task y = a*x + b");
  lr_cmd->add_option("--a", gf.a, "slope");
  lr_cmd->add_option("--b", gf.b, "intercept");
  lr_cmd->add_option("--n", gf.n, "pool size");
  lr_cmd->add_option("--lo", gf.lo, "input range lower bound");
  lr_cmd->add_option("--hi", gf.hi, "input range upper bound");
  add_common_gen(lr_cmd, false);
  auto* lp_cmd = gen_cmd->add_subcommand("lp", "language-puzzle variant task");
  lp_cmd->add_flag("--compat-vowel-yay", gf.compat_vowel_yay,
                   "append 'yay' (not 'ay') to vowel-initial words");
  add_common_gen(lp_cmd, true);
  auto* ag_cmd = gen_cmd->add_subcommand("agnews-remap", "shift AG News labels");
  add_common_gen(ag_cmd, true);
  auto* sst_cmd = gen_cmd->add_subcommand("sst5-reverse", "reverse SST5 sentiment labels");
  add_common_gen(sst_cmd, true);

  std::vector<std::string> report_paths;
  std::string report_json_out;
  auto* report_cmd = app.add_subcommand("report", "summarize run ledgers");
  report_cmd->add_option("ledgers", report_paths, "ledger.jsonl paths")->required();
  report_cmd->add_option("--json", report_json_out, "also write a JSON summary here");

  auto* cache_cmd = app.add_subcommand("embed-cache", "inspect or clear an embedding cache");
  cache_cmd->require_subcommand(1);
  std::string cache_path;
  auto* cache_inspect = cache_cmd->add_subcommand("inspect", "print cache statistics");
  cache_inspect->add_option("cache", cache_path, "embed-cache.bin path")->required();
  auto* cache_clear = cache_cmd->add_subcommand("clear", "delete a cache file");
  cache_clear->add_option("cache", cache_path, "embed-cache.bin path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      exsel::RunSetup setup = build_setup(run_cmd, rf);
      exsel::RunOutcome outcome = exsel::start_run(rf.out_dir, setup);
      const auto& best = exsel::best_observation(outcome.history);
      std::printf("best score %.4f at iteration %d (%zu evaluations)\n", best.score,
                  best.iteration, outcome.history.size());
      std::printf("summary: %s\n", outcome.summary_path.c_str());
    } else if (resume_cmd->parsed()) {
      exsel::RunOutcome outcome = exsel::resume_run(resume_dir);
      const auto& best = exsel::best_observation(outcome.history);
      std::printf("best score %.4f at iteration %d (%zu evaluations)\n", best.score,
                  best.iteration, outcome.history.size());
    } else if (gen_cmd->parsed()) {
      if (lr_cmd->parsed()) {
        exsel::LrSpec spec;
        spec.a = gf.a;
        spec.b = gf.b;
        spec.n = gf.n;
        spec.lo = gf.lo;
        spec.hi = gf.hi;
        spec.validation_size = gf.val_size;
        spec.seed = gf.seed;
        emit_task(apply_noise(exsel::gen_lr(spec), gf), gf.out_dir);
      } else if (lp_cmd->parsed()) {
        std::ifstream in(gf.in_file);
        if (!in) throw exsel::ConfigError("cannot open '" + gf.in_file + "'");
        std::vector<std::string> sentences;
        std::string line;
        while (std::getline(in, line))
          if (!exsel::trim(line).empty()) sentences.push_back(exsel::trim(line));
        exsel::LpOptions opt;
        opt.vowel_compat_yay = gf.compat_vowel_yay;
        opt.validation_size = gf.val_size;
        opt.seed = gf.seed;
        emit_task(apply_noise(exsel::gen_lp_variant(sentences, opt), gf), gf.out_dir);
      } else if (ag_cmd->parsed()) {
        gen_label_task(gf, "agnews-remap", exsel::remap_agnews);
      } else {
        gen_label_task(gf, "sst5-reverse", exsel::reverse_sst5);
      }
    } else if (report_cmd->parsed()) {
      exsel::ReportSummary summary = exsel::report(report_paths);
      std::cout << exsel::report_to_text(summary);
      if (!report_json_out.empty()) {
        std::ofstream out(report_json_out, std::ios::trunc);
        if (!out) throw exsel::Error("cannot write '" + report_json_out + "'");
        out << exsel::report_to_json(summary).dump(2) << '\n';
      }
    } else if (cache_cmd->parsed()) {
      if (cache_inspect->parsed()) {
        exsel::EmbeddingCache cache;
        cache.load(cache_path);
        auto bytes = fs::exists(cache_path) ? fs::file_size(cache_path) : 0u;
        std::printf("%zu entries, %llu bytes (%s)\n", cache.size(),
                    static_cast<unsigned long long>(bytes), cache_path.c_str());
      } else {
        bool existed = fs::remove(cache_path);
        std::printf("%s %s\n", cache_path.c_str(), existed ? "removed" : "was not present");
      }
    }
  } catch (const exsel::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
