#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "exsel/core.hpp"
#include "exsel/embed.hpp"
#include "exsel/evaluate.hpp"
#include "exsel/ot.hpp"
#include "exsel/rng.hpp"
#include "exsel/surrogate.hpp"

namespace exsel {

enum class Strategy { Ease, BestOfN, Evo, OtMetric, CosineRetrieval };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Ease: return "ease";
    case Strategy::BestOfN: return "best-of-n";
    case Strategy::Evo: return "evo";
    case Strategy::OtMetric: return "ot-metric";
    case Strategy::CosineRetrieval: return "cosine-retrieval";
  }
  return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "ease") return Strategy::Ease;
  if (s == "best-of-n") return Strategy::BestOfN;
  if (s == "evo") return Strategy::Evo;
  if (s == "ot-metric") return Strategy::OtMetric;
  if (s == "cosine-retrieval") return Strategy::CosineRetrieval;
  throw Error("unknown strategy '" + s + "'");
}

enum class OtPolarity { Min, Max };

struct RunConfig {
  int k = 5;
  int budget = 165;  // total black-box evaluations T
  int t_init = 10;   // random warm-up evaluations
  int q = 50000;     // domain sample size per iteration
  int q_prime = 200; // candidates kept after OT filtering
  double nu = 0.01;  // exploration weight
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Ease;
  bool joint_instructions = false;
  double pair_factor = 1.0;  // r in the instruction augmentation
  EmbedMode embed_mode = EmbedMode::OrderedText;
  bool k_range = false;  // sample sequence length uniformly in [1, k_max]
  int k_max = 5;
  bool dedup_across_history = true;
  OtPolarity ot_polarity = OtPolarity::Min;
  bool ot_sinkhorn = false;       // approximate OT distances entropically
  double sinkhorn_epsilon = 0.01;
  int retrieve_r = 10;   // cosine-retrieval candidate count
  int prefilter_m = 0;   // per-validation-item nearest neighbors; 0 = off

  // surrogate settings
  std::vector<int> hidden{128, 128};
  int epochs = 300;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  double lambda = 1.0;
  bool warm_start = false;

  void validate(size_t pool_size) const {
    if (budget < 1) throw ConfigError("config: budget must be >= 1");
    if (t_init < 1 || t_init > budget) throw ConfigError("config: need 1 <= t_init <= budget");
    if (q < 1) throw ConfigError("config: q must be >= 1");
    if (q_prime < 1 || q_prime > q) throw ConfigError("config: need 1 <= q_prime <= q");
    if (nu < 0.0) throw ConfigError("config: nu must be >= 0");
    int len_cap = k_range ? k_max : k;
    if (len_cap < 1) throw ConfigError("config: k must be >= 1");
    if (static_cast<size_t>(len_cap) > pool_size)
      throw ConfigError("config: k exceeds pool size");
    if (pair_factor <= 0.0) throw ConfigError("config: pair factor must be positive");
    if (epochs < 1 || learning_rate <= 0.0) throw ConfigError("config: bad surrogate settings");
    if (lambda <= 0.0) throw ConfigError("config: lambda must be positive");
  }

  nlohmann::json to_json() const {
    return {{"k", k},
            {"budget", budget},
            {"t_init", t_init},
            {"q", q},
            {"q_prime", q_prime},
            {"nu", nu},
            {"seed", seed},
            {"strategy", to_string(strategy)},
            {"joint_instructions", joint_instructions},
            {"pair_factor", pair_factor},
            {"embed_mode", exsel::to_string(embed_mode)},
            {"k_range", k_range},
            {"k_max", k_max},
            {"dedup_across_history", dedup_across_history},
            {"ot_polarity", ot_polarity == OtPolarity::Min ? "min" : "max"},
            {"ot_sinkhorn", ot_sinkhorn},
            {"sinkhorn_epsilon", sinkhorn_epsilon},
            {"retrieve_r", retrieve_r},
            {"prefilter_m", prefilter_m},
            {"hidden", hidden},
            {"epochs", epochs},
            {"learning_rate", learning_rate},
            {"weight_decay", weight_decay},
            {"lambda", lambda},
            {"warm_start", warm_start}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.k = j.value("k", 5);
    c.budget = j.value("budget", 165);
    c.t_init = j.value("t_init", 10);
    c.q = j.value("q", 50000);
    c.q_prime = j.value("q_prime", 200);
    c.nu = j.value("nu", 0.01);
    c.seed = j.value("seed", std::uint64_t{0});
    c.strategy = strategy_from_string(j.value("strategy", "ease"));
    c.joint_instructions = j.value("joint_instructions", false);
    c.pair_factor = j.value("pair_factor", 1.0);
    c.embed_mode = embed_mode_from_string(j.value("embed_mode", "ordered-text"));
    c.k_range = j.value("k_range", false);
    c.k_max = j.value("k_max", c.k);
    c.dedup_across_history = j.value("dedup_across_history", true);
    c.ot_polarity = j.value("ot_polarity", "min") == std::string("max") ? OtPolarity::Max
                                                                        : OtPolarity::Min;
    c.ot_sinkhorn = j.value("ot_sinkhorn", false);
    c.sinkhorn_epsilon = j.value("sinkhorn_epsilon", 0.01);
    c.retrieve_r = j.value("retrieve_r", 10);
    c.prefilter_m = j.value("prefilter_m", 0);
    c.hidden = j.value("hidden", std::vector<int>{128, 128});
    c.epochs = j.value("epochs", 300);
    c.learning_rate = j.value("learning_rate", 1e-2);
    c.weight_decay = j.value("weight_decay", 0.0);
    c.lambda = j.value("lambda", 1.0);
    c.warm_start = j.value("warm_start", false);
    return c;
  }
};

// ---- sampling --------------------------------------------------------------------

namespace detail {

inline ExemplarSequence random_sequence(const ExemplarPool& pool, int len, Rng& rng) {
  std::vector<int> picks = rng.ordered_sample(static_cast<int>(pool.size()), len);
  std::vector<std::string> ids;
  ids.reserve(picks.size());
  for (int p : picks) ids.push_back(pool.at(static_cast<size_t>(p)).id);
  return ExemplarSequence(std::move(ids));
}

inline int sample_length(const RunConfig& cfg, Rng& rng) {
  if (!cfg.k_range) return cfg.k;
  return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.k_max)));
}

// Lexicographic enumeration of ordered selections; fallback that guarantees
// an unseen sequence exists iff the space is not exhausted. Only used when
// the space is small enough to walk.
inline std::optional<ExemplarSequence> first_unseen_exhaustive(const ExemplarPool& pool, int len,
                                                               const History& history,
                                                               std::optional<int> instruction,
                                                               double space_cap = 2e6) {
  const int n = static_cast<int>(pool.size());
  double space = 1.0;
  for (int i = 0; i < len; ++i) space *= static_cast<double>(n - i);
  if (space > space_cap) return std::nullopt;
  std::vector<int> idx(static_cast<size_t>(len), 0);
  std::vector<char> used(static_cast<size_t>(n), 0);
  std::function<std::optional<ExemplarSequence>(int, std::vector<std::string>&)> rec =
      [&](int depth, std::vector<std::string>& acc) -> std::optional<ExemplarSequence> {
    if (depth == len) {
      ExemplarSequence seq(acc, instruction);
      if (!history.contains(seq.key())) return seq;
      return std::nullopt;
    }
    for (int i = 0; i < n; ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      used[static_cast<size_t>(i)] = 1;
      acc.push_back(pool.at(static_cast<size_t>(i)).id);
      auto r = rec(depth + 1, acc);
      acc.pop_back();
      used[static_cast<size_t>(i)] = 0;
      if (r) return r;
    }
    return std::nullopt;
  };
  std::vector<std::string> acc;
  return rec(0, acc);
}

}  // namespace detail

// Uniform draws from the ordered-without-replacement space; duplicates within
// the draw are retried a bounded number of times, then the sample is accepted
// short.
inline std::vector<ExemplarSequence> sample_domain(const ExemplarPool& pool, const RunConfig& cfg,
                                                   Rng& rng) {
  if (!cfg.k_range && static_cast<size_t>(cfg.k) > pool.size())
    throw Error("sample_domain: k exceeds pool size");
  std::vector<ExemplarSequence> out;
  out.reserve(static_cast<size_t>(cfg.q));
  std::unordered_set<std::string> seen;
  const int max_retries = 20;
  for (int i = 0; i < cfg.q; ++i) {
    // Bounded retries on within-draw duplicates; the sample is accepted short
    // when a slot keeps colliding.
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      ExemplarSequence seq = detail::random_sequence(pool, detail::sample_length(cfg, rng), rng);
      if (seen.insert(seq.key()).second) {
        out.push_back(std::move(seq));
        break;
      }
    }
  }
  return out;
}

// Pairs ceil(q'/(r*|P|)) retained sequences with r*|P| sampled instructions
// (the full cross product when the budget allows); output size stays <= q'.
inline std::vector<ExemplarSequence> augment_with_instructions(
    const std::vector<ExemplarSequence>& filtered, const InstructionSet& instructions, double r,
    int q_prime, Rng& rng) {
  if (instructions.empty()) throw Error("augment_with_instructions: empty instruction set");
  const int p = static_cast<int>(instructions.size());
  int per_seq = static_cast<int>(std::llround(r * p));
  per_seq = std::clamp(per_seq, 1, p);
  per_seq = std::min(per_seq, q_prime);
  int keep = (q_prime + per_seq - 1) / per_seq;
  keep = std::min<int>(keep, static_cast<int>(filtered.size()));

  std::vector<ExemplarSequence> out;
  out.reserve(static_cast<size_t>(q_prime));
  for (int s = 0; s < keep && static_cast<int>(out.size()) < q_prime; ++s) {
    std::vector<int> chosen;
    if (per_seq == p) {
      chosen.resize(static_cast<size_t>(p));
      std::iota(chosen.begin(), chosen.end(), 0);
    } else {
      chosen = rng.ordered_sample(p, per_seq);
    }
    for (int instr : chosen) {
      if (static_cast<int>(out.size()) >= q_prime) break;
      out.push_back(filtered[static_cast<size_t>(s)].with_instruction(instr));
    }
  }
  return out;
}

// Union of each validation item's m nearest pool exemplars by cosine
// similarity; pool order is preserved in the result.
inline ExemplarPool retrieval_prefilter(const ExemplarPool& pool, const ValidationSet& validation,
                                        int m, const EmbeddingTable& table) {
  if (m < 1) throw Error("retrieval_prefilter: m must be >= 1");
  if (pool.empty()) throw Error("retrieval_prefilter: empty pool");
  std::unordered_set<std::string> keep;
  for (const auto& item : validation.items) {
    const Embedding& v = table.at(item.id);
    std::vector<std::pair<double, size_t>> sims(pool.size());
    for (size_t i = 0; i < pool.size(); ++i)
      sims[i] = {cosine_similarity(table.at(pool.at(i).id), v), i};
    std::stable_sort(sims.begin(), sims.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t r = 0; r < sims.size() && r < static_cast<size_t>(m); ++r)
      keep.insert(pool.at(sims[r].second).id);
  }
  ExemplarPool reduced;
  for (const auto& e : pool.items())
    if (keep.count(e.id)) reduced.add(e);
  return reduced;
}

// ---- run driver -------------------------------------------------------------------

struct EvalRecord {
  Observation observation;
  std::optional<double> ot_distance;
};

using EvalSink = std::function<void(const EvalRecord&)>;

struct RunResult {
  ExemplarSequence best;
  History history;
};

struct RunInputs {
  const ExemplarPool& pool;
  const ValidationSet& validation;
  Scorer& scorer;
  EmbeddingService& embedder;
  const InstructionSet* instructions = nullptr;
  History preload;         // resume support: already-evaluated observations
  EvalSink sink = nullptr; // called once per new evaluation, in order
};

namespace detail {

class RunDriver {
 public:
  RunDriver(const RunConfig& cfg, RunInputs& in)
      : cfg_(cfg), in_(in), history_(std::move(in.preload)) {
    cfg_.validate(in.pool.size());
    sinkhorn_params_.epsilon = cfg_.sinkhorn_epsilon;
    if (cfg_.joint_instructions && (!in.instructions || in.instructions->empty()))
      throw Error("joint instruction mode requires a non-empty instruction set");
    table_ = precompute_pool_embeddings(in.embedder, in.pool, in.validation);
    mu_v_ = validation_measure(in.validation, table_);
  }

  RunResult run() {
    switch (cfg_.strategy) {
      case Strategy::Ease: run_ease(); break;
      case Strategy::BestOfN: run_best_of_n(); break;
      case Strategy::Evo: run_evo(); break;
      case Strategy::OtMetric: run_ot_metric(); break;
      case Strategy::CosineRetrieval: run_cosine_retrieval(); break;
    }
    const Observation& best = best_observation(history_);
    return {best.sequence, std::move(history_)};
  }

 private:
  int next_iteration() const { return static_cast<int>(history_.size()); }

  const SinkhornParams* sinkhorn() const {
    return cfg_.ot_sinkhorn ? &sinkhorn_params_ : nullptr;
  }

  std::optional<int> random_instruction(Rng& rng) const {
    if (!cfg_.joint_instructions) return std::nullopt;
    return static_cast<int>(rng.below(in_.instructions->size()));
  }

  ExemplarSequence random_unseen(const char* stream, int t) {
    Rng rng = Rng::stream(cfg_.seed, stream, static_cast<std::uint64_t>(t));
    const int max_retries = 1000;
    ExemplarSequence last;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      int len = sample_length(cfg_, rng);
      ExemplarSequence seq = random_sequence(in_.pool, len, rng);
      if (auto instr = random_instruction(rng)) seq = seq.with_instruction(*instr);
      if (!cfg_.dedup_across_history || !history_.contains(seq.key())) return seq;
      last = seq;
    }
    if (cfg_.dedup_across_history) {
      Rng lrng = Rng::stream(cfg_.seed, stream, static_cast<std::uint64_t>(t));
      auto instr = cfg_.joint_instructions
                       ? std::optional<int>(static_cast<int>(lrng.below(in_.instructions->size())))
                       : std::nullopt;
      if (auto seq = first_unseen_exhaustive(in_.pool, cfg_.k_range ? cfg_.k_max : cfg_.k,
                                             history_, instr))
        return *seq;
    }
    return last;  // space exhausted: accept a repeat to keep the budget exact
  }

  double evaluate_and_record(const ExemplarSequence& seq, std::optional<double> ot) {
    double score =
        validation_score(seq, in_.pool, in_.instructions, in_.validation, in_.scorer);
    Observation obs{seq, score, next_iteration()};
    history_.append(obs);
    if (in_.sink) in_.sink({obs, ot});
    return score;
  }

  void warm_up() {
    while (next_iteration() < std::min(cfg_.t_init, cfg_.budget))
      evaluate_and_record(random_unseen("uniform", next_iteration()), std::nullopt);
  }

  Embedding sequence_embedding(const ExemplarSequence& seq) {
    auto it = seq_embeddings_.find(seq.key());
    if (it != seq_embeddings_.end()) return it->second;
    Embedding v =
        embed_sequence(in_.embedder, seq, in_.pool, in_.instructions, cfg_.embed_mode, &table_);
    seq_embeddings_.emplace(seq.key(), v);
    return v;
  }

  TrainSpec train_spec() const {
    TrainSpec spec;
    spec.epochs = cfg_.epochs;
    spec.learning_rate = cfg_.learning_rate;
    spec.weight_decay = cfg_.weight_decay;
    spec.init_seed = cfg_.seed;
    spec.warm_start = cfg_.warm_start;
    return spec;
  }

  // One acquisition iteration: train on history, sample, OT-filter, optionally
  // augment with instructions, pick the acquisition argmax, evaluate, update
  // the uncertainty state with the chosen candidate's gradient features.
  void ease_iteration(int t, ScoreModel& model, UncertaintyState& state, bool evaluate) {
    // Train on the observations before iteration t only, so a replayed
    // iteration (resume) sees exactly what the original run saw.
    std::vector<Embedding> xs;
    std::vector<double> ys;
    xs.reserve(static_cast<size_t>(t));
    ys.reserve(static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) {
      const auto& obs = history_.at(static_cast<size_t>(i));
      xs.push_back(sequence_embedding(obs.sequence));
      ys.push_back(obs.score);
    }
    model.train(xs, ys, train_spec());

    ExemplarSequence chosen;
    std::optional<double> chosen_ot;
    if (evaluate) {
      Rng domain_rng = Rng::stream(cfg_.seed, "domain", static_cast<std::uint64_t>(t));
      std::vector<ExemplarSequence> candidates = sample_domain(in_.pool, cfg_, domain_rng);
      std::vector<ExemplarSequence> filtered = filter_top(
          candidates, static_cast<size_t>(cfg_.q_prime), table_, mu_v_, &ot_memo_, sinkhorn());
      if (cfg_.joint_instructions) {
        Rng instr_rng = Rng::stream(cfg_.seed, "instr", static_cast<std::uint64_t>(t));
        filtered = augment_with_instructions(filtered, *in_.instructions, cfg_.pair_factor,
                                             cfg_.q_prime, instr_rng);
      }
      if (cfg_.dedup_across_history) {
        std::erase_if(filtered,
                      [&](const ExemplarSequence& s) { return history_.contains(s.key()); });
      }
      if (filtered.empty()) {
        chosen = random_unseen("fallback", t);
      } else {
        size_t best_idx = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < filtered.size(); ++i) {
          double value = acquisition(model, state, sequence_embedding(filtered[i]), cfg_.nu);
          if (value > best_value) {
            best_value = value;
            best_idx = i;
          }
        }
        chosen = filtered[best_idx];
      }
      chosen_ot = subset_ot_distance(chosen, table_, mu_v_, &ot_memo_, sinkhorn());
      evaluate_and_record(chosen, chosen_ot);
    } else {
      chosen = history_.at(static_cast<size_t>(t)).sequence;  // replay path
    }
    state.update(model.gradient_features(sequence_embedding(chosen)));
  }

  void run_ease() {
    warm_up();
    int embed_dim = table_.dim;
    ScoreModel model(embed_dim, cfg_.hidden, cfg_.seed);
    UncertaintyState state(model.feature_dim(), cfg_.lambda);
    // Replay already-recorded acquisition iterations (resume) to reconstruct
    // the surrogate/uncertainty trajectory exactly.
    for (int t = cfg_.t_init; t < static_cast<int>(history_.size()); ++t)
      ease_iteration(t, model, state, /*evaluate=*/false);
    while (next_iteration() < cfg_.budget)
      ease_iteration(next_iteration(), model, state, /*evaluate=*/true);
  }

  void run_best_of_n() {
    while (next_iteration() < cfg_.budget)
      evaluate_and_record(random_unseen("uniform", next_iteration()), std::nullopt);
  }

  void run_evo() {
    if (history_.empty()) evaluate_and_record(random_unseen("uniform", 0), std::nullopt);
    while (next_iteration() < cfg_.budget) {
      int t = next_iteration();
      const ExemplarSequence& incumbent = best_observation(history_).sequence;
      evaluate_and_record(mutate(incumbent, t), std::nullopt);
    }
  }

  // Replaces one uniformly chosen position with a uniformly chosen non-member.
  ExemplarSequence mutate(const ExemplarSequence& parent, int t) {
    Rng rng = Rng::stream(cfg_.seed, "evo", static_cast<std::uint64_t>(t));
    std::unordered_set<std::string> members(parent.exemplar_ids().begin(),
                                            parent.exemplar_ids().end());
    std::vector<std::string> outside;
    for (const auto& e : in_.pool.items())
      if (!members.count(e.id)) outside.push_back(e.id);
    if (outside.empty()) return parent;  // nothing to mutate to
    const int max_retries = 100;
    ExemplarSequence last = parent;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      auto ids = parent.exemplar_ids();
      size_t pos = rng.below(ids.size());
      ids[pos] = outside[rng.below(outside.size())];
      ExemplarSequence child(std::move(ids), parent.instruction_id());
      if (!cfg_.dedup_across_history || !history_.contains(child.key())) return child;
      last = child;
    }
    return last;
  }

  // Ranks a q-sized domain sample by OT distance under the configured
  // polarity and spends the budget on the ranking order, best rank first.
  void run_ot_metric() {
    Rng rng = Rng::stream(cfg_.seed, "otmetric", 0);
    std::vector<ExemplarSequence> candidates = sample_domain(in_.pool, cfg_, rng);
    std::vector<std::pair<double, size_t>> ranked(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
      ranked[i] = {subset_ot_distance(candidates[i], table_, mu_v_, &ot_memo_, sinkhorn()), i};
    std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      return cfg_.ot_polarity == OtPolarity::Min ? a.first < b.first : a.first > b.first;
    });
    size_t rank = history_.size();  // resume continues down the ranking
    while (next_iteration() < cfg_.budget) {
      if (rank < ranked.size()) {
        const auto& [dist, idx] = ranked[rank];
        evaluate_and_record(candidates[idx], dist);
        ++rank;
      } else {
        evaluate_and_record(random_unseen("otmetric-extra", next_iteration()), std::nullopt);
      }
    }
  }

  // Retrieve-then-sample: top-R pool exemplars by mean cosine similarity to
  // the validation embeddings, then uniform sequences from those R.
  void run_cosine_retrieval() {
    if (cfg_.retrieve_r < (cfg_.k_range ? cfg_.k_max : cfg_.k))
      throw Error("cosine-retrieval: R must be >= k");
    std::vector<std::pair<double, size_t>> scored(in_.pool.size());
    for (size_t i = 0; i < in_.pool.size(); ++i) {
      const Embedding& v = table_.at(in_.pool.at(i).id);
      double mean_sim = 0.0;
      for (const auto& item : in_.validation.items)
        mean_sim += cosine_similarity(v, table_.at(item.id));
      scored[i] = {mean_sim / static_cast<double>(in_.validation.size()), i};
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    ExemplarPool reduced;
    for (size_t r = 0; r < scored.size() && r < static_cast<size_t>(cfg_.retrieve_r); ++r)
      reduced.add(in_.pool.at(scored[r].second));

    while (next_iteration() < cfg_.budget) {
      int t = next_iteration();
      Rng rng = Rng::stream(cfg_.seed, "cosine", static_cast<std::uint64_t>(t));
      const int max_retries = 1000;
      ExemplarSequence seq;
      bool found = false;
      for (int attempt = 0; attempt <= max_retries; ++attempt) {
        seq = random_sequence(reduced, sample_length(cfg_, rng), rng);
        if (auto instr = random_instruction(rng)) seq = seq.with_instruction(*instr);
        if (!cfg_.dedup_across_history || !history_.contains(seq.key())) {
          found = true;
          break;
        }
      }
      if (!found && cfg_.dedup_across_history) {
        if (auto unseen = first_unseen_exhaustive(reduced, cfg_.k_range ? cfg_.k_max : cfg_.k,
                                                  history_, std::nullopt))
          seq = *unseen;
      }
      evaluate_and_record(seq, std::nullopt);
    }
  }

  RunConfig cfg_;
  RunInputs& in_;
  History history_;
  EmbeddingTable table_;
  DiscreteMeasure mu_v_;
  OtDistanceMemo ot_memo_;
  SinkhornParams sinkhorn_params_;
  std::unordered_map<std::string, Embedding> seq_embeddings_;
};

}  // namespace detail

// Executes the configured strategy for exactly `budget` black-box evaluations
// (observations preloaded for resume count toward the budget) and returns the
// best sequence with the full history.
inline RunResult run(const RunConfig& cfg, RunInputs inputs) {
  detail::RunDriver driver(cfg, inputs);
  return driver.run();
}

}  // namespace exsel
