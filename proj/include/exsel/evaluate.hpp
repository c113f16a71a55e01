#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "exsel/core.hpp"
#include "exsel/http.hpp"
#include "exsel/prompt.hpp"
#include "exsel/rng.hpp"

namespace exsel {

// Exact match after normalization: trim, ASCII casefold, collapse internal
// whitespace runs. No punctuation stripping.
inline std::string normalize_answer(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char raw : s) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

inline int score_sample(const std::string& model_output, const std::string& gold) {
  return normalize_answer(model_output) == normalize_answer(gold) ? 1 : 0;
}

// What a scorer sees for one validation item.
struct ScoreRequest {
  const ExemplarSequence& sequence;
  const ExemplarPool& pool;
  const InstructionSet* instructions;
  const Exemplar& item;
  const std::string& prompt;  // fully rendered
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string complete(const ScoreRequest& request) = 0;
};

// Mean per-item match score; one call here is one unit of the query budget.
inline double validation_score(const ExemplarSequence& seq, const ExemplarPool& pool,
                               const InstructionSet* instructions,
                               const ValidationSet& validation, Scorer& scorer) {
  if (validation.empty()) throw Error("validation_score: empty validation set");
  double sum = 0.0;
  for (const auto& item : validation.items) {
    std::string prompt = render_prompt(seq, pool, instructions, item.input);
    std::string reply = scorer.complete({seq, pool, instructions, item, prompt});
    sum += score_sample(reply, item.output);
  }
  return sum / static_cast<double>(validation.size());
}

// ---- simulated oracles ---------------------------------------------------------

struct PlantedOracleParams {
  std::vector<std::string> clean_ids;          // the planted set C
  std::vector<double> position_weights;        // w_1..w_k, decreasing
  std::unordered_map<int, double> instruction_bonus;
  std::uint64_t seed = 0;

  void validate() const {
    if (clean_ids.empty()) throw Error("planted oracle: clean id set is empty");
    if (position_weights.empty()) throw Error("planted oracle: position weights are empty");
    for (size_t i = 1; i < position_weights.size(); ++i)
      if (position_weights[i] > position_weights[i - 1])
        throw Error("planted oracle: position weights must be non-increasing");
  }
};

// Order-sensitive desk-scale stand-in for the black box: the probability of
// answering an item correctly is sum_i w_i [e_i in C] (plus any instruction
// bonus), and the Bernoulli draw is keyed by (sequence, item) so the
// validation score is a deterministic function of the sequence.
class SimPlantedOracle : public Scorer {
 public:
  explicit SimPlantedOracle(PlantedOracleParams params) : params_(std::move(params)) {
    params_.validate();
    for (const auto& id : params_.clean_ids) clean_.insert(id);
  }

  double success_probability(const ExemplarSequence& seq) const {
    double p = 0.0;
    const auto& ids = seq.exemplar_ids();
    for (size_t i = 0; i < ids.size() && i < params_.position_weights.size(); ++i)
      if (clean_.count(ids[i])) p += params_.position_weights[i];
    if (seq.instruction_id()) {
      auto it = params_.instruction_bonus.find(*seq.instruction_id());
      if (it != params_.instruction_bonus.end()) p += it->second;
    }
    return std::clamp(p, 0.0, 1.0);
  }

  std::string complete(const ScoreRequest& request) override {
    double p = success_probability(request.sequence);
    Rng rng = Rng::stream(params_.seed, "planted",
                          fnv1a64(request.sequence.key() + "\x1f" + request.item.id));
    return rng.uniform01() < p ? request.item.output : "__corrupted__";
  }

 private:
  PlantedOracleParams params_;
  std::unordered_set<std::string> clean_;
};

// In-context rule inducer for linear tasks: fits integer candidate lines
// y = a x + b from all exemplar pairs in the prompt and answers with the line
// that explains the most exemplars (ties go to the earliest pair). Noisy
// exemplars in the prompt degrade its answers the way a real ICL model's do.
class SimExactRuleOracle : public Scorer {
 public:
  std::string complete(const ScoreRequest& request) override {
    std::vector<std::pair<long long, long long>> points;
    for (const auto& id : request.sequence.exemplar_ids()) {
      const Exemplar& e = request.pool.by_id(id);
      auto x = parse_int(e.input);
      auto y = parse_int(e.output);
      if (x && y) points.emplace_back(*x, *y);
    }
    auto test_x = parse_int(request.item.input);
    if (!test_x || points.size() < 2) return "";

    long long best_a = 0, best_b = 0;
    int best_support = -1;
    for (size_t i = 0; i < points.size(); ++i)
      for (size_t j = i + 1; j < points.size(); ++j) {
        long long dx = points[j].first - points[i].first;
        long long dy = points[j].second - points[i].second;
        if (dx == 0 || dy % dx != 0) continue;
        long long a = dy / dx;
        long long b = points[i].second - a * points[i].first;
        int support = 0;
        for (const auto& [px, py] : points)
          if (py == a * px + b) ++support;
        if (support > best_support) {
          best_support = support;
          best_a = a;
          best_b = b;
        }
      }
    if (best_support < 0) return "";
    return std::to_string(best_a * *test_x + best_b);
  }

 private:
  static std::optional<long long> parse_int(const std::string& s) {
    std::string t = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
  }
};

// ---- remote LLM scorer ---------------------------------------------------------

struct RemoteScorerConfig {
  std::string endpoint_url;  // e.g. https://host/v1/chat/completions
  std::string model;
  int max_tokens = 0;  // 0 = omit the field
  int max_retries = 3;
  int retry_backoff_ms = 250;
  std::string api_key_env = "EXSEL_SCORER_API_KEY";
};

// One chat completion at temperature 0; the first line of the reply is the
// answer.
class RemoteLlmScorer : public Scorer {
 public:
  explicit RemoteLlmScorer(RemoteScorerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint_url.empty()) throw Error("remote scorer: endpoint not configured");
  }

  std::string complete(const ScoreRequest& request) override {
    nlohmann::json body{
        {"model", cfg_.model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    if (cfg_.max_tokens > 0) body["max_tokens"] = cfg_.max_tokens;
    nlohmann::json reply =
        post_json_with_retries(cfg_.endpoint_url, body, api_key_from_env(cfg_.api_key_env),
                               {cfg_.max_retries, cfg_.retry_backoff_ms}, &requests_, &retries_);
    std::string content;
    try {
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(std::string("chat completion response shape mismatch: ") + ex.what());
    }
    auto nl = content.find('\n');
    if (nl != std::string::npos) content.resize(nl);
    return trim(content);
  }

  long requests_made() const { return requests_.load(); }
  long retries_made() const { return retries_.load(); }

 private:
  RemoteScorerConfig cfg_;
  std::atomic<long> requests_{0};
  std::atomic<long> retries_{0};
};

// ---- scorer spec (config/ledger serialization) ----------------------------------

struct ScorerSpec {
  std::string kind = "sim-planted";  // sim-planted | sim-exactrule | remote-llm
  PlantedOracleParams planted;
  RemoteScorerConfig remote;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "sim-planted") {
      j["clean_ids"] = planted.clean_ids;
      j["position_weights"] = planted.position_weights;
      j["seed"] = planted.seed;
      if (!planted.instruction_bonus.empty()) {
        nlohmann::json bonus = nlohmann::json::object();
        for (const auto& [id, b] : planted.instruction_bonus) bonus[std::to_string(id)] = b;
        j["instruction_bonus"] = bonus;
      }
    } else if (kind == "remote-llm") {
      j["endpoint_url"] = remote.endpoint_url;
      j["model"] = remote.model;
      j["max_tokens"] = remote.max_tokens;
      j["max_retries"] = remote.max_retries;
      j["retry_backoff_ms"] = remote.retry_backoff_ms;
    }
    return j;
  }

  static ScorerSpec from_json(const nlohmann::json& j) {
    ScorerSpec s;
    s.kind = j.value("kind", "sim-planted");
    if (j.contains("clean_ids")) s.planted.clean_ids = j["clean_ids"].get<std::vector<std::string>>();
    if (j.contains("position_weights"))
      s.planted.position_weights = j["position_weights"].get<std::vector<double>>();
    s.planted.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("instruction_bonus"))
      for (auto it = j["instruction_bonus"].begin(); it != j["instruction_bonus"].end(); ++it)
        s.planted.instruction_bonus[std::stoi(it.key())] = it.value().get<double>();
    s.remote.endpoint_url = j.value("endpoint_url", "");
    s.remote.model = j.value("model", "");
    s.remote.max_tokens = j.value("max_tokens", 0);
    s.remote.max_retries = j.value("max_retries", 3);
    s.remote.retry_backoff_ms = j.value("retry_backoff_ms", 250);
    return s;
  }

  std::unique_ptr<Scorer> instantiate() const {
    if (kind == "sim-planted") return std::make_unique<SimPlantedOracle>(planted);
    if (kind == "sim-exactrule") return std::make_unique<SimExactRuleOracle>();
    if (kind == "remote-llm") return std::make_unique<RemoteLlmScorer>(remote);
    throw Error("unknown scorer kind '" + kind + "'");
  }
};

}  // namespace exsel
