#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace exsel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or usage (CLI exit code 2), as opposed to runtime
// failures (exit code 1).
struct ConfigError : Error {
  using Error::Error;
};

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// One input/output demonstration pair.
struct Exemplar {
  std::string id;
  std::string input;
  std::string output;
  std::map<std::string, std::string> meta;
};

class ExemplarPool {
 public:
  ExemplarPool() = default;

  void add(Exemplar e) {
    if (trim(e.input).empty() || trim(e.output).empty())
      throw Error("exemplar '" + e.id + "': input and output must be non-empty");
    if (index_.count(e.id)) throw Error("duplicate exemplar id '" + e.id + "'");
    index_.emplace(e.id, items_.size());
    items_.push_back(std::move(e));
  }

  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Exemplar& at(size_t i) const { return items_.at(i); }
  const std::vector<Exemplar>& items() const { return items_; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const Exemplar& by_id(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("unresolved exemplar id '" + id + "'");
    return items_[it->second];
  }

 private:
  std::vector<Exemplar> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Held-out items the black box is scored against.
struct ValidationSet {
  std::vector<Exemplar> items;

  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

struct InstructionSet {
  std::vector<std::string> texts;

  size_t size() const { return texts.size(); }
  bool empty() const { return texts.empty(); }
  const std::string& at(size_t i) const { return texts.at(i); }
};

// Ordered selection of distinct exemplars, optionally carrying an instruction.
// Ordering is part of the identity: the same subset in two orders is two
// distinct sequences.
class ExemplarSequence {
 public:
  ExemplarSequence() = default;

  ExemplarSequence(std::vector<std::string> ids, std::optional<int> instruction = std::nullopt)
      : ids_(std::move(ids)), instruction_(instruction) {
    if (ids_.empty()) throw Error("exemplar sequence must be non-empty");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_)
      if (!seen.insert(id).second) throw Error("duplicate exemplar id '" + id + "' in sequence");
  }

  const std::vector<std::string>& exemplar_ids() const { return ids_; }
  std::optional<int> instruction_id() const { return instruction_; }
  size_t length() const { return ids_.size(); }

  ExemplarSequence with_instruction(int id) const { return ExemplarSequence(ids_, id); }

  // Canonical identity used for dedup, caching and the ledger.
  std::string key() const {
    std::string k = instruction_ ? "i" + std::to_string(*instruction_) : "i-";
    k += '|';
    for (size_t i = 0; i < ids_.size(); ++i) {
      if (i) k += ',';
      k += ids_[i];
    }
    return k;
  }

  // Memoization key for anything that ignores ordering (e.g. OT distances).
  std::string subset_key() const {
    std::vector<std::string> s(ids_);
    std::sort(s.begin(), s.end());
    std::string k;
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) k += ',';
      k += s[i];
    }
    return k;
  }

  friend bool operator==(const ExemplarSequence& a, const ExemplarSequence& b) {
    return a.ids_ == b.ids_ && a.instruction_ == b.instruction_;
  }

 private:
  std::vector<std::string> ids_;
  std::optional<int> instruction_;
};

struct Observation {
  ExemplarSequence sequence;
  double score = 0.0;
  int iteration = 0;
};

// Append-only record of evaluated sequences.
class History {
 public:
  void append(Observation obs) {
    if (obs.score < 0.0 || obs.score > 1.0) throw Error("observation score outside [0,1]");
    if (!obs_.empty() && obs.iteration <= obs_.back().iteration)
      throw Error("observation iterations must be strictly increasing");
    keys_.insert(obs.sequence.key());
    obs_.push_back(std::move(obs));
  }

  size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  const Observation& at(size_t i) const { return obs_.at(i); }
  const std::vector<Observation>& observations() const { return obs_; }
  bool contains(const std::string& sequence_key) const { return keys_.count(sequence_key) != 0; }

 private:
  std::vector<Observation> obs_;
  std::unordered_set<std::string> keys_;
};

// Max score, earliest iteration on ties.
inline const Observation& best_observation(const History& history) {
  if (history.empty()) throw Error("best_observation: history is empty");
  const Observation* best = &history.at(0);
  for (const auto& obs : history.observations())
    if (obs.score > best->score) best = &obs;
  return *best;
}

inline double mean_score(std::span<const double> per_sample) {
  if (per_sample.empty()) throw Error("mean_score: empty sample list");
  double sum = 0.0;
  for (double v : per_sample) {
    if (v < 0.0 || v > 1.0) throw Error("mean_score: value outside [0,1]");
    sum += v;
  }
  return sum / static_cast<double>(per_sample.size());
}

// ---- line-delimited JSON loading --------------------------------------------
//
// One object per line with "input" and "output" fields ("instruction" for
// instruction files). Ids default to the zero-based line index unless an "id"
// field is present.

namespace detail {

inline Exemplar exemplar_from_json(const nlohmann::json& j, size_t line_index) {
  Exemplar e;
  e.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>()
                                                 : j["id"].dump())
                          : std::to_string(line_index);
  if (!j.contains("input") || !j.contains("output"))
    throw Error("line " + std::to_string(line_index + 1) + ": missing input/output field");
  e.input = j["input"].get<std::string>();
  e.output = j["output"].get<std::string>();
  if (j.contains("meta"))
    for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it)
      e.meta[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
  return e;
}

inline nlohmann::json exemplar_to_json(const Exemplar& e) {
  nlohmann::json j{{"id", e.id}, {"input", e.input}, {"output", e.output}};
  if (!e.meta.empty()) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : e.meta) m[k] = v;
    j["meta"] = m;
  }
  return j;
}

template <typename Fn>
void for_each_jsonl_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  size_t index = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(path + ":" + std::to_string(index + 1) + ": " + ex.what());
    }
    fn(j, index);
    ++index;
  }
}

}  // namespace detail

inline ExemplarPool load_pool_jsonl(const std::string& path) {
  ExemplarPool pool;
  detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, size_t i) {
    pool.add(detail::exemplar_from_json(j, i));
  });
  if (pool.empty()) throw Error("pool file '" + path + "' is empty");
  return pool;
}

// Loads a validation set and enforces id-disjointness against the pool it
// validates.
inline ValidationSet load_validation_jsonl(const std::string& path, const ExemplarPool& pool) {
  ValidationSet vs;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, size_t i) {
    Exemplar e = detail::exemplar_from_json(j, i);
    if (!seen.insert(e.id).second) throw Error("duplicate validation id '" + e.id + "'");
    if (pool.contains(e.id))
      throw Error("validation id '" + e.id + "' also present in the pool");
    vs.items.push_back(std::move(e));
  });
  if (vs.empty()) throw Error("validation file '" + path + "' is empty");
  return vs;
}

inline InstructionSet load_instructions_jsonl(const std::string& path) {
  InstructionSet set;
  detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, size_t i) {
    if (!j.contains("instruction"))
      throw Error(path + ":" + std::to_string(i + 1) + ": missing instruction field");
    set.texts.push_back(j["instruction"].get<std::string>());
  });
  if (set.empty()) throw Error("instruction file '" + path + "' is empty");
  return set;
}

inline void save_exemplars_jsonl(const std::string& path, const std::vector<Exemplar>& items) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& e : items) out << detail::exemplar_to_json(e).dump() << '\n';
}

}  // namespace exsel
