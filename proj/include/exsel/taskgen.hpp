#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "exsel/core.hpp"
#include "exsel/rng.hpp"

namespace exsel {

// Generators emit a pool of n exemplars plus a disjoint validation set whose
// ids continue the pool numbering, so the loader's disjointness check holds.
struct GeneratedTask {
  ExemplarPool pool;
  ValidationSet validation;
  nlohmann::json manifest;
};

// ---- linear regression task ----------------------------------------------------

struct LrSpec {
  long long a = -4;
  long long b = 6;
  int n = 100;
  long long lo = -200;
  long long hi = 200;
  int validation_size = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (lo >= hi) throw Error("lr task: lo must be < hi");
    if (n < 1) throw Error("lr task: n must be >= 1");
    if (validation_size < 1) throw Error("lr task: validation size must be >= 1");
  }
};

inline GeneratedTask gen_lr(const LrSpec& spec) {
  spec.validate();
  long long range = spec.hi - spec.lo + 1;
  long long need = static_cast<long long>(spec.n) + spec.validation_size;
  if (range < need)
    throw Error("lr task: input range smaller than requested sample count");
  Rng rng = Rng::stream(spec.seed, "lr-inputs");
  // Distinct x values without materializing huge ranges.
  std::unordered_set<long long> seen;
  std::vector<long long> xs;
  xs.reserve(static_cast<size_t>(need));
  while (static_cast<long long>(xs.size()) < need) {
    long long x = spec.lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(range)));
    if (seen.insert(x).second) xs.push_back(x);
  }
  GeneratedTask task;
  for (long long i = 0; i < need; ++i) {
    Exemplar e;
    e.id = std::to_string(i);
    e.input = std::to_string(xs[static_cast<size_t>(i)]);
    e.output = std::to_string(spec.a * xs[static_cast<size_t>(i)] + spec.b);
    if (i < spec.n)
      task.pool.add(std::move(e));
    else
      task.validation.items.push_back(std::move(e));
  }
  task.manifest = {{"family", "lr"}, {"a", spec.a}, {"b", spec.b}, {"n", spec.n},
                   {"lo", spec.lo},  {"hi", spec.hi}, {"validation_size", spec.validation_size},
                   {"seed", spec.seed}};
  return task;
}

// ---- language puzzle variant -----------------------------------------------------

namespace detail {

inline bool is_vowel(char c) {
  char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return l == 'a' || l == 'e' || l == 'i' || l == 'o' || l == 'u';  // y counts as consonant
}

inline std::string lp_core(const std::string& core, bool vowel_compat_yay) {
  if (core.empty()) return core;
  bool capitalized = std::isupper(static_cast<unsigned char>(core[0])) != 0;
  std::string result;
  if (is_vowel(core[0])) {
    result = core + (vowel_compat_yay ? "yay" : "ay");
  } else {
    size_t p = 0;
    while (p < core.size() && !is_vowel(core[p])) ++p;
    std::string cluster = core.substr(0, p);
    for (char& c : cluster) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    result = core.substr(p) + cluster + "ay";
    if (capitalized && !result.empty()) {
      result[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(result[0])));
      for (size_t i = 1; i < result.size(); ++i)
        result[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(result[i])));
    }
  }
  return result;
}

}  // namespace detail

// Applies the modified pig-Latin rules to one whitespace token. Leading and
// trailing non-alphabetic characters stay attached in place.
inline std::string lp_variant_word(const std::string& word, bool vowel_compat_yay = false) {
  size_t b = 0, e = word.size();
  while (b < e && !std::isalpha(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && !std::isalpha(static_cast<unsigned char>(word[e - 1]))) --e;
  if (b == e) return word;
  return word.substr(0, b) + detail::lp_core(word.substr(b, e - b), vowel_compat_yay) +
         word.substr(e);
}

inline std::string lp_variant_sentence(const std::string& sentence, bool vowel_compat_yay = false) {
  std::string out;
  size_t p = 0;
  while (p < sentence.size()) {
    if (std::isspace(static_cast<unsigned char>(sentence[p]))) {
      out += sentence[p++];
      continue;
    }
    size_t q = p;
    while (q < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[q]))) ++q;
    out += lp_variant_word(sentence.substr(p, q - p), vowel_compat_yay);
    p = q;
  }
  return out;
}

struct LpOptions {
  bool vowel_compat_yay = false;
  int validation_size = 20;
  std::uint64_t seed = 0;
};

inline GeneratedTask gen_lp_variant(const std::vector<std::string>& sentences,
                                    const LpOptions& opt = {}) {
  if (sentences.empty()) throw Error("lp task: no sentences given");
  if (static_cast<int>(sentences.size()) <= opt.validation_size)
    throw Error("lp task: need more sentences than the validation size");
  std::vector<size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(opt.seed, "lp-split");
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  GeneratedTask task;
  size_t n = sentences.size() - static_cast<size_t>(opt.validation_size);
  for (size_t i = 0; i < order.size(); ++i) {
    Exemplar e;
    e.id = std::to_string(i);
    e.input = sentences[order[i]];
    e.output = lp_variant_sentence(sentences[order[i]], opt.vowel_compat_yay);
    if (i < n)
      task.pool.add(std::move(e));
    else
      task.validation.items.push_back(std::move(e));
  }
  task.manifest = {{"family", "lp-variant"},
                   {"n", n},
                   {"validation_size", opt.validation_size},
                   {"vowel_compat_yay", opt.vowel_compat_yay},
                   {"seed", opt.seed}};
  return task;
}

// ---- label remapping --------------------------------------------------------------

inline std::string remap_agnews(const std::string& label) {
  if (label == "World") return "Sports";
  if (label == "Sports") return "Business";
  if (label == "Business") return "Sci/Tech";
  if (label == "Sci/Tech") return "World";
  throw Error("remap_agnews: unknown label '" + label + "'");
}

inline std::string reverse_sst5(const std::string& label) {
  if (label == "very positive") return "very negative";
  if (label == "positive") return "negative";
  if (label == "neutral") return "neutral";
  if (label == "negative") return "positive";
  if (label == "very negative") return "very positive";
  throw Error("reverse_sst5: unknown label '" + label + "'");
}

// ---- noise injection ----------------------------------------------------------------

struct NoiseSpec {
  enum class Mode { RandomLabel, LrStructured, LpRepeatInput };

  double ratio = 0.0;
  Mode mode = Mode::RandomLabel;
  std::uint64_t seed = 0;

  void validate() const {
    if (ratio < 0.0 || ratio > 1.0) throw Error("noise: ratio must be in [0,1]");
  }
};

inline NoiseSpec::Mode noise_mode_from_string(const std::string& s) {
  if (s == "random-label") return NoiseSpec::Mode::RandomLabel;
  if (s == "lr-structured") return NoiseSpec::Mode::LrStructured;
  if (s == "lp-repeat-input") return NoiseSpec::Mode::LpRepeatInput;
  throw Error("unknown noise mode '" + s + "'");
}

inline std::string to_string(NoiseSpec::Mode m) {
  switch (m) {
    case NoiseSpec::Mode::RandomLabel: return "random-label";
    case NoiseSpec::Mode::LrStructured: return "lr-structured";
    case NoiseSpec::Mode::LpRepeatInput: return "lp-repeat-input";
  }
  return "?";
}

// Relabels exactly round(ratio * n) exemplars, chosen uniformly under the
// seed. Inputs never change; relabeled exemplars get meta noise=true.
// Random-label draws donor outputs from the original (pre-noise) labels of
// other exemplars; lr-structured replaces the output with 5x-8.
inline ExemplarPool inject_noise(const ExemplarPool& pool, const NoiseSpec& spec) {
  spec.validate();
  const auto n = static_cast<long long>(pool.size());
  auto count = static_cast<long long>(std::llround(spec.ratio * static_cast<double>(n)));
  Rng rng = Rng::stream(spec.seed, "noise-pick");
  std::vector<int> picked =
      rng.ordered_sample(static_cast<int>(n), static_cast<int>(count));
  std::vector<char> noisy(static_cast<size_t>(n), 0);
  for (int i : picked) noisy[static_cast<size_t>(i)] = 1;

  ExemplarPool out;
  Rng donor_rng = Rng::stream(spec.seed, "noise-donor");
  for (size_t i = 0; i < pool.size(); ++i) {
    Exemplar e = pool.at(i);
    if (noisy[i]) {
      switch (spec.mode) {
        case NoiseSpec::Mode::RandomLabel: {
          if (n < 2) throw Error("noise: random-label needs at least 2 exemplars");
          size_t donor = i;
          while (donor == i) donor = donor_rng.below(static_cast<std::uint64_t>(n));
          e.output = pool.at(donor).output;
          break;
        }
        case NoiseSpec::Mode::LrStructured: {
          long long x = 0;
          try {
            x = std::stoll(trim(e.input));
          } catch (...) {
            throw Error("noise: lr-structured requires numeric inputs (got '" + e.input + "')");
          }
          e.output = std::to_string(5 * x - 8);
          break;
        }
        case NoiseSpec::Mode::LpRepeatInput:
          e.output = e.input;
          break;
      }
      e.meta["noise"] = "true";
    }
    out.add(std::move(e));
  }
  return out;
}

// ---- task directory emission -----------------------------------------------------------

inline void write_task_dir(const std::string& dir, const GeneratedTask& task) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_exemplars_jsonl((fs::path(dir) / "pool.jsonl").string(), task.pool.items());
  save_exemplars_jsonl((fs::path(dir) / "validation.jsonl").string(), task.validation.items);
  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!mf) throw Error("cannot write manifest in '" + dir + "'");
  mf << task.manifest.dump(2) << '\n';
}

struct LoadedTask {
  ExemplarPool pool;
  ValidationSet validation;
  std::optional<InstructionSet> instructions;
};

inline LoadedTask load_task_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedTask t;
  t.pool = load_pool_jsonl((fs::path(dir) / "pool.jsonl").string());
  t.validation = load_validation_jsonl((fs::path(dir) / "validation.jsonl").string(), t.pool);
  auto instr = fs::path(dir) / "instructions.jsonl";
  if (fs::exists(instr)) t.instructions = load_instructions_jsonl(instr.string());
  return t;
}

}  // namespace exsel
