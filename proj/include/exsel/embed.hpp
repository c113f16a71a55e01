#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <exception>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "exsel/core.hpp"
#include "exsel/http.hpp"
#include "exsel/prompt.hpp"
#include "exsel/rng.hpp"
#include "exsel/sha256.hpp"

namespace exsel {

using Embedding = std::vector<double>;

inline double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

inline void l2_normalize(Embedding& v) {
  double n = norm(v);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine_similarity: zero vector");
  return dot(a, b) / (na * nb);
}

enum class EmbedMode { OrderedText, AvgExemplar };

inline std::string to_string(EmbedMode m) {
  return m == EmbedMode::OrderedText ? "ordered-text" : "avg-exemplar";
}

inline EmbedMode embed_mode_from_string(const std::string& s) {
  if (s == "ordered-text") return EmbedMode::OrderedText;
  if (s == "avg-exemplar") return EmbedMode::AvgExemplar;
  throw Error("unknown embed mode '" + s + "'");
}

// ---- providers ---------------------------------------------------------------

// Offline stand-in for a sentence-embedding API: hashed character trigram
// counts projected through a seeded random sign matrix, L2-normalized. Each
// occurrence is weighted by a slowly varying function of its position, so the
// embedding is order-sensitive (a pure trigram bag would treat two block
// orderings of the same exemplars as equal) while nearby texts stay close.
class LocalDeterministicEmbedder {
 public:
  LocalDeterministicEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim <= 0) throw Error("local embedder: dim must be positive");
  }

  Embedding embed(const std::string& text) const {
    Embedding v(static_cast<size_t>(dim_), 0.0);
    auto project = [&](std::uint64_t gram_hash, size_t position) {
      double w = 1.0 + 0.5 * std::sin(0.75 * static_cast<double>(position));
      for (int i = 0; i < dim_; ++i) {
        std::uint64_t bit = mix64(gram_hash ^ (0x9e3779b97f4a7c15ULL * (i + 1))) & 1u;
        v[static_cast<size_t>(i)] += bit ? w : -w;
      }
    };
    if (text.size() < 3) {
      project(mix64(seed_ ^ fnv1a64(text)), 0);
    } else {
      for (size_t p = 0; p + 3 <= text.size(); ++p)
        project(mix64(seed_ ^ fnv1a64(std::string_view(text).substr(p, 3))), p);
    }
    l2_normalize(v);
    return v;
  }

  int dim() const { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
  std::string endpoint_url;  // e.g. http://host:port/v1/embeddings
  std::string model;
  int batch_size = 16;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  int max_inflight = 8;
  std::string api_key_env = "EXSEL_EMBED_API_KEY";
};

// Client for the common embedding-API shape:
//   request  {"input": [texts...], "model": m}
//   response {"data": [{"embedding": [...]}, ...]}
// Batches fan out over at most max_inflight worker threads; results land in
// index order, so the output is deterministic regardless of completion order.
class RemoteEmbedder {
 public:
  explicit RemoteEmbedder(const RemoteEmbedderConfig& cfg) : cfg_(cfg) {}

  Embedding embed(const std::string& text) { return embed_batch({text}).front(); }

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) {
    const auto batch = static_cast<size_t>(std::max(cfg_.batch_size, 1));
    std::vector<std::pair<size_t, size_t>> chunks;
    for (size_t start = 0; start < texts.size(); start += batch)
      chunks.emplace_back(start, std::min(texts.size(), start + batch));

    std::vector<Embedding> out(texts.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<size_t> next_chunk{0};
    auto worker = [&] {
      for (size_t c = next_chunk.fetch_add(1); c < chunks.size(); c = next_chunk.fetch_add(1)) {
        try {
          fetch_chunk(texts, chunks[c].first, chunks[c].second, out);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    size_t threads = std::min(chunks.size(), static_cast<size_t>(std::max(cfg_.max_inflight, 1)));
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
  }

  long requests_made() const { return requests_.load(); }
  long retries_made() const { return retries_.load(); }

 private:
  void fetch_chunk(const std::vector<std::string>& texts, size_t start, size_t end,
                   std::vector<Embedding>& out) {
    nlohmann::json body{
        {"input", std::vector<std::string>(texts.begin() + static_cast<long>(start),
                                           texts.begin() + static_cast<long>(end))},
        {"model", cfg_.model}};
    nlohmann::json reply = post_json_with_retries(
        cfg_.endpoint_url, body, api_key_from_env(cfg_.api_key_env),
        {cfg_.max_retries, cfg_.retry_backoff_ms}, &requests_, &retries_);
    if (!reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].size() != end - start)
      throw Error("embedding response shape mismatch");
    for (size_t k = 0; k < end - start; ++k)
      out[start + k] = reply["data"][k].at("embedding").get<Embedding>();
  }

  RemoteEmbedderConfig cfg_;
  std::atomic<long> requests_{0};
  std::atomic<long> retries_{0};
};

// ---- cache -------------------------------------------------------------------

// Content-addressed embedding cache. Keys are SHA-256 over
// (provider id, model, text); vectors round-trip bit-identically through the
// binary sidecar file. Concurrent readers, exclusive writers.
class EmbeddingCache {
 public:
  std::optional<Embedding> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, Embedding value) {
    std::unique_lock lock(mutex_);
    entries_.emplace(key, std::move(value));
  }

  size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  static std::string make_key(const std::string& provider_id, const std::string& model,
                              const std::string& text) {
    return Sha256::hex(provider_id + "\x1f" + model + "\x1f" + text);
  }

  void save(const std::string& path) const {
    std::shared_lock lock(mutex_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache file '" + path + "'");
    out.write(kMagic, 8);
    std::uint64_t count = entries_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [key, vec] : entries_) {
      auto klen = static_cast<std::uint32_t>(key.size());
      auto dim = static_cast<std::uint32_t>(vec.size());
      out.write(reinterpret_cast<const char*>(&klen), sizeof(klen));
      out.write(key.data(), klen);
      out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
      out.write(reinterpret_cast<const char*>(vec.data()),
                static_cast<std::streamsize>(dim * sizeof(double)));
    }
  }

  void load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;  // missing cache file is just a cold cache
    char magic[8];
    if (!in.read(magic, 8) || std::string_view(magic, 8) != kMagic)
      throw Error("cache file '" + path + "' has an unknown format");
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::unique_lock lock(mutex_);
    for (std::uint64_t e = 0; e < count; ++e) {
      std::uint32_t klen = 0, dim = 0;
      in.read(reinterpret_cast<char*>(&klen), sizeof(klen));
      std::string key(klen, '\0');
      in.read(key.data(), klen);
      in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
      Embedding vec(dim);
      in.read(reinterpret_cast<char*>(vec.data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
      if (!in) throw Error("cache file '" + path + "' is truncated");
      entries_.emplace(std::move(key), std::move(vec));
    }
  }

 private:
  static constexpr const char* kMagic = "EXSELEC1";
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Embedding> entries_;
};

// ---- service -----------------------------------------------------------------

struct EmbeddingProviderSpec {
  std::string kind = "local-deterministic";  // or "remote"
  int dim = 64;                              // local
  std::uint64_t seed = 0x5eed;               // local
  RemoteEmbedderConfig remote;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "local-deterministic") {
      j["dim"] = dim;
      j["seed"] = seed;
    } else {
      j["endpoint_url"] = remote.endpoint_url;
      j["model"] = remote.model;
      j["batch_size"] = remote.batch_size;
      j["max_retries"] = remote.max_retries;
      j["retry_backoff_ms"] = remote.retry_backoff_ms;
    }
    return j;
  }

  static EmbeddingProviderSpec from_json(const nlohmann::json& j) {
    EmbeddingProviderSpec s;
    s.kind = j.value("kind", "local-deterministic");
    s.dim = j.value("dim", 64);
    s.seed = j.value("seed", std::uint64_t{0x5eed});
    s.remote.endpoint_url = j.value("endpoint_url", "");
    s.remote.model = j.value("model", "");
    s.remote.batch_size = j.value("batch_size", 16);
    s.remote.max_retries = j.value("max_retries", 3);
    s.remote.retry_backoff_ms = j.value("retry_backoff_ms", 250);
    return s;
  }
};

// Facade the optimization loop talks to. Guarantees a constant dimension per
// run and routes remote calls through the cache.
class EmbeddingService {
 public:
  explicit EmbeddingService(const EmbeddingProviderSpec& spec) : spec_(spec) {
    if (spec.kind == "local-deterministic") {
      local_ = std::make_unique<LocalDeterministicEmbedder>(spec.dim, spec.seed);
      dim_ = spec.dim;
      provider_id_ =
          "local-deterministic:" + std::to_string(spec.dim) + ":" + std::to_string(spec.seed);
    } else if (spec.kind == "remote") {
      remote_ = std::make_unique<RemoteEmbedder>(spec.remote);
      provider_id_ = "remote:" + spec.remote.endpoint_url;
    } else {
      throw Error("unknown embedding provider kind '" + spec.kind + "'");
    }
  }

  Embedding embed_text(const std::string& text) {
    if (text.empty()) throw Error("embed_text: empty text");
    if (local_) return check_finite(local_->embed(text));
    std::string key = EmbeddingCache::make_key(provider_id_, spec_.remote.model, text);
    if (auto hit = cache_.get(key)) return *hit;
    Embedding v = check_finite(remote_->embed(text));
    l2_normalize(v);
    {
      std::lock_guard lock(dim_mutex_);
      if (dim_ == 0)
        dim_ = static_cast<int>(v.size());
      else if (dim_ != static_cast<int>(v.size()))
        throw Error("embed_text: provider dimension changed mid-run");
    }
    cache_.put(key, v);
    return v;
  }

  int dim() const { return dim_; }
  const std::string& provider_id() const { return provider_id_; }
  EmbeddingCache& cache() { return cache_; }
  long remote_requests() const { return remote_ ? remote_->requests_made() : 0; }

 private:
  static Embedding check_finite(Embedding v) {
    for (double x : v)
      if (!std::isfinite(x)) throw Error("embed_text: non-finite embedding entry");
    return v;
  }

  EmbeddingProviderSpec spec_;
  std::string provider_id_;
  int dim_ = 0;  // fixed after the first embedding for remote providers
  std::unique_ptr<LocalDeterministicEmbedder> local_;
  std::unique_ptr<RemoteEmbedder> remote_;
  EmbeddingCache cache_;
  std::mutex dim_mutex_;
};

// Per-exemplar embedding table over pool and validation items: the OT ground
// space. Computed once per run and reused.
struct EmbeddingTable {
  std::unordered_map<std::string, Embedding> vectors;
  int dim = 0;

  const Embedding& at(const std::string& id) const {
    auto it = vectors.find(id);
    if (it == vectors.end()) throw Error("unresolved exemplar id '" + id + "' in embedding table");
    return it->second;
  }
};

inline EmbeddingTable precompute_pool_embeddings(EmbeddingService& service,
                                                 const ExemplarPool& pool,
                                                 const ValidationSet& validation) {
  EmbeddingTable table;
  for (const auto& e : pool.items())
    table.vectors.emplace(e.id, service.embed_text(render_exemplar_block(e)));
  for (const auto& e : validation.items)
    table.vectors.emplace(e.id, service.embed_text(render_exemplar_block(e)));
  table.dim = service.dim();
  return table;
}

// Sequence embedding h(E). Ordered-text embeds the rendered prompt prefix, so
// ordering (and any instruction) changes the vector; avg-exemplar is the mean
// of the members' per-exemplar vectors and ignores order.
inline Embedding embed_sequence(EmbeddingService& service, const ExemplarSequence& seq,
                                const ExemplarPool& pool, const InstructionSet* instructions,
                                EmbedMode mode, const EmbeddingTable* table = nullptr) {
  if (mode == EmbedMode::OrderedText)
    return service.embed_text(render_sequence_text(seq, pool, instructions));
  // Accumulate in sorted-id order so every ordering of a subset yields a
  // bit-identical mean.
  std::vector<std::string> ids(seq.exemplar_ids());
  std::sort(ids.begin(), ids.end());
  Embedding sum;
  for (const auto& id : ids) {
    Embedding v = table ? table->at(id) : service.embed_text(render_exemplar_block(pool.by_id(id)));
    if (sum.empty())
      sum = std::move(v);
    else {
      if (v.size() != sum.size()) throw Error("embed_sequence: dimension mismatch");
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    }
  }
  double inv = 1.0 / static_cast<double>(seq.length());
  for (double& x : sum) x *= inv;
  return sum;
}

}  // namespace exsel
