#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "exsel/core.hpp"
#include "exsel/embed.hpp"

namespace exsel {

// Finitely supported probability measure over embedding space.
struct DiscreteMeasure {
  std::vector<Embedding> atoms;
  std::vector<double> weights;

  void validate() const {
    if (atoms.empty() || atoms.size() != weights.size())
      throw Error("discrete measure: atoms/weights mismatch");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw Error("discrete measure: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error("discrete measure: weights must sum to 1");
  }
};

struct TransportPlan {
  size_t rows = 0, cols = 0;
  std::vector<double> flow;  // row-major

  double at(size_t i, size_t j) const { return flow[i * cols + j]; }
};

struct OtResult {
  double value = 0.0;
  TransportPlan plan;
};

// 1 - cosine similarity, in [0, 2].
inline double cosine_cost(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw Error("cosine_cost: dimension mismatch");
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine_cost: zero vector");
  double c = 1.0 - dot(a, b) / (na * nb);
  return std::clamp(c, 0.0, 2.0);
}

inline std::vector<double> cost_matrix(const DiscreteMeasure& mu_s, const DiscreteMeasure& mu_v) {
  std::vector<double> cost(mu_s.atoms.size() * mu_v.atoms.size());
  for (size_t i = 0; i < mu_s.atoms.size(); ++i)
    for (size_t j = 0; j < mu_v.atoms.size(); ++j)
      cost[i * mu_v.atoms.size() + j] = cosine_cost(mu_s.atoms[i], mu_v.atoms[j]);
  return cost;
}

namespace detail {

// Exact transportation simplex (northwest-corner start, MODI pivoting).
// Basis cells form a spanning tree of the bipartite supply/demand graph;
// degenerate zero-flow basics are kept so the tree always has m+n-1 edges.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand,
                   const std::vector<double>& cost)
      : m_(supply.size()), n_(demand.size()), cost_(cost) {
    double total_s = std::accumulate(supply.begin(), supply.end(), 0.0);
    double total_d = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (std::abs(total_s - total_d) > 1e-9)
      throw Error("ot_distance: infeasible marginals (sums differ)");
    for (double v : supply)
      if (v < 0.0) throw Error("ot_distance: negative supply");
    for (double v : demand)
      if (v < 0.0) throw Error("ot_distance: negative demand");
    for (double c : cost_)
      if (!std::isfinite(c)) throw Error("ot_distance: non-finite cost");
    northwest_corner(supply, demand);
  }

  OtResult solve() {
    const size_t max_pivots = 1000 * (m_ + n_) + 1000;
    for (size_t pivot = 0; pivot < max_pivots; ++pivot) {
      compute_duals();
      int ei = -1, ej = -1;
      double best = -1e-12;
      for (size_t i = 0; i < m_; ++i)
        for (size_t j = 0; j < n_; ++j) {
          if (in_basis_[i * n_ + j]) continue;
          double r = cost_[i * n_ + j] - u_[i] - v_[j];
          if (r < best) {
            best = r;
            ei = static_cast<int>(i);
            ej = static_cast<int>(j);
          }
        }
      if (ei < 0) return extract();
      pivot_on(ei, ej);
    }
    throw Error("ot_distance: pivot limit exceeded");
  }

 private:
  struct Cell {
    int i, j;
    double flow;
  };

  void northwest_corner(std::vector<double> a, std::vector<double> b) {
    in_basis_.assign(m_ * n_, 0);
    size_t i = 0, j = 0;
    while (true) {
      double f = std::min(a[i], b[j]);
      add_basic(static_cast<int>(i), static_cast<int>(j), f);
      a[i] -= f;
      b[j] -= f;
      if (i == m_ - 1 && j == n_ - 1) break;
      // On ties advance the row unless it is the last one; this keeps the
      // walk adding exactly m+n-1 cells, zero-flow basics included.
      if (a[i] <= 1e-15 && i < m_ - 1)
        ++i;
      else
        ++j;
    }
  }

  void add_basic(int i, int j, double flow) {
    basis_.push_back({i, j, flow});
    in_basis_[static_cast<size_t>(i) * n_ + j] = 1;
  }

  // Solve u_i + v_j = c_ij over the basis tree, rooted at u_0 = 0.
  void compute_duals() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> u_set(m_, 0), v_set(n_, 0);
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int c = 0; c < static_cast<int>(basis_.size()); ++c) {
      row_cells[basis_[c].i].push_back(c);
      col_cells[basis_[c].j].push_back(c);
    }
    std::deque<int> queue;  // node ids: rows [0,m), cols [m, m+n)
    u_set[0] = 1;
    queue.push_back(0);
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      if (node < static_cast<int>(m_)) {
        for (int c : row_cells[node]) {
          int j = basis_[c].j;
          if (!v_set[j]) {
            v_[j] = cost_[static_cast<size_t>(node) * n_ + j] - u_[node];
            v_set[j] = 1;
            queue.push_back(static_cast<int>(m_) + j);
          }
        }
      } else {
        int j = node - static_cast<int>(m_);
        for (int c : col_cells[j]) {
          int i = basis_[c].i;
          if (!u_set[i]) {
            u_[i] = cost_[static_cast<size_t>(i) * n_ + j] - v_[j];
            u_set[i] = 1;
            queue.push_back(i);
          }
        }
      }
    }
  }

  // Entering cell (ei, ej) closes a unique cycle with the basis tree. Walk
  // the tree path from row ei to column ej, alternate signs, move theta.
  void pivot_on(int ei, int ej) {
    std::vector<std::vector<std::pair<int, int>>> adj(m_ + n_);  // (neighbor node, cell idx)
    for (int c = 0; c < static_cast<int>(basis_.size()); ++c) {
      int rn = basis_[c].i;
      int cn = static_cast<int>(m_) + basis_[c].j;
      adj[rn].push_back({cn, c});
      adj[cn].push_back({rn, c});
    }
    std::vector<int> parent_node(m_ + n_, -1), parent_cell(m_ + n_, -1);
    std::vector<char> visited(m_ + n_, 0);
    std::deque<int> queue;
    visited[ei] = 1;
    queue.push_back(ei);
    int target = static_cast<int>(m_) + ej;
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      if (node == target) break;
      for (auto [nb, cell] : adj[node]) {
        if (!visited[nb]) {
          visited[nb] = 1;
          parent_node[nb] = node;
          parent_cell[nb] = cell;
          queue.push_back(nb);
        }
      }
    }
    if (!visited[target]) throw Error("ot_distance: basis lost connectivity");

    std::vector<int> path_cells;
    for (int node = target; node != ei; node = parent_node[node])
      path_cells.push_back(parent_cell[node]);
    std::reverse(path_cells.begin(), path_cells.end());

    // Entering edge takes +theta; path cells alternate starting with -theta.
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (size_t p = 0; p < path_cells.size(); ++p) {
      if (p % 2 == 0) {
        double f = basis_[path_cells[p]].flow;
        if (f < theta) {
          theta = f;
          leaving = path_cells[p];
        }
      }
    }
    if (leaving < 0) throw Error("ot_distance: degenerate cycle");

    for (size_t p = 0; p < path_cells.size(); ++p) {
      if (p % 2 == 0)
        basis_[path_cells[p]].flow -= theta;
      else
        basis_[path_cells[p]].flow += theta;
    }
    in_basis_[static_cast<size_t>(basis_[leaving].i) * n_ + basis_[leaving].j] = 0;
    basis_[leaving] = {ei, ej, theta};
    in_basis_[static_cast<size_t>(ei) * n_ + ej] = 1;
  }

  OtResult extract() const {
    OtResult r;
    r.plan.rows = m_;
    r.plan.cols = n_;
    r.plan.flow.assign(m_ * n_, 0.0);
    double value = 0.0;
    for (const auto& cell : basis_) {
      double f = std::max(cell.flow, 0.0);
      r.plan.flow[static_cast<size_t>(cell.i) * n_ + cell.j] = f;
      value += f * cost_[static_cast<size_t>(cell.i) * n_ + cell.j];
    }
    r.value = value;
    return r;
  }

  size_t m_, n_;
  std::vector<double> cost_;
  std::vector<Cell> basis_;
  std::vector<char> in_basis_;
  std::vector<double> u_, v_;
};

}  // namespace detail

// Exact optimum of the transportation linear program between two discrete
// measures, given the dense cost matrix (row-major, |mu_s| x |mu_v|).
inline OtResult ot_distance(const DiscreteMeasure& mu_s, const DiscreteMeasure& mu_v,
                            const std::vector<double>& cost) {
  mu_s.validate();
  mu_v.validate();
  if (cost.size() != mu_s.atoms.size() * mu_v.atoms.size())
    throw Error("ot_distance: cost matrix dimension mismatch");
  detail::TransportSimplex solver(mu_s.weights, mu_v.weights, cost);
  return solver.solve();
}

inline OtResult ot_distance(const DiscreteMeasure& mu_s, const DiscreteMeasure& mu_v) {
  return ot_distance(mu_s, mu_v, cost_matrix(mu_s, mu_v));
}

struct SinkhornParams {
  double epsilon = 0.01;  // entropic regularization
  int max_iters = 2000;
  double tolerance = 1e-9;  // marginal violation at which to stop
};

// Entropic approximation of the transportation optimum; optional alternative
// to the exact solver for large instances. Log-domain potentials keep small
// epsilon stable. Returns the transport cost of the regularized plan (without
// the entropy term).
inline OtResult ot_distance_sinkhorn(const DiscreteMeasure& mu_s, const DiscreteMeasure& mu_v,
                                     const std::vector<double>& cost,
                                     const SinkhornParams& params = {}) {
  mu_s.validate();
  mu_v.validate();
  const size_t m = mu_s.weights.size(), n = mu_v.weights.size();
  if (cost.size() != m * n) throw Error("ot_distance_sinkhorn: cost matrix dimension mismatch");
  const double eps = params.epsilon;
  std::vector<double> f(m, 0.0), g(n, 0.0), log_a(m), log_b(n), scratch(std::max(m, n));
  for (size_t i = 0; i < m; ++i) log_a[i] = std::log(mu_s.weights[i]);
  for (size_t j = 0; j < n; ++j) log_b[j] = std::log(mu_v.weights[j]);

  auto logsumexp = [&](size_t count) {
    double hi = scratch[0];
    for (size_t k = 1; k < count; ++k) hi = std::max(hi, scratch[k]);
    double s = 0.0;
    for (size_t k = 0; k < count; ++k) s += std::exp(scratch[k] - hi);
    return hi + std::log(s);
  };

  for (int iter = 0; iter < params.max_iters; ++iter) {
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < n; ++j) scratch[j] = (g[j] - cost[i * n + j]) / eps;
      f[i] = eps * (log_a[i] - logsumexp(n));
    }
    for (size_t j = 0; j < n; ++j) {
      for (size_t i = 0; i < m; ++i) scratch[i] = (f[i] - cost[i * n + j]) / eps;
      g[j] = eps * (log_b[j] - logsumexp(m));
    }
    // column marginals are exact after the g update; rows carry the violation
    double worst = 0.0;
    for (size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (size_t j = 0; j < n; ++j) row += std::exp((f[i] + g[j] - cost[i * n + j]) / eps);
      worst = std::max(worst, std::abs(row - mu_s.weights[i]));
    }
    if (worst < params.tolerance) break;
  }

  OtResult r;
  r.plan.rows = m;
  r.plan.cols = n;
  r.plan.flow.resize(m * n);
  double value = 0.0;
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      double flow = std::exp((f[i] + g[j] - cost[i * n + j]) / eps);
      r.plan.flow[i * n + j] = flow;
      value += flow * cost[i * n + j];
    }
  r.value = value;
  return r;
}

// Uniform measure over a sequence's member exemplars. Atoms are ordered by
// sorted id so every ordering of a subset yields the identical measure (and
// bit-identical OT distances downstream).
inline DiscreteMeasure subset_measure(const ExemplarSequence& seq, const EmbeddingTable& table) {
  std::vector<std::string> ids(seq.exemplar_ids());
  std::sort(ids.begin(), ids.end());
  DiscreteMeasure mu;
  mu.atoms.reserve(ids.size());
  for (const auto& id : ids) mu.atoms.push_back(table.at(id));
  mu.weights.assign(ids.size(), 1.0 / static_cast<double>(ids.size()));
  return mu;
}

inline DiscreteMeasure validation_measure(const ValidationSet& validation,
                                          const EmbeddingTable& table) {
  DiscreteMeasure mu;
  mu.atoms.reserve(validation.size());
  for (const auto& item : validation.items) mu.atoms.push_back(table.at(item.id));
  mu.weights.assign(validation.size(), 1.0 / static_cast<double>(validation.size()));
  return mu;
}

// Memoized per-subset distances; order-duplicates share one solve.
class OtDistanceMemo {
 public:
  template <typename Fn>
  double get_or_compute(const std::string& subset_key, Fn&& compute) {
    {
      std::lock_guard lock(mutex_);
      auto it = memo_.find(subset_key);
      if (it != memo_.end()) return it->second;
    }
    double value = compute();
    std::lock_guard lock(mutex_);
    return memo_.emplace(subset_key, value).first->second;
  }

  size_t size() const {
    std::lock_guard lock(mutex_);
    return memo_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> memo_;
};

inline double subset_ot_distance(const ExemplarSequence& seq, const EmbeddingTable& table,
                                 const DiscreteMeasure& mu_v, OtDistanceMemo* memo = nullptr,
                                 const SinkhornParams* sinkhorn = nullptr) {
  auto compute = [&] {
    DiscreteMeasure mu_s = subset_measure(seq, table);
    if (sinkhorn) return ot_distance_sinkhorn(mu_s, mu_v, cost_matrix(mu_s, mu_v), *sinkhorn).value;
    return ot_distance(mu_s, mu_v).value;
  };
  if (!memo) return compute();
  return memo->get_or_compute(seq.subset_key(), compute);
}

// The q' candidates with smallest OT distance to mu_v; ties and equal
// distances keep candidate input order.
inline std::vector<ExemplarSequence> filter_top(const std::vector<ExemplarSequence>& candidates,
                                                size_t q_prime, const EmbeddingTable& table,
                                                const DiscreteMeasure& mu_v,
                                                OtDistanceMemo* memo = nullptr,
                                                const SinkhornParams* sinkhorn = nullptr) {
  if (candidates.empty()) throw Error("filter_top: empty candidate list");
  if (q_prime < 1) throw Error("filter_top: q_prime must be >= 1");
  if (q_prime >= candidates.size()) return candidates;

  OtDistanceMemo local;
  OtDistanceMemo* m = memo ? memo : &local;
  std::vector<std::pair<double, size_t>> ranked(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i)
    ranked[i] = {subset_ot_distance(candidates[i], table, mu_v, m, sinkhorn), i};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  ranked.resize(q_prime);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<ExemplarSequence> out;
  out.reserve(q_prime);
  for (const auto& [dist, idx] : ranked) out.push_back(candidates[idx]);
  return out;
}

}  // namespace exsel
