#pragma once
// Exact Sum g(f_i) via distributed sorting plus head/tail frequency recovery,
// and top-k frequent elements.

#include <string>
#include <vector>

#include "dsum/oracles.hpp"
#include "dsum/primitives.hpp"
#include "dsum/values.hpp"

namespace dsum {

// Batcher odd-even mergesort over width 2^ceil(log2 n). Layers are disjoint
// comparator sets; depth is k(k+1)/2 for width 2^k.
struct SortingNetwork {
  int width = 1;
  std::vector<std::vector<std::pair<int, int>>> layers;  // 1-based positions

  int depth() const { return static_cast<int>(layers.size()); }

  template <class T, class Less>
  void apply(std::vector<T>& xs, Less less) const {
    for (const auto& layer : layers)
      for (auto [a, b] : layer)
        if (less(xs[size_t(b - 1)], xs[size_t(a - 1)]))
          std::swap(xs[size_t(a - 1)], xs[size_t(b - 1)]);
  }
};

SortingNetwork build_sorting_network(int n);

// Pluggable per-count term of the target sum.
struct GFunction {
  enum class Kind { Distinct, Power, EntropyTerm, Identity };
  Kind kind = Kind::Distinct;
  int p = 2;

  bool needs_f1() const { return kind == Kind::EntropyTerm; }
  bool is_exact() const { return kind != Kind::EntropyTerm; }
  // Payload value: exact integer, or fixed-point (kEntropyShift) for entropy.
  int64_t eval_fixed(int64_t f, int64_t f1) const;
  double eval_real(int64_t f, int64_t f1) const;
  // Largest possible aggregate total, for payload range declaration.
  int64_t max_total(int n) const;

  std::string name() const;
  static GFunction from_name(const std::string& kind, int p = 2);
};

constexpr int kEntropyShift = 44;

// Oracle-side Sum g(f_i): (exact 128-bit value, real value).
std::pair<i128, double> g_sum_oracle(const FrequencyVector& fv,
                                     const GFunction& g);

struct SortResult {
  // keys_by_position[i], i in 1..width: 0 = NULL block, N+1 = padding
  std::vector<int64_t> keys;
  RoundStats stats;
};

// Network sort of the nodes' values over the router; node with DFS id i ends
// holding the i-th smallest (NULL first, virtual +inf padding last).
SortResult distributed_sort(const Graph& g, Router& router,
                            const LeaderContext& ctx, const ValueAssignment& a,
                            const BitBudget& budget);

struct GsumResult {
  int64_t total_fixed = 0;  // exact integer, or fixed-point for entropy
  double value = 0.0;
  RoundStats stats;
};

GsumResult exact_g_sum(const Graph& g, Router& router, const LeaderContext& ctx,
                       const ValueAssignment& a, const GFunction& gfun,
                       const BitBudget& budget);

struct TopKResult {
  std::vector<std::pair<int64_t, int64_t>> items;  // (value, count)
  RoundStats stats;
};

TopKResult top_k(const Graph& g, Router& router, const LeaderContext& ctx,
                 const ValueAssignment& a, int k, const BitBudget& budget);

}  // namespace dsum
