#pragma once
// Distributed building blocks over the CONGEST engine: leader election with
// DFS ID assignment, tree aggregation and broadcast, the pipelined grouped
// upcast, bounded-description hash families, and message routers.

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "dsum/engines.hpp"
#include "dsum/graph.hpp"

namespace dsum {

// ---- hash families ----------------------------------------------------

bool is_prime_u64(uint64_t x);
int64_t next_prime_geq(int64_t x);

// Degree-1 (pairwise) or degree-3 (4-wise) polynomial over Z_M. The
// description is O(1) payload words; M is derived from the domain bound as
// the smallest prime >= N^3 so both sides of a broadcast can recompute it.
struct HashFn {
  int64_t mod = 2;
  std::array<int64_t, 4> coef = {0, 0, 0, 0};
  int degree = 1;

  int64_t operator()(int64_t x) const;
  int sign(int64_t x) const { return ((*this)(x)&1) != 0 ? 1 : -1; }

  static int64_t modulus_for(int64_t domain_bound);
  static HashFn pairwise(int64_t domain_bound, Rng& rng);
  static HashFn fourwise(int64_t domain_bound, Rng& rng);
};

// ---- leader election + IDs --------------------------------------------

struct LeaderContext {
  int leader = 0;
  Tree tree;
  std::vector<int> dfs;      // dfs[v] in 1..n (preorder)
  std::vector<int> node_at;  // node_at[dfs_id] = v
  RoundStats stats;
};

// Min-ID flooding, subtree sizing, DFS range downcast; three engine runs,
// rounds summed (<= 3D + O(1)).
LeaderContext elect_leader_and_ids(const Graph& g, const BitBudget& budget);

// ---- tree aggregation / broadcast ---------------------------------------

struct AggregateResult {
  int64_t total = 0;
  RoundStats stats;
};

// Exact sum of one integer per node, result known at every node.
// |total| and every partial must stay within max_abs_total.
AggregateResult aggregate_sum(const Graph& g, const LeaderContext& ctx,
                              const std::vector<int64_t>& local,
                              int64_t max_abs_total, const BitBudget& budget);

// k independent sums pipelined on the tree, totals known at the root.
// Rounds <= depth + k + O(1).
struct MultiAggregateResult {
  std::vector<int64_t> totals;
  RoundStats stats;
};
MultiAggregateResult aggregate_sums_root(const Graph& g,
                                         const LeaderContext& ctx,
                                         const std::vector<std::vector<int64_t>>& local,
                                         int64_t max_abs_total,
                                         const BitBudget& budget);

// Pipelined downcast of root-held words; every node ends with all words.
RoundStats broadcast_words(const Graph& g, const LeaderContext& ctx,
                           const std::vector<int64_t>& words,
                           uint64_t value_range, const BitBudget& budget);

// Same pipeline for pre-built messages (each within the payload budget).
RoundStats broadcast_messages(const Graph& g, const LeaderContext& ctx,
                              std::vector<Message> msgs,
                              const BitBudget& budget);

// ---- grouped upcast ------------------------------------------------------

struct UpcastOpts {
  bool dedup = false;           // rank distinct values only
  bool broadcast_back = true;   // downcast results to every node
};

struct UpcastResult {
  std::vector<std::vector<int64_t>> smallest;  // per group, ascending
  RoundStats stats;
};

// The t smallest values of each of k groups, gathered at the root with
// per-group send windows of width t (depth + k*t upcast rounds), then
// optionally broadcast back.
UpcastResult upcast_k_smallest_grouped(
    const Graph& g, const LeaderContext& ctx, int k, int t,
    const std::vector<std::vector<std::pair<int, int64_t>>>& items,
    uint64_t value_range, const BitBudget& budget, UpcastOpts opts = {});

// ---- routers -------------------------------------------------------------

struct RoutedMessage {
  int src = 0;  // DFS ids
  int dst = 0;
  std::array<int64_t, 4> f = {0, 0, 0, 0};
  int nf = 0;
  int payload_bits = 0;

  RoutedMessage() = default;
  RoutedMessage(int s, int d) : src(s), dst(d) {}
  RoutedMessage& add(int64_t v, uint64_t range) {
    f[size_t(nf++)] = v;
    payload_bits += ceil_log2(range);
    return *this;
  }
};

struct RouteResult {
  std::vector<std::vector<RoutedMessage>> delivered;  // by destination DFS id
  RoundStats stats;
};

class Router {
 public:
  virtual ~Router() = default;
  virtual RouteResult route(std::vector<RoutedMessage> batch) = 0;
  virtual const char* name() const = 0;
};

// Routes along the election BFS tree with FIFO per-direction queues; rounds
// are measured, congestion recorded.
class TreeRouter final : public Router {
 public:
  TreeRouter(const Graph& g, const LeaderContext& ctx, const BitBudget& budget)
      : g_(g), ctx_(ctx), budget_(budget) {}
  RouteResult route(std::vector<RoutedMessage> batch) override;
  const char* name() const override { return "tree"; }

 private:
  const Graph& g_;
  const LeaderContext& ctx_;
  BitBudget budget_;
  bool warned_ = false;
};

// Delivers instantly and charges ceil(tau * 2^(c * ceil(sqrt(log2 n)))) rounds
// per non-local batch (log2 n taken as ceil(log2 n)).
class CostModelRouter final : public Router {
 public:
  CostModelRouter(int n, int64_t tau, int c) : n_(n), tau_(tau), c_(c) {}
  RouteResult route(std::vector<RoutedMessage> batch) override;
  const char* name() const override { return "cost-model"; }
  int64_t rounds_per_batch() const;

 private:
  int n_;
  int64_t tau_;
  int c_;
};

}  // namespace dsum
