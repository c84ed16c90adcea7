#include "dsum/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>

namespace dsum {

// ---- primes / hash families ----------------------------------------------

namespace {

uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m) {
  u128 r = 1, b = a % m;
  while (e) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return uint64_t(r);
}

}  // namespace

bool is_prime_u64(uint64_t x) {
  if (x < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                     23ull, 29ull, 31ull, 37ull}) {
    if (x % p == 0) return x == p;
  }
  uint64_t d = x - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                     23ull, 29ull, 31ull, 37ull}) {
    uint64_t y = powmod_u64(a, d, x);
    if (y == 1 || y == x - 1) continue;
    bool witness = true;
    for (int i = 1; i < r; ++i) {
      y = uint64_t(u128(y) * y % x);
      if (y == x - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

int64_t next_prime_geq(int64_t x) {
  if (x <= 2) return 2;
  if (x % 2 == 0) ++x;
  while (!is_prime_u64(uint64_t(x))) x += 2;
  return x;
}

int64_t HashFn::operator()(int64_t x) const {
  u128 acc = 0;
  uint64_t ux = uint64_t(x % mod);
  for (int i = degree; i >= 0; --i)
    acc = (acc * ux + uint64_t(coef[size_t(i)])) % uint64_t(mod);
  return int64_t(acc);
}

int64_t HashFn::modulus_for(int64_t domain_bound) {
  if (domain_bound < 1 || domain_bound > (int64_t(1) << 20))
    throw ConfigError("hash domain bound out of supported range");
  static thread_local int64_t last_bound = 0, last_mod = 0;
  if (domain_bound == last_bound) return last_mod;
  int64_t cube = domain_bound * domain_bound * domain_bound;
  last_bound = domain_bound;
  last_mod = next_prime_geq(std::max<int64_t>(cube, 17));
  return last_mod;
}

HashFn HashFn::pairwise(int64_t domain_bound, Rng& rng) {
  HashFn h;
  h.mod = modulus_for(domain_bound);
  h.degree = 1;
  h.coef[1] = 1 + rng.below(h.mod - 1);
  h.coef[0] = rng.below(h.mod);
  return h;
}

HashFn HashFn::fourwise(int64_t domain_bound, Rng& rng) {
  HashFn h;
  h.mod = modulus_for(domain_bound);
  h.degree = 3;
  for (int i = 0; i <= 3; ++i) h.coef[size_t(i)] = rng.below(h.mod);
  return h;
}

// ---- leader election ------------------------------------------------------

namespace {

// Min-ID flooding; also fixes BFS parents (smallest-id neighbor one level up).
struct MinFloodProgram {
  const Graph& g;
  const BitBudget& budget;
  std::vector<int64_t> best_id;
  std::vector<int> best_dist, parent;

  MinFloodProgram(const Graph& gr, const BitBudget& b) : g(gr), budget(b) {
    best_id.assign(size_t(g.n) + 1, 0);
    best_dist.assign(size_t(g.n) + 1, 0);
    parent.assign(size_t(g.n) + 1, 0);
    for (int v = 1; v <= g.n; ++v) best_id[v] = v;
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    bool changed = (r == 1);
    for (const auto& d : inbox) {
      int64_t mid = d.msg.f[0];
      int dist = int(d.msg.f[1]) + 1;
      if (mid < best_id[v] || (mid == best_id[v] && dist < best_dist[v])) {
        best_id[v] = mid;
        best_dist[v] = dist;
        parent[v] = d.from;
        changed = true;
      }
    }
    if (changed) {
      Message m;
      m.add_word(best_id[v], budget).add_word(best_dist[v], budget);
      for (int w : g.adj[v]) send(w, m);
    }
    return true;
  }
};

// Children discovery (round-1 claims) + bottom-up subtree sizes.
struct SubtreeSizeProgram {
  const Graph& g;
  const BitBudget& budget;
  const std::vector<int>& parent;
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int64_t>> child_size;
  std::vector<int> got_sizes;
  std::vector<int64_t> acc;
  std::vector<char> sent_up;

  SubtreeSizeProgram(const Graph& gr, const BitBudget& b,
                     const std::vector<int>& par)
      : g(gr), budget(b), parent(par) {
    children.assign(size_t(g.n) + 1, {});
    child_size.assign(size_t(g.n) + 1, {});
    got_sizes.assign(size_t(g.n) + 1, 0);
    acc.assign(size_t(g.n) + 1, 0);
    sent_up.assign(size_t(g.n) + 1, 0);
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    if (r == 1) {
      if (parent[v] != 0) {
        Message m;
        m.add(0, 2);
        send(parent[v], m);
      }
      return false;  // everyone observes round 2 to learn its children
    }
    for (const auto& d : inbox) {
      if (d.msg.f[0] == 0) {
        children[v].push_back(d.from);
        child_size[v].push_back(0);
      } else {
        auto it = std::find(children[v].begin(), children[v].end(), d.from);
        child_size[v][size_t(it - children[v].begin())] = d.msg.f[1];
        acc[v] += d.msg.f[1];
        got_sizes[v] += 1;
      }
    }
    if (!sent_up[v] && got_sizes[v] == int(children[v].size())) {
      sent_up[v] = 1;
      if (parent[v] != 0) {
        Message m;
        m.add(1, 2).add_word(1 + acc[v], budget);
        send(parent[v], m);
      }
    }
    return true;
  }

  int64_t subtree_of(int v) const { return 1 + acc[v]; }
};

// DFS preorder range downcast: root takes id 1, children get consecutive
// ranges in ascending node-id order.
struct DfsRangeProgram {
  const BitBudget& budget;
  int root;
  const std::vector<std::vector<int>>& children;
  const std::vector<std::vector<int64_t>>& child_size;
  std::vector<int> dfs;

  DfsRangeProgram(int n, const BitBudget& b, int rt,
                  const std::vector<std::vector<int>>& ch,
                  const std::vector<std::vector<int64_t>>& cs)
      : budget(b), root(rt), children(ch), child_size(cs) {
    dfs.assign(size_t(n) + 1, 0);
  }

  void assign_and_forward(int v, int start, const Sender& send) {
    dfs[v] = start;
    int64_t next = start + 1;
    for (size_t i = 0; i < children[v].size(); ++i) {
      Message m;
      m.add_word(next, budget);
      send(children[v][i], m);
      next += child_size[v][i];
    }
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    if (r == 1 && v == root) assign_and_forward(v, 1, send);
    for (const auto& d : inbox) assign_and_forward(v, int(d.msg.f[0]), send);
    return true;
  }
};

}  // namespace

LeaderContext elect_leader_and_ids(const Graph& g, const BitBudget& budget) {
  LeaderContext ctx;
  MinFloodProgram flood(g, budget);
  ctx.stats = run_congest(g, flood, /*seed=*/1, 4 * int64_t(g.n) + 16, budget);
  int leader = int(flood.best_id[1]);
  for (int v = 1; v <= g.n; ++v)
    if (flood.best_id[v] != leader)
      throw SimError("min-ID flooding did not converge");

  SubtreeSizeProgram sizes(g, budget, flood.parent);
  ctx.stats.absorb(
      run_congest(g, sizes, /*seed=*/2, 4 * int64_t(g.n) + 16, budget));

  DfsRangeProgram ranges(g.n, budget, leader, sizes.children,
                         sizes.child_size);
  ctx.stats.absorb(
      run_congest(g, ranges, /*seed=*/3, 4 * int64_t(g.n) + 16, budget));

  ctx.leader = leader;
  Tree& t = ctx.tree;
  t.root = leader;
  t.parent = flood.parent;
  t.level = flood.best_dist;
  t.children = sizes.children;
  t.subtree.assign(size_t(g.n) + 1, 0);
  t.depth = 0;
  for (int v = 1; v <= g.n; ++v) {
    std::sort(t.children[v].begin(), t.children[v].end());
    t.subtree[v] = int(sizes.subtree_of(v));
    t.depth = std::max(t.depth, t.level[v]);
  }
  // children were sorted after sizing; realign size lookup via tree order
  ctx.dfs = ranges.dfs;
  ctx.node_at.assign(size_t(g.n) + 1, 0);
  for (int v = 1; v <= g.n; ++v) {
    if (ctx.dfs[v] < 1 || ctx.dfs[v] > g.n || ctx.node_at[ctx.dfs[v]] != 0)
      throw SimError("DFS id assignment is not a bijection");
    ctx.node_at[ctx.dfs[v]] = v;
  }
  if (t.subtree[leader] != g.n)
    throw SimError("subtree sizing did not cover the graph");
  return ctx;
}

// ---- aggregation -----------------------------------------------------------

namespace {

struct AggregateProgram {
  const LeaderContext& ctx;
  const BitBudget& budget;
  int64_t max_abs;
  std::vector<int64_t> acc, total;
  std::vector<int> pending;
  std::vector<char> sent_up, got_total;

  AggregateProgram(const LeaderContext& c, const BitBudget& b,
                   const std::vector<int64_t>& local, int64_t ma)
      : ctx(c), budget(b), max_abs(ma) {
    size_t n1 = ctx.tree.parent.size();
    acc.assign(n1, 0);
    total.assign(n1, 0);
    pending.assign(n1, 0);
    sent_up.assign(n1, 0);
    got_total.assign(n1, 0);
    for (size_t v = 1; v < n1; ++v) {
      acc[v] = local[v];
      check(acc[v]);
      pending[v] = int(ctx.tree.children[v].size());
    }
  }

  void check(int64_t x) const {
    if (x > max_abs || x < -max_abs)
      throw SimError("aggregate_sum exceeded its declared range");
  }

  bool on_round(int v, int64_t, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    // direction is implied by the sender: parent = downcast, child = upcast
    for (const auto& d : inbox) {
      if (d.from == ctx.tree.parent[v]) {
        if (!got_total[v]) {
          total[v] = d.msg.f[0];
          got_total[v] = 1;
          push_down(v, send);
        }
      } else {
        acc[v] += d.msg.f[0];
        check(acc[v]);
        pending[v] -= 1;
      }
    }
    if (!sent_up[v] && pending[v] == 0) {
      sent_up[v] = 1;
      if (ctx.tree.parent[v] != 0) {
        Message m;
        m.add(acc[v], 2 * uint64_t(max_abs) + 1);
        send(ctx.tree.parent[v], m);
      } else {
        total[v] = acc[v];
        got_total[v] = 1;
        push_down(v, send);
      }
    }
    return true;
  }

  void push_down(int v, const Sender& send) {
    for (int c : ctx.tree.children[v]) {
      Message m;
      m.add(total[v], 2 * uint64_t(max_abs) + 1);
      send(c, m);
    }
  }
};

struct MultiAggregateProgram {
  const LeaderContext& ctx;
  const BitBudget& budget;
  int64_t max_abs;
  int k;
  std::vector<std::vector<int64_t>> partial;
  std::vector<std::vector<int32_t>> recv_count;
  std::vector<int> next_idx;

  MultiAggregateProgram(const LeaderContext& c, const BitBudget& b,
                        const std::vector<std::vector<int64_t>>& local,
                        int64_t ma, int kk)
      : ctx(c), budget(b), max_abs(ma), k(kk) {
    size_t n1 = ctx.tree.parent.size();
    partial.assign(n1, {});
    recv_count.assign(n1, {});
    next_idx.assign(n1, 0);
    for (size_t v = 1; v < n1; ++v) {
      partial[v] = local[v];
      recv_count[v].assign(size_t(k), 0);
    }
  }

  bool on_round(int v, int64_t, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    int nchild = int(ctx.tree.children[v].size());
    for (const auto& d : inbox) {
      int idx = int(d.msg.f[0]);
      partial[v][size_t(idx)] += d.msg.f[1];
      if (std::abs(partial[v][size_t(idx)]) > max_abs)
        throw SimError("pipelined aggregate exceeded its declared range");
      recv_count[v][size_t(idx)] += 1;
    }
    if (ctx.tree.parent[v] != 0 && next_idx[v] < k &&
        recv_count[v][size_t(next_idx[v])] == nchild) {
      Message m;
      m.add(next_idx[v], uint64_t(k))
          .add(partial[v][size_t(next_idx[v])], 2 * uint64_t(max_abs) + 1);
      send(ctx.tree.parent[v], m);
      next_idx[v] += 1;
    }
    return ctx.tree.parent[v] == 0 || next_idx[v] >= k;
  }
};

struct BroadcastProgram {
  const LeaderContext& ctx;
  std::vector<Message> payload;  // root's messages, in order
  std::vector<std::deque<Message>> queue;
  std::vector<int64_t> received;

  BroadcastProgram(const LeaderContext& c, std::vector<Message> words)
      : ctx(c), payload(std::move(words)) {
    queue.assign(ctx.tree.parent.size(), {});
    received.assign(ctx.tree.parent.size(), 0);
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    if (r == 1 && v == ctx.tree.root) {
      for (const auto& m : payload) queue[v].push_back(m);
      received[v] = int64_t(payload.size());
    }
    for (const auto& d : inbox) {
      queue[v].push_back(d.msg);
      received[v] += 1;
    }
    if (!queue[v].empty()) {
      Message m = queue[v].front();
      queue[v].pop_front();
      for (int c : ctx.tree.children[v]) send(c, m);
      return false;
    }
    return true;
  }
};

}  // namespace

AggregateResult aggregate_sum(const Graph& g, const LeaderContext& ctx,
                              const std::vector<int64_t>& local,
                              int64_t max_abs_total, const BitBudget& budget) {
  AggregateProgram prog(ctx, budget, local, max_abs_total);
  auto stats =
      run_congest(g, prog, /*seed=*/4, 4 * int64_t(g.n) + 16, budget);
  for (int v = 1; v <= g.n; ++v)
    if (!prog.got_total[v]) throw SimError("aggregate_sum did not complete");
  return {prog.total[ctx.tree.root], std::move(stats)};
}

MultiAggregateResult aggregate_sums_root(
    const Graph& g, const LeaderContext& ctx,
    const std::vector<std::vector<int64_t>>& local, int64_t max_abs_total,
    const BitBudget& budget) {
  int k = local.empty() || local.size() < 2 ? 0 : int(local[1].size());
  if (k == 0) return {{}, {}};
  MultiAggregateProgram prog(ctx, budget, local, max_abs_total, k);
  auto stats = run_congest(g, prog, /*seed=*/5,
                           int64_t(k) + 4 * int64_t(g.n) + 16, budget);
  for (int idx = 0; idx < k; ++idx)
    if (prog.recv_count[size_t(ctx.tree.root)][size_t(idx)] !=
        int(ctx.tree.children[ctx.tree.root].size()))
      throw SimError("pipelined aggregate did not complete");
  return {prog.partial[size_t(ctx.tree.root)], std::move(stats)};
}

RoundStats broadcast_messages(const Graph& g, const LeaderContext& ctx,
                              std::vector<Message> msgs,
                              const BitBudget& budget) {
  size_t count = msgs.size();
  BroadcastProgram prog(ctx, std::move(msgs));
  auto stats = run_congest(g, prog, /*seed=*/6,
                           int64_t(count) + 2 * int64_t(g.n) + 16, budget);
  for (int v = 1; v <= g.n; ++v)
    if (prog.received[v] != int64_t(count))
      throw SimError("broadcast did not reach every node");
  return stats;
}

RoundStats broadcast_words(const Graph& g, const LeaderContext& ctx,
                           const std::vector<int64_t>& words,
                           uint64_t value_range, const BitBudget& budget) {
  std::vector<Message> msgs;
  msgs.reserve(words.size());
  for (int64_t w : words) {
    Message m;
    m.add(w, value_range);
    msgs.push_back(m);
  }
  return broadcast_messages(g, ctx, std::move(msgs), budget);
}

// ---- grouped upcast --------------------------------------------------------

namespace {

// Upcast windows: group j flows up during [L(v)+(j-1)t+1, L(v)+jt] where
// L(v) = depth - level(v). The broadcast-back is pipelined against the same
// schedule: the root's i-th smallest of group j is final at round
// depth+(j-1)t+i and re-enters the tree downward one round later, so the
// whole operation fits in 2*depth + k*t + O(1) rounds.
struct UpcastProgram {
  const LeaderContext& ctx;
  int k, t, depth;
  bool dedup, broadcast_back;
  uint64_t value_range;
  const BitBudget& budget;
  // per node, per group: sorted unsent values (capped at t - sent)
  std::vector<std::vector<std::vector<int64_t>>> unsent;
  std::vector<std::vector<int>> sent;
  std::vector<std::vector<int64_t>> last_sent;
  std::vector<std::deque<std::pair<int, int64_t>>> down_queue;
  std::vector<int64_t> down_received;

  UpcastProgram(const LeaderContext& c, int kk, int tt, UpcastOpts opts,
                uint64_t vr, const BitBudget& b,
                const std::vector<std::vector<std::pair<int, int64_t>>>& items)
      : ctx(c), k(kk), t(tt), depth(c.tree.depth), dedup(opts.dedup),
        broadcast_back(opts.broadcast_back), value_range(vr), budget(b) {
    size_t n1 = ctx.tree.parent.size();
    unsent.assign(n1, std::vector<std::vector<int64_t>>(size_t(k)));
    sent.assign(n1, std::vector<int>(size_t(k), 0));
    last_sent.assign(n1, std::vector<int64_t>(size_t(k), INT64_MIN));
    down_queue.assign(n1, {});
    down_received.assign(n1, 0);
    for (size_t v = 1; v < n1; ++v)
      for (auto [group, value] : items[v]) insert(int(v), group - 1, value);
  }

  void insert(int v, int j, int64_t value) {
    if (sent[v][size_t(j)] > 0 && dedup && value <= last_sent[v][size_t(j)])
      return;  // already forwarded (or a duplicate of a forwarded value)
    auto& buf = unsent[v][size_t(j)];
    auto it = std::lower_bound(buf.begin(), buf.end(), value);
    if (dedup && it != buf.end() && *it == value) return;
    buf.insert(it, value);
    size_t cap = size_t(t - sent[v][size_t(j)]);
    if (buf.size() > cap) buf.pop_back();
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    for (const auto& d : inbox) {
      if (d.from == ctx.tree.parent[v]) {
        down_received[size_t(v)] += 1;
        if (!ctx.tree.children[v].empty())
          down_queue[size_t(v)].push_back({int(d.msg.f[0]), d.msg.f[1]});
      } else {
        insert(v, int(d.msg.f[0]), d.msg.f[1]);
      }
    }
    int64_t L = depth - ctx.tree.level[v];
    bool is_root = ctx.tree.parent[v] == 0;
    if (!is_root && r > L && r <= L + int64_t(k) * t) {
      int j = int((r - L - 1) / t);
      auto& buf = unsent[v][size_t(j)];
      if (!buf.empty()) {
        int64_t value = buf.front();
        buf.erase(buf.begin());
        Message m;
        m.add(j, uint64_t(k)).add(value, value_range);
        send(ctx.tree.parent[v], m);
        sent[v][size_t(j)] += 1;
        last_sent[v][size_t(j)] = value;
      }
    }
    if (is_root && broadcast_back) {
      int64_t idx = r - depth;  // finalization schedule, 1-based
      if (idx >= 1 && idx <= int64_t(k) * t) {
        int j = int((idx - 1) / t);
        size_t i = size_t((idx - 1) % t);
        if (unsent[size_t(v)][size_t(j)].size() > i)
          down_queue[size_t(v)].push_back({j, unsent[size_t(v)][size_t(j)][i]});
      }
    }
    if (!down_queue[size_t(v)].empty()) {
      auto [j, value] = down_queue[size_t(v)].front();
      down_queue[size_t(v)].pop_front();
      Message m;
      m.add(j, uint64_t(k)).add(value, value_range);
      for (int c : ctx.tree.children[v]) send(c, m);
    }
    int64_t done_at = is_root && broadcast_back
                          ? int64_t(depth) + int64_t(k) * t + 1
                          : L + int64_t(k) * t;
    return r >= done_at && down_queue[size_t(v)].empty();
  }
};

}  // namespace

UpcastResult upcast_k_smallest_grouped(
    const Graph& g, const LeaderContext& ctx, int k, int t,
    const std::vector<std::vector<std::pair<int, int64_t>>>& items,
    uint64_t value_range, const BitBudget& budget, UpcastOpts opts) {
  if (k < 1 || t < 1) throw ConfigError("upcast needs k >= 1, t >= 1");
  for (int v = 1; v <= g.n; ++v)
    for (auto [group, value] : items[size_t(v)])
      if (group < 1 || group > k)
        throw ConfigError("upcast item group out of range");
  UpcastProgram prog(ctx, k, t, opts, value_range, budget, items);
  UpcastResult res;
  if (g.n == 1) {  // nothing to communicate
    res.smallest = prog.unsent[size_t(ctx.tree.root)];
    return res;
  }
  int64_t cap = 2 * int64_t(ctx.tree.depth) + int64_t(k) * t + 16;
  res.stats = run_congest(g, prog, /*seed=*/7, cap, budget);
  res.smallest = prog.unsent[size_t(ctx.tree.root)];
  if (opts.broadcast_back) {
    int64_t words = 0;
    for (const auto& grp : res.smallest) words += int64_t(grp.size());
    for (int v = 1; v <= g.n; ++v)
      if (v != ctx.tree.root && prog.down_received[size_t(v)] != words)
        throw SimError("upcast broadcast-back did not reach every node");
  }
  return res;
}

// ---- routers ----------------------------------------------------------------

namespace {

struct TreeRouteProgram {
  const Graph& g;
  const LeaderContext& ctx;
  const BitBudget& budget;
  // queue[v][d]: d = 0 is the parent direction, then children in tree order
  std::vector<std::vector<std::deque<RoutedMessage>>> queue;
  std::vector<std::vector<RoutedMessage>> delivered;
  int64_t max_queue = 0;

  TreeRouteProgram(const Graph& gr, const LeaderContext& c, const BitBudget& b)
      : g(gr), ctx(c), budget(b) {
    queue.assign(size_t(g.n) + 1, {});
    for (int v = 1; v <= g.n; ++v)
      queue[size_t(v)].assign(1 + ctx.tree.children[v].size(), {});
    delivered.assign(size_t(g.n) + 1, {});
  }

  void enqueue(int v, const RoutedMessage& rm) {
    if (rm.dst == ctx.dfs[v]) {
      delivered[size_t(rm.dst)].push_back(rm);
      return;
    }
    int dir = 0;
    int lo = ctx.dfs[v];
    if (rm.dst > lo && rm.dst < lo + ctx.tree.subtree[v]) {
      const auto& ch = ctx.tree.children[v];
      for (size_t i = 0; i < ch.size(); ++i) {
        int cs = ctx.dfs[ch[i]];
        if (rm.dst >= cs && rm.dst < cs + ctx.tree.subtree[ch[i]]) {
          dir = int(i) + 1;
          break;
        }
      }
      if (dir == 0) throw SimError("tree router lost a destination");
    }
    auto& q = queue[size_t(v)][size_t(dir)];
    q.push_back(rm);
    max_queue = std::max<int64_t>(max_queue, int64_t(q.size()));
  }

  bool on_round(int v, int64_t, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    for (const auto& d : inbox) {
      RoutedMessage rm;
      rm.dst = int(d.msg.f[0]);
      rm.nf = d.msg.nf - 2;
      rm.src = int(d.msg.f[1]);
      for (int i = 0; i < rm.nf; ++i) rm.f[size_t(i)] = d.msg.f[i + 2];
      enqueue(v, rm);
    }
    bool idle = true;
    for (size_t dir = 0; dir < queue[size_t(v)].size(); ++dir) {
      auto& q = queue[size_t(v)][dir];
      if (q.empty()) continue;
      idle = false;
      RoutedMessage rm = q.front();
      q.pop_front();
      Message m;
      m.add_word(rm.dst, budget).add_word(rm.src, budget);
      for (int i = 0; i < rm.nf; ++i) {
        m.f[m.nf++] = rm.f[size_t(i)];
      }
      m.bits = int16_t(m.bits + rm.payload_bits);
      int to = dir == 0 ? ctx.tree.parent[v] : ctx.tree.children[v][dir - 1];
      send(to, m);
    }
    return idle;
  }
};

}  // namespace

RouteResult TreeRouter::route(std::vector<RoutedMessage> batch) {
  RouteResult res;
  res.delivered.assign(size_t(g_.n) + 1, {});
  // load precondition: sources/destinations per node vs polylog(n) * deg
  std::vector<int64_t> load(size_t(g_.n) + 1, 0);
  for (const auto& rm : batch) {
    if (rm.dst < 1 || rm.dst > g_.n || rm.src < 1 || rm.src > g_.n)
      throw ConfigError("router endpoint out of range");
    load[size_t(ctx_.node_at[rm.src])] += 1;
    load[size_t(ctx_.node_at[rm.dst])] += 1;
  }
  int64_t logn = ceil_log2(uint64_t(g_.n)) + 2;
  for (int v = 1; v <= g_.n && !warned_; ++v) {
    if (load[size_t(v)] > logn * logn * int64_t(g_.deg(v))) {
      std::fprintf(stderr,
                   "tree router: node %d carries %lld endpoints, above the "
                   "polylog*deg guideline\n",
                   v, static_cast<long long>(load[size_t(v)]));
      warned_ = true;
    }
  }
  TreeRouteProgram prog(g_, ctx_, budget_);
  bool any_remote = false;
  for (const auto& rm : batch) {
    if (rm.src == rm.dst) {
      prog.delivered[size_t(rm.dst)].push_back(rm);
    } else {
      prog.enqueue(ctx_.node_at[rm.src], rm);
      any_remote = true;
    }
  }
  if (any_remote) {
    int64_t cap = 4 * int64_t(ctx_.tree.depth) + int64_t(batch.size()) +
                  2 * int64_t(g_.n) + 64;
    res.stats = run_congest(g_, prog, /*seed=*/9, cap, budget_,
                            CongestOpts{.track_per_round = false});
    for (int v = 1; v <= g_.n; ++v)
      for (size_t dir = 0; dir < prog.queue[size_t(v)].size(); ++dir)
        if (!prog.queue[size_t(v)][dir].empty())
          throw SimError("tree router did not drain its queues");
  }
  res.stats.max_edge_congestion =
      std::max(res.stats.max_edge_congestion, prog.max_queue);
  res.delivered = std::move(prog.delivered);
  return res;
}

int64_t CostModelRouter::rounds_per_batch() const {
  int logn = ceil_log2(uint64_t(n_));
  int root = int(std::ceil(std::sqrt(double(logn))));
  return int64_t(std::ceil(double(tau_) * std::pow(2.0, double(c_ * root))));
}

RouteResult CostModelRouter::route(std::vector<RoutedMessage> batch) {
  RouteResult res;
  res.delivered.assign(size_t(n_) + 1, {});
  bool any_remote = false;
  for (const auto& rm : batch) {
    if (rm.dst < 1 || rm.dst > n_)
      throw ConfigError("router destination out of range");
    if (rm.src != rm.dst) any_remote = true;
    res.delivered[size_t(rm.dst)].push_back(rm);
  }
  res.stats.messages = int64_t(batch.size());
  res.stats.rounds = any_remote ? rounds_per_batch() : 0;
  return res;
}

}  // namespace dsum
