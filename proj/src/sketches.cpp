#include "dsum/sketches.hpp"

#include <algorithm>
#include <cmath>

namespace dsum {

Estimate make_estimate(double value, double truth, RoundStats stats) {
  Estimate e;
  e.value = value;
  e.truth = truth;
  e.rel_error = truth != 0.0 ? std::fabs(value - truth) / std::fabs(truth)
                             : (value == 0.0 ? 0.0 : HUGE_VAL);
  e.stats = std::move(stats);
  return e;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  size_t mid = xs.size() / 2;
  if (xs.size() % 2 == 1) return xs[mid];
  return 0.5 * (xs[mid - 1] + xs[mid]);
}

int odd_median_width(int n, const Constants& c, int override_width) {
  int s = override_width > 0 ? override_width
                             : c.c_med * std::max(1, ceil_log2(uint64_t(n)));
  if (s % 2 == 0) s += 1;
  return s;
}

KmvParams KmvParams::make(double eps, int64_t N, int n, const Constants& c,
                          int median_width_override) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must be in (0, 1]");
  KmvParams p;
  p.t = int(std::ceil(100.0 / (eps * eps)));
  p.M = HashFn::modulus_for(N);
  p.s = odd_median_width(n, c, median_width_override);
  return p;
}

Estimate f0_estimate(const Graph& g, const ValueAssignment& a, double eps,
                     uint64_t seed, const Constants& c,
                     int median_width_override) {
  a.validate();
  auto params = KmvParams::make(eps, a.N, g.n, c, median_width_override);
  BitBudget budget = BitBudget::make(g.n, a.N, c.c0);
  auto ctx = elect_leader_and_ids(g, budget);
  RoundStats stats = std::move(ctx.stats);

  // Leader draws the hash coefficients; two words per hash broadcast down.
  Rng hrng(derive(seed, 0xF0u, uint64_t(ctx.leader)));
  std::vector<HashFn> hash;
  std::vector<int64_t> words;
  for (int j = 0; j < params.s; ++j) {
    hash.push_back(HashFn::pairwise(a.N, hrng));
    words.push_back(hash.back().coef[1]);
    words.push_back(hash.back().coef[0]);
  }
  stats.absorb(
      broadcast_words(g, ctx, words, uint64_t(params.M), budget));

  std::vector<std::vector<std::pair<int, int64_t>>> items(size_t(g.n) + 1);
  for (int v = 1; v <= g.n; ++v) {
    if (a.is_null(v)) continue;
    for (int j = 0; j < params.s; ++j)
      items[size_t(v)].push_back({j + 1, hash[size_t(j)](a.val[size_t(v)])});
  }
  UpcastOpts opts;
  opts.dedup = true;  // rank distinct hash values only
  opts.broadcast_back = false;
  auto up = upcast_k_smallest_grouped(g, ctx, params.s, params.t, items,
                                      uint64_t(params.M), budget, opts);
  stats.absorb(up.stats);

  std::vector<double> per_hash;
  for (int j = 0; j < params.s; ++j) {
    const auto& smallest = up.smallest[size_t(j)];
    if (int(smallest.size()) < params.t)
      per_hash.push_back(double(smallest.size()));  // exact distinct count
    else
      per_hash.push_back(double(params.t) * double(params.M) /
                         double(smallest.back()));
  }
  double truth = double(exact_stats(a).f0());
  return make_estimate(median_of(per_hash), truth, std::move(stats));
}

Estimate f2_estimate(const Graph& g, const ValueAssignment& a, double eps,
                     uint64_t seed, const Constants& c,
                     int median_width_override) {
  a.validate();
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must be in (0, 1]");
  int s1 = int(std::ceil(16.0 / (eps * eps)));
  int s2 = odd_median_width(g.n, c, median_width_override);
  int k = s1 * s2;
  BitBudget budget = BitBudget::make(g.n, a.N, c.c0);
  auto ctx = elect_leader_and_ids(g, budget);
  RoundStats stats = std::move(ctx.stats);

  // One master seed broadcast; all nodes derive the 4-wise sign functions.
  uint64_t hseed = derive(seed, 0xF2u, uint64_t(ctx.leader));
  stats.absorb(broadcast_words(
      g, ctx, {int64_t(hseed >> 32), int64_t(hseed & 0xffffffffu)},
      uint64_t(1) << 32, budget));

  // Sign tables only for values actually present.
  std::vector<int64_t> present;
  std::vector<int> slot(size_t(a.N) + 1, -1);
  for (int v = 1; v <= g.n; ++v) {
    int64_t x = a.val[size_t(v)];
    if (x != kNullValue && slot[size_t(x)] < 0) {
      slot[size_t(x)] = int(present.size());
      present.push_back(x);
    }
  }
  std::vector<std::vector<int8_t>> sig(
      size_t(k), std::vector<int8_t>(present.size(), 0));
  for (int ci = 0; ci < k; ++ci) {
    Rng r(derive(hseed, uint64_t(ci)));
    HashFn h = HashFn::fourwise(a.N, r);
    for (size_t i = 0; i < present.size(); ++i)
      sig[size_t(ci)][i] = int8_t(h.sign(present[i]));
  }

  std::vector<std::vector<int64_t>> local(size_t(g.n) + 1,
                                          std::vector<int64_t>(size_t(k), 0));
  for (int v = 1; v <= g.n; ++v) {
    if (a.is_null(v)) continue;
    int si = slot[size_t(a.val[size_t(v)])];
    for (int ci = 0; ci < k; ++ci)
      local[size_t(v)][size_t(ci)] = sig[size_t(ci)][size_t(si)];
  }
  auto agg = aggregate_sums_root(g, ctx, local, g.n, budget);
  stats.absorb(agg.stats);

  std::vector<double> group_means;
  for (int gi = 0; gi < s2; ++gi) {
    double mean = 0.0;
    for (int i = 0; i < s1; ++i) {
      double z = double(agg.totals[size_t(gi * s1 + i)]);
      mean += z * z;
    }
    group_means.push_back(mean / double(s1));
  }
  double truth = double(exact_stats(a).moment(2));
  return make_estimate(median_of(group_means), truth, std::move(stats));
}

int64_t ams_repetitions(int n, int64_t N, int p, double eps,
                        const Constants& c) {
  double base = double(std::min<int64_t>(n, N));
  return int64_t(std::ceil(double(c.c_ams) / (eps * eps) *
                           std::pow(base, 1.0 - 1.0 / double(p)) *
                           double(std::max(1, ceil_log2(uint64_t(n))))));
}

namespace {

// Pipelined descent of `reps` sampling tokens: token j leaves the root at
// round j and walks down with per-child probabilities proportional to
// non-empty subtree counts, stopping at each node with probability
// (own indicator / remaining count). One token per tree edge per round.
struct DescentProgram {
  const LeaderContext& ctx;
  const BitBudget& budget;
  int64_t reps;
  const std::vector<int64_t>& own;                    // non-empty indicator
  const std::vector<std::vector<int64_t>>& child_cnt; // aligned with children
  const std::vector<int64_t>& subtree_cnt;
  std::vector<int> sample_node;  // by repetition (1-based rep index)

  DescentProgram(const LeaderContext& c, const BitBudget& b, int64_t r,
                 const std::vector<int64_t>& ow,
                 const std::vector<std::vector<int64_t>>& cc,
                 const std::vector<int64_t>& sc)
      : ctx(c), budget(b), reps(r), own(ow), child_cnt(cc), subtree_cnt(sc) {
    sample_node.assign(size_t(reps) + 1, 0);
  }

  void place(int v, int64_t rep, Rng& rng, const Sender& send) {
    int64_t pick = rng.below(subtree_cnt[size_t(v)]);
    if (pick < own[size_t(v)]) {
      sample_node[size_t(rep)] = v;
      return;
    }
    pick -= own[size_t(v)];
    const auto& ch = ctx.tree.children[v];
    for (size_t i = 0; i < ch.size(); ++i) {
      if (pick < child_cnt[size_t(v)][i]) {
        Message m;
        m.add(rep, uint64_t(reps) + 1);
        send(ch[i], m);
        return;
      }
      pick -= child_cnt[size_t(v)][i];
    }
    throw SimError("descent token fell off the tree");
  }

  bool on_round(int v, int64_t r, std::span<const Delivery> inbox, Rng& rng,
                const Sender& send) {
    if (v == ctx.tree.root && r <= reps) place(v, r, rng, send);
    for (const auto& d : inbox) place(v, d.msg.f[0], rng, send);
    return v != ctx.tree.root || r >= reps;
  }
};

// Bottom-up non-empty counts with per-child breakdown (children known).
struct CountProgram {
  const LeaderContext& ctx;
  const BitBudget& budget;
  std::vector<int64_t> own, subtree_cnt;
  std::vector<std::vector<int64_t>> child_cnt;
  std::vector<int> pending;
  std::vector<char> sent;

  CountProgram(const LeaderContext& c, const BitBudget& b,
               const ValueAssignment& a)
      : ctx(c), budget(b) {
    size_t n1 = ctx.tree.parent.size();
    own.assign(n1, 0);
    subtree_cnt.assign(n1, 0);
    child_cnt.assign(n1, {});
    pending.assign(n1, 0);
    sent.assign(n1, 0);
    for (size_t v = 1; v < n1; ++v) {
      own[v] = a.is_null(int(v)) ? 0 : 1;
      subtree_cnt[v] = own[v];
      pending[v] = int(ctx.tree.children[int(v)].size());
      child_cnt[v].assign(ctx.tree.children[int(v)].size(), 0);
    }
  }

  bool on_round(int v, int64_t, std::span<const Delivery> inbox, Rng&,
                const Sender& send) {
    for (const auto& d : inbox) {
      const auto& ch = ctx.tree.children[v];
      size_t idx = size_t(std::find(ch.begin(), ch.end(), d.from) - ch.begin());
      child_cnt[size_t(v)][idx] = d.msg.f[0];
      subtree_cnt[size_t(v)] += d.msg.f[0];
      pending[size_t(v)] -= 1;
    }
    if (!sent[size_t(v)] && pending[size_t(v)] == 0) {
      sent[size_t(v)] = 1;
      if (ctx.tree.parent[v] != 0) {
        Message m;
        m.add(subtree_cnt[size_t(v)], uint64_t(ctx.tree.parent.size()));
        send(ctx.tree.parent[v], m);
      }
    }
    return true;
  }
};

}  // namespace

Estimate fp_ams_estimate(const Graph& g, const ValueAssignment& a, int p,
                         double eps, uint64_t seed, const Constants& c) {
  a.validate();
  if (p < 3) throw ConfigError("AMS path expects integer p >= 3");
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must be in (0, 1]");
  BitBudget budget = BitBudget::make(g.n, a.N, c.c0);
  auto ctx = elect_leader_and_ids(g, budget);
  RoundStats stats = std::move(ctx.stats);

  CountProgram counts(ctx, budget, a);
  stats.absorb(
      run_congest(g, counts, derive(seed, 1), 4 * int64_t(g.n) + 16, budget));
  int64_t f1 = counts.subtree_cnt[size_t(ctx.tree.root)];
  if (f1 == 0) throw ConfigError("AMS estimator needs a non-empty node");

  int64_t reps = ams_repetitions(g.n, a.N, p, eps, c);

  DescentProgram descent(ctx, budget, reps, counts.own, counts.child_cnt,
                         counts.subtree_cnt);
  stats.absorb(run_congest(g, descent, derive(seed, 2),
                           reps + 4 * int64_t(g.n) + 16, budget));
  for (int64_t j = 1; j <= reps; ++j)
    if (descent.sample_node[size_t(j)] == 0)
      throw SimError("descent failed to place a sample");

  // Sampled (value, dfs) pairs climb to the root as reps pipelined sums
  // (pair packed into one word), then broadcast so every node can evaluate
  // its rank indicator.
  int64_t pair_enc = int64_t(g.n) + 1;
  int64_t pair_max = a.N * pair_enc + g.n;
  std::vector<std::vector<int64_t>> up_local(
      size_t(g.n) + 1, std::vector<int64_t>(size_t(reps), 0));
  for (int64_t j = 1; j <= reps; ++j) {
    int v = descent.sample_node[size_t(j)];
    up_local[size_t(v)][size_t(j - 1)] =
        a.val[size_t(v)] * pair_enc + ctx.dfs[v];
  }
  auto pairs = aggregate_sums_root(g, ctx, up_local, pair_max, budget);
  stats.absorb(pairs.stats);
  up_local.clear();
  up_local.shrink_to_fit();

  std::vector<Message> down;
  for (int64_t j = 0; j < reps; ++j) {
    Message m;
    m.add(j, uint64_t(reps)).add(pairs.totals[size_t(j)], uint64_t(pair_max) + 1);
    down.push_back(m);
  }
  stats.absorb(broadcast_messages(g, ctx, std::move(down), budget));

  std::vector<std::vector<int64_t>> ind(size_t(g.n) + 1,
                                        std::vector<int64_t>(size_t(reps), 0));
  for (int v = 1; v <= g.n; ++v) {
    if (a.is_null(v)) continue;
    for (int64_t j = 0; j < reps; ++j) {
      int64_t sample_val = pairs.totals[size_t(j)] / pair_enc;
      int64_t sample_dfs = pairs.totals[size_t(j)] % pair_enc;
      if (a.val[size_t(v)] == sample_val && ctx.dfs[v] >= sample_dfs)
        ind[size_t(v)][size_t(j)] = 1;
    }
  }
  auto ranks = aggregate_sums_root(g, ctx, ind, g.n, budget);
  stats.absorb(ranks.stats);

  // X_j = F1 * (r^p - (r-1)^p), averaged per group, median across groups.
  int groups = std::max(1, ceil_log2(uint64_t(g.n)));
  std::vector<double> sums(size_t(groups), 0.0);
  std::vector<int64_t> sizes(size_t(groups), 0);
  for (int64_t j = 0; j < reps; ++j) {
    int64_t r = ranks.totals[size_t(j)];
    if (r < 1) throw SimError("rank count lost its own sample");
    i128 rp = 1, rm = 1;
    for (int i = 0; i < p; ++i) {
      rp *= i128(r);
      rm *= i128(r - 1);
    }
    double x = double(f1) * double(rp - rm);
    size_t gi = size_t(j % groups);
    sums[gi] += x;
    sizes[gi] += 1;
  }
  std::vector<double> means;
  for (int gi = 0; gi < groups; ++gi)
    if (sizes[size_t(gi)] > 0)
      means.push_back(sums[size_t(gi)] / double(sizes[size_t(gi)]));
  double truth = double(exact_stats(a).moment(p));
  return make_estimate(median_of(means), truth, std::move(stats));
}

}  // namespace dsum
