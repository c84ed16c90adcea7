#include "dsum/exact_sum.hpp"

#include <algorithm>
#include <cmath>

namespace dsum {

SortingNetwork build_sorting_network(int n) {
  if (n < 1) throw ConfigError("sorting network needs n >= 1");
  int width = 1;
  while (width < n) width *= 2;
  SortingNetwork net;
  net.width = width;
  // Batcher odd-even mergesort, one layer per (p, k) pass.
  for (int p = 1; p < width; p *= 2) {
    for (int k = p; k >= 1; k /= 2) {
      std::vector<std::pair<int, int>> layer;
      for (int j = k % p; j + k < width; j += 2 * k) {
        for (int i = 0; i < k; ++i) {
          int a = i + j, b = i + j + k;
          if (a / (2 * p) == b / (2 * p)) layer.push_back({a + 1, b + 1});
        }
      }
      if (!layer.empty()) net.layers.push_back(std::move(layer));
    }
  }
  return net;
}

int64_t GFunction::eval_fixed(int64_t f, int64_t f1) const {
  switch (kind) {
    case Kind::Distinct:
      return 1;
    case Kind::Identity:
      return f;
    case Kind::Power: {
      i128 r = 1;
      for (int i = 0; i < p; ++i) r *= i128(f);
      if (r > i128(INT64_MAX)) throw SimError("g value exceeds payload range");
      return int64_t(r);
    }
    case Kind::EntropyTerm: {
      double q = double(f) / double(f1);
      return llround(-q * std::log(q) * std::pow(2.0, kEntropyShift));
    }
  }
  return 0;
}

double GFunction::eval_real(int64_t f, int64_t f1) const {
  if (kind == Kind::EntropyTerm) {
    double q = double(f) / double(f1);
    return -q * std::log(q);
  }
  return double(eval_fixed(f, f1));
}

int64_t GFunction::max_total(int n) const {
  switch (kind) {
    case Kind::Distinct:
    case Kind::Identity:
      return n;
    case Kind::Power: {
      i128 r = 1;
      for (int i = 0; i < p; ++i) r *= i128(n);
      if (r > i128(INT64_MAX))
        throw SimError("declared aggregate range exceeds 63 bits");
      return int64_t(r);
    }
    case Kind::EntropyTerm:
      return int64_t((std::log(double(std::max(n, 2))) + 1.0) *
                     std::pow(2.0, kEntropyShift));
  }
  return 0;
}

std::string GFunction::name() const {
  switch (kind) {
    case Kind::Distinct: return "distinct";
    case Kind::Power: return "power-" + std::to_string(p);
    case Kind::EntropyTerm: return "entropy-term";
    case Kind::Identity: return "identity";
  }
  return "?";
}

GFunction GFunction::from_name(const std::string& kind, int p) {
  GFunction g;
  if (kind == "distinct") {
    g.kind = Kind::Distinct;
  } else if (kind == "power") {
    g.kind = Kind::Power;
    if (p < 1 || p > 6) throw ConfigError("power g supports 1 <= p <= 6");
    g.p = p;
  } else if (kind == "entropy-term" || kind == "entropy") {
    g.kind = Kind::EntropyTerm;
  } else if (kind == "identity") {
    g.kind = Kind::Identity;
  } else {
    throw ConfigError("unknown g function: " + kind);
  }
  return g;
}

std::pair<i128, double> g_sum_oracle(const FrequencyVector& fv,
                                     const GFunction& g) {
  i128 exact = 0;
  double real = 0.0;
  int64_t f1 = fv.f1();
  for (auto& [value, count] : fv.f) {
    real += g.eval_real(count, f1);
    if (g.is_exact()) {
      if (g.kind == GFunction::Kind::Power) {
        i128 term = 1;
        for (int i = 0; i < g.p; ++i) term *= i128(count);
        exact += term;
      } else {
        exact += i128(g.eval_fixed(count, f1));
      }
    }
  }
  return {exact, real};
}

// ---- distributed pipeline ---------------------------------------------------

namespace {

struct SortRec {
  int64_t key = 0;
  int64_t flags = 0;
};

int host_of(int pos, int n) { return (pos - 1) % n + 1; }  // DFS id

struct NetContext {
  const Graph& g;
  Router& router;
  int width;
  uint64_t key_range;

  // One comparator layer as one routed exchange batch.
  void apply_layer(const std::vector<std::pair<int, int>>& layer,
                   std::vector<SortRec>& recs, RoundStats& stats) const {
    int n = g.n;
    std::vector<RoutedMessage> batch;
    std::vector<char> is_low(size_t(width) + 1, 0);
    for (auto [a, b] : layer) {
      is_low[size_t(a)] = 1;
      int ha = host_of(a, n), hb = host_of(b, n);
      if (ha == hb) continue;
      RoutedMessage to_b(ha, hb);
      to_b.add(b, uint64_t(width) + 1)
          .add(recs[size_t(a)].key, key_range)
          .add(recs[size_t(a)].flags, 4);
      batch.push_back(to_b);
      RoutedMessage to_a(hb, ha);
      to_a.add(a, uint64_t(width) + 1)
          .add(recs[size_t(b)].key, key_range)
          .add(recs[size_t(b)].flags, 4);
      batch.push_back(to_a);
    }
    // local comparators resolve in place
    for (auto [a, b] : layer) {
      if (host_of(a, n) != host_of(b, n)) continue;
      if (recs[size_t(b)].key < recs[size_t(a)].key)
        std::swap(recs[size_t(a)], recs[size_t(b)]);
    }
    if (batch.empty()) return;
    auto out = router.route(std::move(batch));
    stats.absorb(out.stats);
    for (int dst = 1; dst <= n; ++dst) {
      for (const auto& rm : out.delivered[size_t(dst)]) {
        int pos = int(rm.f[0]);
        SortRec other{rm.f[1], rm.f[2]};
        SortRec& mine = recs[size_t(pos)];
        bool keep_own = is_low[size_t(pos)] ? !(other.key < mine.key)
                                            : !(mine.key < other.key);
        if (!keep_own) mine = other;
      }
    }
  }

  // Every position learns its +-1 neighbors' records.
  void neighbor_query(const std::vector<SortRec>& recs,
                      std::vector<SortRec>& left, std::vector<SortRec>& right,
                      RoundStats& stats) const {
    int n = g.n;
    left.assign(size_t(width) + 2, SortRec{-1, 0});
    right.assign(size_t(width) + 2, SortRec{-1, 0});
    std::vector<RoutedMessage> batch;
    batch.reserve(2 * size_t(width));
    for (int i = 1; i <= width; ++i) {
      for (int d : {-1, 1}) {
        int j = i + d;
        if (j < 1 || j > width) continue;
        RoutedMessage rm(host_of(i, n), host_of(j, n));
        rm.add(j, uint64_t(width) + 1)
            .add(d == -1 ? 1 : 0, 2)  // 1: from the right neighbor of j
            .add(recs[size_t(i)].key, key_range)
            .add(recs[size_t(i)].flags, 4);
        batch.push_back(rm);
      }
    }
    auto out = router.route(std::move(batch));
    stats.absorb(out.stats);
    for (int dst = 1; dst <= g.n; ++dst) {
      for (const auto& rm : out.delivered[size_t(dst)]) {
        int pos = int(rm.f[0]);
        SortRec rec{rm.f[2], rm.f[3]};
        if (rm.f[1] == 1)
          right[size_t(pos)] = rec;
        else
          left[size_t(pos)] = rec;
      }
    }
  }
};

constexpr int64_t kHeadFlag = 1;
constexpr int64_t kTailFlag = 2;

struct HeadPhaseOutcome {
  // (value, count) pairs keyed by the position holding the head token
  std::vector<std::pair<int64_t, int64_t>> by_position;  // index: position
  RoundStats stats;
};

// First sort, head/tail marking, token re-sort, tail lookup. Afterwards the
// holder of each value's head token knows (value, f_value).
HeadPhaseOutcome head_tail_pipeline(const Graph& g, Router& router,
                                    const LeaderContext& ctx,
                                    const ValueAssignment& a) {
  int n = g.n;
  auto net = build_sorting_network(n);
  int width = net.width;
  int64_t sentinel = a.N + 1;
  uint64_t key1_range = uint64_t(a.N) + 2;
  uint64_t key2_range = uint64_t(a.N + 1) * uint64_t(width + 1) + 1;

  HeadPhaseOutcome out;
  out.by_position.assign(size_t(width) + 1, {0, 0});

  // First sort: NULL -> 0 sorts first, padding -> N+1 sorts last.
  std::vector<SortRec> recs(size_t(width) + 1);
  for (int i = 1; i <= width; ++i)
    recs[size_t(i)].key = i <= n ? a.val[size_t(ctx.node_at[i])] : sentinel;

  NetContext nc{g, router, width, key1_range};
  for (const auto& layer : net.layers) nc.apply_layer(layer, recs, out.stats);

  std::vector<SortRec> left, right;
  nc.neighbor_query(recs, left, right, out.stats);

  // Head/tail tokens keyed (value, position); everything else blanks to 0.
  std::vector<SortRec> tokens(size_t(width) + 1);
  for (int i = 1; i <= width; ++i) {
    int64_t k = recs[size_t(i)].key;
    if (k < 1 || k > a.N) continue;
    bool head = (i == 1) || left[size_t(i)].key != k;
    bool tail = (i == width) || right[size_t(i)].key != k;
    if (head || tail) {
      tokens[size_t(i)].key = k * (width + 1) + i;
      tokens[size_t(i)].flags = (head ? kHeadFlag : 0) | (tail ? kTailFlag : 0);
    }
  }

  NetContext nc2{g, router, width, key2_range};
  for (const auto& layer : net.layers)
    nc2.apply_layer(layer, tokens, out.stats);
  nc2.neighbor_query(tokens, left, right, out.stats);

  for (int i = 1; i <= width; ++i) {
    const SortRec& tok = tokens[size_t(i)];
    if ((tok.flags & kHeadFlag) == 0 || tok.key == 0) continue;
    int64_t value = tok.key / (width + 1);
    int64_t head_pos = tok.key % (width + 1);
    int64_t f;
    if (tok.flags & kTailFlag) {
      f = 1;
    } else {
      f = -1;
      for (const SortRec* nb : {&left[size_t(i)], &right[size_t(i)]}) {
        if (nb->key <= 0 || (nb->flags & kTailFlag) == 0) continue;
        if (nb->key / (width + 1) != value) continue;
        f = nb->key % (width + 1) - head_pos + 1;
      }
      if (f <= 0) throw SimError("head token found no matching tail");
    }
    out.by_position[size_t(i)] = {value, f};
  }
  return out;
}

}  // namespace

SortResult distributed_sort(const Graph& g, Router& router,
                            const LeaderContext& ctx, const ValueAssignment& a,
                            [[maybe_unused]] const BitBudget& budget) {
  auto net = build_sorting_network(g.n);
  int width = net.width;
  int64_t sentinel = a.N + 1;
  std::vector<SortRec> recs(size_t(width) + 1);
  for (int i = 1; i <= width; ++i)
    recs[size_t(i)].key = i <= g.n ? a.val[size_t(ctx.node_at[i])] : sentinel;
  SortResult res;
  NetContext nc{g, router, width, uint64_t(a.N) + 2};
  for (const auto& layer : net.layers) nc.apply_layer(layer, recs, res.stats);
  res.keys.assign(size_t(width) + 1, 0);
  for (int i = 1; i <= width; ++i) res.keys[size_t(i)] = recs[size_t(i)].key;
  return res;
}

GsumResult exact_g_sum(const Graph& g, Router& router, const LeaderContext& ctx,
                       const ValueAssignment& a, const GFunction& gfun,
                       const BitBudget& budget) {
  GsumResult res;
  int64_t f1 = 0;
  if (gfun.needs_f1()) {
    std::vector<int64_t> ind(size_t(g.n) + 1, 0);
    for (int v = 1; v <= g.n; ++v) ind[size_t(v)] = a.is_null(v) ? 0 : 1;
    auto agg = aggregate_sum(g, ctx, ind, g.n, budget);
    f1 = agg.total;
    res.stats.absorb(agg.stats);
    if (f1 == 0) return res;
  }

  auto heads = head_tail_pipeline(g, router, ctx, a);
  res.stats.absorb(heads.stats);

  std::vector<int64_t> local(size_t(g.n) + 1, 0);
  int width = int(heads.by_position.size()) - 1;
  for (int i = 1; i <= width; ++i) {
    auto [value, f] = heads.by_position[size_t(i)];
    if (f > 0) local[size_t(ctx.node_at[host_of(i, g.n)])] +=
        gfun.eval_fixed(f, f1);
  }
  auto agg = aggregate_sum(g, ctx, local, gfun.max_total(g.n), budget);
  res.stats.absorb(agg.stats);
  res.total_fixed = agg.total;
  res.value = gfun.kind == GFunction::Kind::EntropyTerm
                  ? double(agg.total) / std::pow(2.0, kEntropyShift)
                  : double(agg.total);
  return res;
}

TopKResult top_k(const Graph& g, Router& router, const LeaderContext& ctx,
                 const ValueAssignment& a, int k, const BitBudget& budget) {
  if (k < 1) throw ConfigError("top_k needs k >= 1");
  TopKResult res;
  auto heads = head_tail_pipeline(g, router, ctx, a);
  res.stats.absorb(heads.stats);

  // Largest counts first, ties by smaller value: ascending (n - f, value) key.
  uint64_t enc = uint64_t(a.N) + 2;
  std::vector<std::vector<std::pair<int, int64_t>>> items(size_t(g.n) + 1);
  int width = int(heads.by_position.size()) - 1;
  for (int i = 1; i <= width; ++i) {
    auto [value, f] = heads.by_position[size_t(i)];
    if (f > 0)
      items[size_t(ctx.node_at[host_of(i, g.n)])].push_back(
          {1, int64_t(uint64_t(g.n - f) * enc) + value});
  }
  auto up = upcast_k_smallest_grouped(g, ctx, 1, k, items,
                                      uint64_t(g.n + 1) * enc, budget);
  res.stats.absorb(up.stats);
  for (int64_t key : up.smallest[0]) {
    int64_t f = g.n - int64_t(uint64_t(key) / enc);
    int64_t value = int64_t(uint64_t(key) % enc);
    res.items.push_back({value, f});
  }
  return res;
}

}  // namespace dsum
