#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>

#include "dsum/primitives.hpp"

using namespace dsum;

namespace {

BitBudget budget_for(const Graph& g) { return BitBudget::make(g.n, g.n, 8); }

Graph random_tree(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<int> label(size_t(n) + 1);
  std::iota(label.begin(), label.end(), 0);
  for (int i = n; i > 1; --i)
    std::swap(label[size_t(i)], label[size_t(1 + rng.below(i))]);
  std::vector<std::pair<int, int>> edges;
  for (int v = 2; v <= n; ++v)
    edges.push_back({label[size_t(v)], label[size_t(1 + rng.below(v - 1))]});
  return Graph::from_edges(n, edges);
}

}  // namespace

TEST_CASE("primes") {
  CHECK(next_prime_geq(2) == 2);
  CHECK(next_prime_geq(14) == 17);
  CHECK(is_prime_u64(uint64_t(next_prime_geq(int64_t(1) << 30))));
  // independent trial-division check of the KMV modulus for N=1024
  int64_t m = HashFn::modulus_for(1024);
  CHECK(m >= int64_t(1024) * 1024 * 1024);
  for (int64_t d = 2; d * d <= m; ++d) CHECK(m % d != 0);
}

TEST_CASE("hash families evaluate in range and reproducibly") {
  Rng rng(5);
  HashFn h = HashFn::pairwise(100, rng);
  HashFn h4 = HashFn::fourwise(100, rng);
  for (int64_t x = 1; x <= 100; ++x) {
    CHECK(h(x) >= 0);
    CHECK(h(x) < h.mod);
    CHECK((h4.sign(x) == 1 || h4.sign(x) == -1));
  }
  Rng rng2(5);
  HashFn g = HashFn::pairwise(100, rng2);
  CHECK(g(42) == h(42));
}

TEST_CASE("four-wise signs are balanced over the coefficient draw") {
  int64_t sum = 0;
  for (int i = 0; i < 2000; ++i) {
    Rng rng(derive(9, uint64_t(i)));
    HashFn h = HashFn::fourwise(64, rng);
    sum += h.sign(17);
  }
  CHECK(std::abs(sum) < 250);  // ~5.6 sigma of a fair coin walk
}

TEST_CASE("election on P4: leader 1, DFS preorder along the chain") {
  Graph g = generate(GraphSpec::parse("path:4"));
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  CHECK(ctx.leader == 1);
  CHECK(ctx.tree.root == 1);
  for (int v = 1; v <= 4; ++v) CHECK(ctx.dfs[v] == v);
}

TEST_CASE("election on a star with hub id 3") {
  // star over nodes 1..5 whose hub is node 3
  Graph g = Graph::from_edges(5, {{3, 1}, {3, 2}, {3, 4}, {3, 5}});
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  CHECK(ctx.leader == 1);
  std::vector<int> ids(ctx.dfs.begin() + 1, ctx.dfs.end());
  std::sort(ids.begin(), ids.end());
  for (int i = 1; i <= 5; ++i) CHECK(ids[size_t(i) - 1] == i);
  CHECK(ctx.tree.depth == 2);
}

TEST_CASE("election IDs form a DFS preorder with consecutive subtree ranges") {
  GraphSpec s = GraphSpec::parse("random-regular:128:6");
  s.seed = 13;
  Graph g = generate(s);
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  // bijection
  std::vector<int> seen(size_t(g.n) + 1, 0);
  for (int v = 1; v <= g.n; ++v) {
    CHECK(ctx.dfs[v] >= 1);
    CHECK(ctx.dfs[v] <= g.n);
    seen[size_t(ctx.dfs[v])] += 1;
  }
  for (int i = 1; i <= g.n; ++i) CHECK(seen[size_t(i)] == 1);
  // preorder: children partition (dfs[v], dfs[v]+subtree[v]) in id order
  for (int v = 1; v <= g.n; ++v) {
    int next = ctx.dfs[v] + 1;
    for (int ch : ctx.tree.children[v]) {
      CHECK(ctx.dfs[ch] == next);
      next += ctx.tree.subtree[ch];
    }
    CHECK(next == ctx.dfs[v] + ctx.tree.subtree[v]);
  }
  // matches the centralized BFS tree with the same parent rule
  Tree want = bfs_tree(g, ctx.leader);
  for (int v = 1; v <= g.n; ++v) {
    CHECK(ctx.tree.parent[v] == want.parent[v]);
    CHECK(ctx.tree.level[v] == want.level[v]);
    CHECK(ctx.tree.subtree[v] == want.subtree[v]);
  }
  // round count <= a*D + b with small constants
  int D = diameter(g);
  CHECK(ctx.stats.rounds <= 3 * D + 9);
}

TEST_CASE("aggregate_sum: examples and oracle") {
  GraphSpec s = GraphSpec::parse("random-regular:32:4");
  s.seed = 21;
  Graph g = generate(s);
  auto ctx = elect_leader_and_ids(g, budget_for(g));

  std::vector<int64_t> ones(size_t(g.n) + 1, 1);
  auto r = aggregate_sum(g, ctx, ones, g.n, budget_for(g));
  CHECK(r.total == g.n);
  CHECK(r.stats.rounds <= 2 * ctx.tree.depth + 2);

  std::vector<int64_t> zeros(size_t(g.n) + 1, 0);
  CHECK(aggregate_sum(g, ctx, zeros, g.n, budget_for(g)).total == 0);

  Rng rng(4);
  std::vector<int64_t> vals(size_t(g.n) + 1, 0);
  int64_t want = 0;
  for (int v = 1; v <= g.n; ++v) {
    vals[size_t(v)] = rng.below(201) - 100;
    want += vals[size_t(v)];
  }
  CHECK(aggregate_sum(g, ctx, vals, 100 * int64_t(g.n), budget_for(g)).total ==
        want);
}

TEST_CASE("aggregate_sum overflow of the declared range errors out") {
  Graph g = generate(GraphSpec::parse("path:4"));
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  std::vector<int64_t> vals(5, 10);
  CHECK_THROWS_AS(aggregate_sum(g, ctx, vals, 15, budget_for(g)), SimError);
}

TEST_CASE("pipelined multi-aggregate matches per-counter sums") {
  GraphSpec s = GraphSpec::parse("random-regular:64:4");
  s.seed = 2;
  Graph g = generate(s);
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  int k = 40;
  Rng rng(8);
  std::vector<std::vector<int64_t>> local(
      size_t(g.n) + 1, std::vector<int64_t>(size_t(k), 0));
  std::vector<int64_t> want(size_t(k), 0);
  for (int v = 1; v <= g.n; ++v)
    for (int j = 0; j < k; ++j) {
      local[size_t(v)][size_t(j)] = rng.below(7) - 3;
      want[size_t(j)] += local[size_t(v)][size_t(j)];
    }
  auto r = aggregate_sums_root(g, ctx, local, 3 * int64_t(g.n), budget_for(g));
  CHECK(r.totals == want);
  CHECK(r.stats.rounds <= ctx.tree.depth + k + 2);
}

TEST_CASE("broadcast pipelines words at one per round") {
  Graph p4 = generate(GraphSpec::parse("path:4"));
  auto ctx4 = elect_leader_and_ids(p4, budget_for(p4));
  auto st = broadcast_words(p4, ctx4, {42}, 1 << 10, budget_for(p4));
  CHECK(st.rounds == 3);  // depth pipeline, one word

  // pairwise hash description: two coefficient words
  auto st2 = broadcast_words(p4, ctx4, {123, 456}, 1 << 10, budget_for(p4));
  CHECK(st2.rounds <= ctx4.tree.depth + 3);

  Graph p6 = generate(GraphSpec::parse("path:6"));  // depth 5 from node 1
  auto ctx6 = elect_leader_and_ids(p6, budget_for(p6));
  std::vector<int64_t> words(64, 7);
  auto st3 = broadcast_words(p6, ctx6, words, 1 << 10, budget_for(p6));
  CHECK(st3.rounds == 5 + 64 - 1);
  CHECK(st3.rounds <= 69);
}

namespace {

std::vector<std::vector<int64_t>> upcast_oracle(
    const std::vector<std::vector<std::pair<int, int64_t>>>& items, int k,
    int t, bool dedup) {
  std::vector<std::vector<int64_t>> per_group(static_cast<size_t>(k));
  for (const auto& node_items : items)
    for (auto [group, value] : node_items)
      per_group[size_t(group) - 1].push_back(value);
  for (auto& g : per_group) {
    std::sort(g.begin(), g.end());
    if (dedup) g.erase(std::unique(g.begin(), g.end()), g.end());
    if (int(g.size()) > t) g.resize(size_t(t));
  }
  return per_group;
}

}  // namespace

TEST_CASE("grouped upcast on a single node is free") {
  Graph g1 = generate(GraphSpec::parse("clique:1"));
  auto ctx = elect_leader_and_ids(g1, budget_for(g1));
  std::vector<std::vector<std::pair<int, int64_t>>> items(2);
  items[1] = {{1, 5}, {1, 2}};
  auto r = upcast_k_smallest_grouped(g1, ctx, 1, 2, items, 1 << 10,
                                     budget_for(g1));
  CHECK(r.stats.rounds == 0);
  CHECK(r.smallest[0] == std::vector<int64_t>{2, 5});
}

TEST_CASE("grouped upcast: star, one group, t=3 over {5,1,9,2}") {
  Graph g = generate(GraphSpec::parse("star:5"));
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  std::vector<std::vector<std::pair<int, int64_t>>> items(6);
  items[2] = {{1, 5}};
  items[3] = {{1, 1}};
  items[4] = {{1, 9}};
  items[5] = {{1, 2}};
  auto r =
      upcast_k_smallest_grouped(g, ctx, 1, 3, items, 1 << 10, budget_for(g));
  CHECK(r.smallest[0] == std::vector<int64_t>{1, 2, 5});
}

TEST_CASE("grouped upcast equals the sort oracle on random trees") {
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(derive(31, uint64_t(trial)));
    int n = 20 + int(rng.below(180));
    int k = 1 + int(rng.below(8));
    int t = 1 + int(rng.below(16));
    bool dedup = rng.coin();
    Graph g = random_tree(n, derive(32, uint64_t(trial)));
    auto ctx = elect_leader_and_ids(g, budget_for(g));
    std::vector<std::vector<std::pair<int, int64_t>>> items(size_t(n) + 1);
    for (int v = 1; v <= n; ++v) {
      int cnt = int(rng.below(4));
      for (int i = 0; i < cnt; ++i)
        items[size_t(v)].push_back(
            {1 + int(rng.below(k)), rng.below(200)});
    }
    UpcastOpts opts;
    opts.dedup = dedup;
    auto r = upcast_k_smallest_grouped(g, ctx, k, t, items, 256, budget_for(g),
                                       opts);
    CHECK(r.smallest == upcast_oracle(items, k, t, dedup));
    CHECK(r.stats.rounds <=
          2 * int64_t(ctx.tree.depth) + int64_t(k) * t + 4);
  }
}

TEST_CASE("grouped upcast n=200 k=8 t=16 matches oracle within the bound") {
  Rng rng(77);
  Graph g = random_tree(200, 99);
  auto ctx = elect_leader_and_ids(g, budget_for(g));
  std::vector<std::vector<std::pair<int, int64_t>>> items(201);
  for (int v = 1; v <= 200; ++v)
    for (int i = 0; i < 3; ++i)
      items[size_t(v)].push_back({1 + int(rng.below(8)), rng.below(100000)});
  auto r = upcast_k_smallest_grouped(g, ctx, 8, 16, items, 100000,
                                     budget_for(g));
  CHECK(r.smallest == upcast_oracle(items, 8, 16, false));
  CHECK(r.stats.rounds <= int64_t(ctx.tree.depth) + 8 * 16 +
                              int64_t(ctx.tree.depth) + 4);
}

TEST_CASE("tree router delivers and measures") {
  GraphSpec s = GraphSpec::parse("random-regular:32:4");
  s.seed = 6;
  Graph g = generate(s);
  BitBudget b = budget_for(g);
  auto ctx = elect_leader_and_ids(g, b);
  TreeRouter router(g, ctx, b);

  SUBCASE("identity permutation costs zero rounds") {
    std::vector<RoutedMessage> batch;
    for (int i = 1; i <= g.n; ++i) {
      RoutedMessage rm(i, i);
      rm.add(i, uint64_t(g.n) + 1);
      batch.push_back(rm);
    }
    auto out = router.route(batch);
    CHECK(out.stats.rounds == 0);
    for (int i = 1; i <= g.n; ++i) REQUIRE(out.delivered[size_t(i)].size() == 1);
  }

  SUBCASE("single message between adjacent nodes within 2*depth") {
    int u_dfs = 0, v_dfs = 0;
    // pick an adjacent pair in DFS space
    int a = ctx.node_at[1];
    int bnode = g.adj[size_t(a)][0];
    u_dfs = ctx.dfs[a];
    v_dfs = ctx.dfs[bnode];
    RoutedMessage rm(u_dfs, v_dfs);
    rm.add(9, 16);
    auto out = router.route({rm});
    CHECK(out.delivered[size_t(v_dfs)].size() == 1);
    CHECK(out.stats.rounds <= 2 * int64_t(ctx.tree.depth));
  }

  SUBCASE("random permutation is fully delivered") {
    Rng rng(12);
    std::vector<int> perm(size_t(g.n) + 1);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = g.n; i > 1; --i)
      std::swap(perm[size_t(i)], perm[size_t(1 + rng.below(i))]);
    std::vector<RoutedMessage> batch;
    for (int i = 1; i <= g.n; ++i) {
      RoutedMessage rm(i, perm[size_t(i)]);
      rm.add(i, uint64_t(g.n) + 1);
      batch.push_back(rm);
    }
    auto out = router.route(batch);
    for (int i = 1; i <= g.n; ++i) {
      REQUIRE(out.delivered[size_t(i)].size() == 1);
      CHECK(out.delivered[size_t(i)][0].dst == i);
    }
    CHECK(out.stats.rounds > 0);
    CHECK(out.stats.max_edge_congestion >= 1);
  }
}

TEST_CASE("random permutation on K64 tree router: regression") {
  Graph g = generate(GraphSpec::parse("clique:64"));
  BitBudget b = budget_for(g);
  auto ctx = elect_leader_and_ids(g, b);
  TreeRouter router(g, ctx, b);
  Rng rng(3);
  std::vector<int> perm(65);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 64; i > 1; --i)
    std::swap(perm[size_t(i)], perm[size_t(1 + rng.below(i))]);
  std::vector<RoutedMessage> batch;
  for (int i = 1; i <= 64; ++i) {
    RoutedMessage rm(i, perm[size_t(i)]);
    rm.add(i, 65);
    batch.push_back(rm);
  }
  auto out = router.route(batch);
  int64_t delivered = 0;
  for (int i = 1; i <= 64; ++i) delivered += int64_t(out.delivered[size_t(i)].size());
  CHECK(delivered == 64);
  // star-shaped tree: every message crosses at most two edges
  CHECK(out.stats.rounds >= 2);
  CHECK(out.stats.rounds <= 16);
}

TEST_CASE("cost-model router charges the stated formula") {
  // n=256: ceil(sqrt(8)) = 3, so tau * 2^3 per batch
  CostModelRouter router(256, 5, 1);
  CHECK(router.rounds_per_batch() == 40);
  RoutedMessage rm(1, 2);
  rm.add(1, 4);
  auto out = router.route({rm});
  CHECK(out.stats.rounds == 40);
  CHECK(out.delivered[2].size() == 1);
  RoutedMessage self(3, 3);
  auto out2 = router.route({self});
  CHECK(out2.stats.rounds == 0);
}
