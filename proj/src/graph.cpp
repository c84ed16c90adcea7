#include "dsum/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace dsum {

bool Graph::adjacent(int u, int v) const {
  const auto& a = adj[u];
  return std::binary_search(a.begin(), a.end(), v);
}

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 1) throw ConfigError("graph must have at least one node");
  Graph g;
  g.n = n;
  g.adj.assign(n + 1, {});
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u < 1 || u > n || v < 1 || v > n)
      throw ConfigError("edge endpoint out of range");
    if (u == v) throw ConfigError("self-loop rejected");
    auto key = std::minmax(u, v);
    if (!seen.insert({key.first, key.second}).second)
      throw ConfigError("parallel edge rejected");
    g.adj[u].push_back(v);
    g.adj[v].push_back(u);
  }
  g.m = static_cast<int64_t>(seen.size());
  for (int v = 1; v <= n; ++v) std::sort(g.adj[v].begin(), g.adj[v].end());
  if (!is_connected(g)) throw ConfigError("graph is not connected");
  return g;
}

bool is_connected(const Graph& g) {
  if (g.n == 0) return false;
  std::vector<char> seen(g.n + 1, 0);
  std::deque<int> q{1};
  seen[1] = 1;
  int count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : g.adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push_back(w);
      }
    }
  }
  return count == g.n;
}

Tree bfs_tree(const Graph& g, int root) {
  if (root < 1 || root > g.n) throw ConfigError("bfs root out of range");
  Tree t;
  t.root = root;
  t.parent.assign(g.n + 1, 0);
  t.subtree.assign(g.n + 1, 0);
  t.children.assign(g.n + 1, {});
  t.level = bfs_distances(g, root);
  std::vector<int> order;
  order.reserve(g.n);
  for (int v = 1; v <= g.n; ++v) {
    t.depth = std::max(t.depth, t.level[v]);
    order.push_back(v);
    if (v == root) continue;
    // parent: smallest-id neighbor one level up
    for (int u : g.adj[v]) {
      if (t.level[u] == t.level[v] - 1) {
        t.parent[v] = u;
        t.children[u].push_back(v);
        break;
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return t.level[a] > t.level[b]; });
  for (int v : order) {
    t.subtree[v] += 1;
    if (v != root) t.subtree[t.parent[v]] += t.subtree[v];
  }
  return t;
}

std::vector<int> bfs_distances(const Graph& g, int src) {
  std::vector<int> dist(g.n + 1, -1);
  std::deque<int> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : g.adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
    }
  }
  return dist;
}

int diameter(const Graph& g) {
  int best = 0;
  for (int v = 1; v <= g.n; ++v) {
    auto d = bfs_distances(g, v);
    best = std::max(best, *std::max_element(d.begin() + 1, d.end()));
  }
  return best;
}

namespace {

std::vector<std::pair<int, int>> clique_edges(int lo, int hi) {
  std::vector<std::pair<int, int>> e;
  for (int u = lo; u <= hi; ++u)
    for (int v = u + 1; v <= hi; ++v) e.push_back({u, v});
  return e;
}

Graph make_random_regular(int n, int d, uint64_t seed) {
  if (d < 3) throw ConfigError("random-regular requires d >= 3");
  if (d >= n) throw ConfigError("random-regular requires d < n");
  if ((int64_t(n) * d) % 2 != 0)
    throw ConfigError("random-regular requires n*d even");
  // Pairing model with pair-level retries: shuffle the remaining stubs, keep
  // pairs that form new simple edges, reshuffle the rest. Whole attempts are
  // capped at 200; disconnected outcomes are rejected too.
  const int kMaxTries = 200;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Rng rng(derive(seed, 0x5267u, uint64_t(attempt)));
    std::vector<int> stubs;
    stubs.reserve(size_t(n) * d);
    for (int v = 1; v <= n; ++v)
      for (int i = 0; i < d; ++i) stubs.push_back(v);
    std::set<std::pair<int, int>> seen;
    bool ok = true;
    while (!stubs.empty()) {
      for (size_t i = stubs.size(); i > 1; --i)
        std::swap(stubs[i - 1], stubs[size_t(rng.below(int64_t(i)))]);
      std::vector<int> rest;
      for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
        int u = stubs[i], v = stubs[i + 1];
        auto key = std::minmax(u, v);
        if (u != v && seen.insert({key.first, key.second}).second) continue;
        rest.push_back(u);
        rest.push_back(v);
      }
      if (rest.size() == stubs.size()) {
        // no progress; only invalid pairs remain
        ok = false;
        break;
      }
      stubs = std::move(rest);
    }
    if (!ok) continue;
    Graph g;
    g.n = n;
    g.m = int64_t(seen.size());
    g.adj.assign(n + 1, {});
    for (auto [u, v] : seen) {
      g.adj[u].push_back(v);
      g.adj[v].push_back(u);
    }
    for (int v = 1; v <= n; ++v) std::sort(g.adj[v].begin(), g.adj[v].end());
    if (is_connected(g)) return g;
  }
  throw SimError("random-regular generator exhausted retries");
}

}  // namespace

Graph generate(const GraphSpec& s) {
  using F = GraphSpec::Family;
  switch (s.family) {
    case F::Clique: {
      if (s.n < 1) throw ConfigError("clique needs n >= 1");
      if (s.n == 1) return Graph{1, 0, {{}, {}}};
      return Graph::from_edges(s.n, clique_edges(1, s.n));
    }
    case F::Path: {
      if (s.n < 1) throw ConfigError("path needs n >= 1");
      if (s.n == 1) return Graph{1, 0, {{}, {}}};
      std::vector<std::pair<int, int>> e;
      for (int v = 1; v < s.n; ++v) e.push_back({v, v + 1});
      return Graph::from_edges(s.n, e);
    }
    case F::Cycle: {
      if (s.n < 3) throw ConfigError("cycle needs n >= 3");
      std::vector<std::pair<int, int>> e;
      for (int v = 1; v < s.n; ++v) e.push_back({v, v + 1});
      e.push_back({s.n, 1});
      return Graph::from_edges(s.n, e);
    }
    case F::Star: {
      if (s.n < 2) throw ConfigError("star needs n >= 2");
      std::vector<std::pair<int, int>> e;
      for (int v = 2; v <= s.n; ++v) e.push_back({1, v});
      return Graph::from_edges(s.n, e);
    }
    case F::RandomRegular:
      return make_random_regular(s.n, s.d, s.seed);
    case F::Dumbbell: {
      // Two K_side cliques joined through `bridge` chain nodes.
      int side = s.side, b = s.bridge;
      if (side < 1 || b < 0) throw ConfigError("dumbbell needs side >= 1, bridge >= 0");
      int n = 2 * side + b;
      if (n < 2) throw ConfigError("dumbbell too small");
      auto e = clique_edges(1, side);
      auto right = clique_edges(side + b + 1, n);
      e.insert(e.end(), right.begin(), right.end());
      for (int v = side; v < side + b + 1; ++v) e.push_back({v, v + 1});
      return Graph::from_edges(n, e);
    }
    case F::Blackboard: {
      // `parts` cliques of part_size, each wired to one blackboard node.
      int t = s.parts, ps = s.part_size;
      if (t < 1 || ps < 1) throw ConfigError("blackboard needs parts, part_size >= 1");
      int n = t * ps + 1;
      std::vector<std::pair<int, int>> e;
      for (int i = 0; i < t; ++i) {
        auto c = clique_edges(i * ps + 1, (i + 1) * ps);
        e.insert(e.end(), c.begin(), c.end());
        e.push_back({i * ps + 1, n});
      }
      return Graph::from_edges(n, e);
    }
    case F::File:
      return read_edge_list(s.path);
  }
  throw ConfigError("unknown graph family");
}

GraphSpec GraphSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw ConfigError("empty graph spec");
  GraphSpec s;
  const std::string& f = parts[0];
  auto arg = [&](size_t i) -> int {
    if (i >= parts.size()) throw ConfigError("graph spec missing parameter: " + text);
    return std::stoi(parts[i]);
  };
  if (f == "clique" || f == "path" || f == "cycle" || f == "star") {
    s.family = f == "clique"  ? Family::Clique
               : f == "path"  ? Family::Path
               : f == "cycle" ? Family::Cycle
                              : Family::Star;
    s.n = arg(1);
  } else if (f == "random-regular" || f == "rr") {
    s.family = Family::RandomRegular;
    s.n = arg(1);
    s.d = arg(2);
    if (parts.size() > 3) s.seed = std::stoull(parts[3]);
  } else if (f == "dumbbell") {
    s.family = Family::Dumbbell;
    s.side = arg(1);
    s.bridge = arg(2);
    s.n = 2 * s.side + s.bridge;
  } else if (f == "blackboard") {
    s.family = Family::Blackboard;
    s.parts = arg(1);
    s.part_size = arg(2);
    s.n = s.parts * s.part_size + 1;
  } else if (f == "file") {
    s.family = Family::File;
    if (parts.size() < 2) throw ConfigError("file graph spec needs a path");
    s.path = text.substr(5);
  } else {
    throw ConfigError("unknown graph family: " + f);
  }
  return s;
}

std::string GraphSpec::describe() const {
  switch (family) {
    case Family::Clique: return "clique:" + std::to_string(n);
    case Family::Path: return "path:" + std::to_string(n);
    case Family::Cycle: return "cycle:" + std::to_string(n);
    case Family::Star: return "star:" + std::to_string(n);
    case Family::RandomRegular:
      return "random-regular:" + std::to_string(n) + ":" + std::to_string(d);
    case Family::Dumbbell:
      return "dumbbell:" + std::to_string(side) + ":" + std::to_string(bridge);
    case Family::Blackboard:
      return "blackboard:" + std::to_string(parts) + ":" + std::to_string(part_size);
    case Family::File: return "file:" + path;
  }
  return "?";
}

Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list: " + path);
  int n;
  int64_t m;
  if (!(in >> n >> m)) throw ConfigError("bad edge list header: " + path);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(size_t(m));
  int u, v;
  while (in >> u >> v) edges.push_back({u, v});
  if (int64_t(edges.size()) != m)
    throw ConfigError("edge list length does not match header: " + path);
  return Graph::from_edges(n, edges);
}

void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << g.n << " " << g.m << "\n";
  for (int u = 1; u <= g.n; ++u)
    for (int v : g.adj[u])
      if (u < v) out << u << " " << v << "\n";
}

}  // namespace dsum
