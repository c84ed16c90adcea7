#pragma once
// Graph representation, instance generators, BFS trees, edge-list IO.
// Node identifiers are 1..n throughout; index 0 of per-node vectors is unused.

#include <string>
#include <utility>
#include <vector>

#include "dsum/common.hpp"

namespace dsum {

struct Graph {
  int n = 0;
  int64_t m = 0;
  std::vector<std::vector<int>> adj;  // sorted neighbor lists, 1-based

  int deg(int v) const { return static_cast<int>(adj[v].size()); }
  bool adjacent(int u, int v) const;

  // Validates: ids in range, no self-loops, no parallel edges, connected.
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges);
};

bool is_connected(const Graph& g);

struct Tree {
  int root = 0;
  int depth = 0;
  std::vector<int> parent;   // 0 for root
  std::vector<int> level;    // level[root] = 0
  std::vector<int> subtree;  // subtree[root] = n
  std::vector<std::vector<int>> children;  // sorted by node id
};

// BFS tree with deterministic parents: parent(v) is the smallest-id neighbor
// of v at distance level(v)-1 from the root.
Tree bfs_tree(const Graph& g, int root);

// Exact all-pairs-BFS diameter.
int diameter(const Graph& g);

std::vector<int> bfs_distances(const Graph& g, int src);

struct GraphSpec {
  enum class Family {
    Clique,
    Path,
    Cycle,
    Star,
    RandomRegular,
    Dumbbell,
    Blackboard,
    File,
  };
  Family family = Family::Clique;
  int n = 1;          // clique / path / cycle / star / random-regular
  int d = 0;          // random-regular degree
  int side = 0;       // dumbbell clique size
  int bridge = 0;     // dumbbell bridge node count
  int parts = 0;      // blackboard part count
  int part_size = 0;  // blackboard part size
  std::string path;   // edge-list file
  uint64_t seed = 0;

  // "clique:16", "random-regular:64:8", "dumbbell:3:2", "blackboard:4:8",
  // "file:/path/to.edges"
  static GraphSpec parse(const std::string& text);
  std::string describe() const;
};

Graph generate(const GraphSpec& spec);

// Edge-list file format: header "n m", then one "u v" line per edge, 1-based.
Graph read_edge_list(const std::string& path);
void write_edge_list(const Graph& g, const std::string& path);

}  // namespace dsum
