#include "dsum/mixing.hpp"

#include <cmath>

namespace dsum {

void lazy_step(const Graph& g, const std::vector<double>& cur,
               std::vector<double>& next) {
  next.assign(g.n + 1, 0.0);
  for (int u = 1; u <= g.n; ++u) {
    double mass = cur[u];
    if (mass == 0.0) continue;
    next[u] += 0.5 * mass;
    double share = 0.5 * mass / double(g.deg(u));
    for (int w : g.adj[u]) next[w] += share;
  }
}

std::vector<double> walk_distribution(const Graph& g, int start, int t) {
  std::vector<double> cur(g.n + 1, 0.0), next;
  cur[start] = 1.0;
  for (int i = 0; i < t; ++i) {
    lazy_step(g, cur, next);
    cur.swap(next);
  }
  return cur;
}

namespace {

// Iterates all start rows simultaneously; returns the first t at which
// |row_u(v) - pi(v)| <= bound(v) holds everywhere. bound(v) is pi(v)/n for
// the exact variant and a flat lambda otherwise.
int first_time_within(const Graph& g, const std::vector<double>& bound) {
  int n = g.n;
  if (n == 1) return 0;
  std::vector<double> pi(n + 1, 0.0);
  for (int v = 1; v <= n; ++v) pi[v] = double(g.deg(v)) / double(2 * g.m);
  // rows[u-1] is the distribution of the walk started at u.
  std::vector<std::vector<double>> rows(n), scratch(n);
  for (int u = 1; u <= n; ++u) {
    rows[u - 1].assign(n + 1, 0.0);
    rows[u - 1][u] = 1.0;
  }
  const int64_t max_t = 64LL * int64_t(n) * int64_t(n) + 65536;
  for (int64_t t = 1; t <= max_t; ++t) {
    bool ok = true;
    for (int u = 1; u <= n; ++u) {
      lazy_step(g, rows[u - 1], scratch[u - 1]);
      rows[u - 1].swap(scratch[u - 1]);
    }
    for (int u = 1; u <= n && ok; ++u) {
      const auto& row = rows[u - 1];
      for (int v = 1; v <= n; ++v) {
        if (std::fabs(row[v] - pi[v]) > bound[v]) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return static_cast<int>(t);
  }
  throw SimError("mixing time iteration exceeded safety cap");
}

}  // namespace

int mixing_time_exact(const Graph& g) {
  if (g.n == 1) return 0;
  std::vector<double> bound(g.n + 1, 0.0);
  for (int v = 1; v <= g.n; ++v)
    bound[v] = double(g.deg(v)) / (2.0 * double(g.m) * double(g.n));
  return first_time_within(g, bound);
}

int mixing_time_at(const Graph& g, double lambda) {
  if (g.n == 1) return 0;
  if (lambda <= 0) throw ConfigError("mixing threshold must be positive");
  std::vector<double> bound(g.n + 1, lambda);
  return first_time_within(g, bound);
}

int MixingProfile::tau_exact() {
  if (tau_exact_ < 0) tau_exact_ = mixing_time_exact(g_);
  return tau_exact_;
}

int MixingProfile::tau_at(double lambda) {
  auto it = tau_at_.find(lambda);
  if (it != tau_at_.end()) return it->second;
  int t = mixing_time_at(g_, lambda);
  tau_at_[lambda] = t;
  return t;
}

}  // namespace dsum
