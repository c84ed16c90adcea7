#pragma once
// Lazy-random-walk distributions and mixing times by dense power iteration.

#include <map>
#include <vector>

#include "dsum/graph.hpp"

namespace dsum {

// One lazy-walk step: stay with probability 1/2, else uniform neighbor.
// `cur` and `next` are (n+1)-sized distributions over nodes.
void lazy_step(const Graph& g, const std::vector<double>& cur,
               std::vector<double>& next);

// Distribution after t lazy steps from `start`.
std::vector<double> walk_distribution(const Graph& g, int start, int t);

// Smallest t with |P^t_u(v) - deg(v)/2m| <= deg(v)/(2mn) for all u, v.
int mixing_time_exact(const Graph& g);

// Smallest t with |P^t_u(v) - deg(v)/2m| <= lambda for all u, v.
int mixing_time_at(const Graph& g, double lambda);

// Caches tau values per graph. Holds a reference; the graph must outlive it.
class MixingProfile {
 public:
  explicit MixingProfile(const Graph& g) : g_(g) {}

  int tau_exact();
  int tau_at(double lambda);
  std::vector<double> distribution(int start, int t) const {
    return walk_distribution(g_, start, t);
  }
  const Graph& graph() const { return g_; }

 private:
  const Graph& g_;
  int tau_exact_ = -1;
  std::map<double, int> tau_at_;
};

}  // namespace dsum
