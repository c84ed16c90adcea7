#pragma once
// Emulation of one GOSSIP(lambda) round in the CONGEST model: destination
// tokens split and spread over per-degree compartments (one-time setup),
// per-round source-token walks define the partner map, and messages travel by
// replaying the recorded walk paths.

#include <memory>
#include <vector>

#include "dsum/engines.hpp"
#include "dsum/graph.hpp"
#include "dsum/mixing.hpp"

namespace dsum {

struct WalkSpec {
  int start = 1;
  int steps = 0;
};

struct WalkOpts {
  bool record = true;    // keep node trajectories
  bool schedule = true;  // measure rounds under one-token-per-edge-direction
};

struct WalkOutcome {
  std::vector<int> end_node;
  std::vector<int> end_slot;  // compartment slot within the end node, 1-based
  std::vector<std::vector<int>> paths;
  std::vector<int64_t> finish_round;
  RoundStats stats;
};

// Lazy random walks in parallel. Trajectories are sampled independently of
// the schedule; scheduling only assigns rounds (FIFO per edge direction, one
// token-message per direction per round, stays are local).
WalkOutcome parallel_random_walks(const Graph& g,
                                  const std::vector<WalkSpec>& walks,
                                  uint64_t seed, WalkOpts opts = {});

// Schedules pre-recorded paths (consecutive entries adjacent or equal) under
// the same capacity rule; used for walk-backs and path replay.
RoundStats schedule_steps(const Graph& g,
                          const std::vector<std::vector<int>>& paths,
                          std::vector<int64_t>* finish_round = nullptr);

enum class EmuMode {
  Walks,  // real token walks, trajectories recorded, rounds measured
  Exact,  // distribution-exact endpoint sampling from precomputed walk rows
};

struct DestToken {
  int owner = 0;
  int mult = 1;
  int comp = -1;
  std::vector<int> path;  // contiguous trajectory from owner to comp
};

struct EmulationState {
  Graph g;
  double lambda = 0.0;
  double lambda_prime = 0.0;
  int tau = 0;          // exact mixing time
  int tau_distrib = 0;  // tau(0.1 / 2m), distribution-phase walks
  int tau_src = 0;      // tau(lambda'), source-token walks
  int dest_per_node = 0;
  uint64_t seed = 0;
  std::vector<int64_t> comp_offset;  // comp id = offset[v] + slot - 1
  std::vector<int> comp_token;       // comp -> token index, -1 if empty
  std::vector<DestToken> tokens;
  RoundStats setup_stats;

  // exact-mode endpoint law: per start node, cumulative distribution over
  // compartments after tau_src steps
  bool exact_ready = false;
  std::vector<std::vector<double>> comp_cdf;

  int64_t comp_count() const { return 2 * g.m; }
  int comp_node(int64_t comp) const;
  int64_t comp_of(int node, int slot) const {
    return comp_offset[size_t(node)] + slot - 1;
  }
};

// Step 1 (splitting + distributing). Requires m >= 4 and dest_per_node >= 1.
EmulationState emulate_setup(const Graph& g, double lambda, uint64_t seed);

struct PartnerDraw {
  std::vector<int> t;             // partner per node, 1..n
  std::vector<int> matched_token; // destination token index per node
  std::vector<std::vector<int>> src_paths;  // walk mode only
  RoundStats stats;               // measured (walks) or modeled (exact)
};

// Step 2, rerun per emulated round with fresh randomness.
PartnerDraw emulate_draw_partners(EmulationState& st, int64_t round_index,
                                  EmuMode mode);

struct EmulateRoundResult {
  std::vector<int> t;
  std::vector<std::vector<Delivery>> delivered;  // per node
  RoundStats stats;
};

// Steps 2 + 3: fresh partner draw, then PUSH payloads (and PULL responses)
// travel u -> mid(u) along the source walk and mid(u) -> t(u) along the
// matched destination token's reversed trajectory, capacity-scheduled.
EmulateRoundResult emulate_round(EmulationState& st,
                                 const std::vector<GossipAction>& requests,
                                 const std::vector<Message>& pull_responses,
                                 int64_t round_index, const BitBudget& budget);

// Builds the exact-mode endpoint tables up front (they are otherwise built
// lazily on the first exact draw; pre-building makes concurrent readers safe).
void prepare_exact_mode(EmulationState& st);

class EmulatedPartnerSource final : public PartnerSource {
 public:
  // `stream` separates the randomness of concurrent sources sharing a state.
  EmulatedPartnerSource(EmulationState& st, EmuMode mode, uint64_t stream = 0)
      : st_(&st), mode_(mode), stream_(stream) {}
  int64_t draw(int64_t round, std::vector<int>& t) override;
  int n() const override { return st_->g.n; }

 private:
  EmulationState* st_;
  EmuMode mode_;
  uint64_t stream_;
  int64_t next_ = 1;
};

}  // namespace dsum
