#include "dsum/emulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace dsum {

namespace {

std::vector<int64_t> comp_offsets(const Graph& g) {
  std::vector<int64_t> off(size_t(g.n) + 2, 0);
  for (int v = 1; v <= g.n; ++v) off[size_t(v) + 1] = off[size_t(v)] + g.deg(v);
  return off;
}

// One token-message per edge direction per round, FIFO; stays are local and
// also take one round per step.
struct StepScheduler {
  const Graph& g;
  std::vector<int64_t> dir_offset;
  std::vector<std::deque<std::pair<int64_t, int>>> queues;  // (enq_round, token)
  std::set<int64_t> nonempty;
  std::vector<std::vector<int>> stays_at;  // by round
  const std::vector<std::vector<int>>& paths;
  std::vector<size_t> ptr;
  std::vector<int64_t> finish;
  int64_t done = 0, crossings = 0, max_queue = 0;

  explicit StepScheduler(const Graph& gr,
                         const std::vector<std::vector<int>>& ps)
      : g(gr), paths(ps) {
    dir_offset = comp_offsets(g);
    queues.assign(size_t(2 * g.m), {});
    ptr.assign(paths.size(), 0);
    finish.assign(paths.size(), 0);
  }

  int64_t dir_of(int u, int w) const {
    const auto& a = g.adj[size_t(u)];
    size_t idx =
        size_t(std::lower_bound(a.begin(), a.end(), w) - a.begin());
    if (idx >= a.size() || a[idx] != w)
      throw SimError("path step is not an edge");
    return dir_offset[size_t(u)] + int64_t(idx);
  }

  void stage(int tok, int64_t round) {
    const auto& p = paths[size_t(tok)];
    if (ptr[size_t(tok)] + 1 >= p.size()) {
      finish[size_t(tok)] = round;
      ++done;
      return;
    }
    int cur = p[ptr[size_t(tok)]];
    int nxt = p[ptr[size_t(tok)] + 1];
    if (cur == nxt) {
      if (int64_t(stays_at.size()) <= round + 1)
        stays_at.resize(size_t(round) + 2);
      stays_at[size_t(round) + 1].push_back(tok);
    } else {
      int64_t d = dir_of(cur, nxt);
      auto& q = queues[size_t(d)];
      q.push_back({round, tok});
      max_queue = std::max<int64_t>(max_queue, int64_t(q.size()));
      nonempty.insert(d);
    }
  }

  RoundStats run() {
    RoundStats st;
    for (size_t i = 0; i < paths.size(); ++i) stage(int(i), 0);
    int64_t r = 0;
    std::vector<int64_t> served;
    while (done < int64_t(paths.size())) {
      ++r;
      if (r > int64_t(1) << 40) throw SimError("scheduler stalled");
      served.clear();
      for (int64_t d : nonempty) served.push_back(d);
      int64_t moved = 0;
      for (int64_t d : served) {
        auto& q = queues[size_t(d)];
        if (q.empty() || q.front().first >= r) continue;
        int tok = q.front().second;
        q.pop_front();
        if (q.empty()) nonempty.erase(d);
        ptr[size_t(tok)] += 1;
        ++crossings;
        ++moved;
        stage(tok, r);
      }
      if (int64_t(stays_at.size()) > r) {
        for (int tok : stays_at[size_t(r)]) {
          ptr[size_t(tok)] += 1;
          ++moved;
          stage(tok, r);
        }
        stays_at[size_t(r)].clear();
      }
      if (moved == 0 && done < int64_t(paths.size()))
        throw SimError("scheduler made no progress");
    }
    st.rounds = r;
    st.messages = crossings;
    st.max_edge_congestion = max_queue;
    return st;
  }
};

}  // namespace

RoundStats schedule_steps(const Graph& g,
                          const std::vector<std::vector<int>>& paths,
                          std::vector<int64_t>* finish_round) {
  for (const auto& p : paths)
    if (p.empty()) throw ConfigError("empty path in schedule");
  StepScheduler sched(g, paths);
  auto st = sched.run();
  if (finish_round) *finish_round = sched.finish;
  return st;
}

WalkOutcome parallel_random_walks(const Graph& g,
                                  const std::vector<WalkSpec>& walks,
                                  uint64_t seed, WalkOpts opts) {
  WalkOutcome out;
  size_t k = walks.size();
  out.end_node.assign(k, 0);
  out.end_slot.assign(k, 0);
  std::vector<std::vector<int>> paths(k);
  for (size_t i = 0; i < k; ++i) {
    const auto& w = walks[i];
    if (w.start < 1 || w.start > g.n) throw ConfigError("walk start out of range");
    if (w.steps < 0) throw ConfigError("walk steps must be >= 0");
    Rng rng(derive(seed, uint64_t(i), 0x3a1du));
    auto& p = paths[i];
    p.reserve(size_t(w.steps) + 1);
    p.push_back(w.start);
    int cur = w.start;
    for (int s = 0; s < w.steps; ++s) {
      if (!rng.coin())
        cur = g.adj[size_t(cur)][size_t(rng.below(g.deg(cur)))];
      p.push_back(cur);
    }
    out.end_node[i] = cur;
    out.end_slot[i] = 1 + int(rng.below(g.deg(cur)));
  }
  if (opts.schedule) out.stats = schedule_steps(g, paths, &out.finish_round);
  if (opts.record) out.paths = std::move(paths);
  return out;
}

int EmulationState::comp_node(int64_t comp) const {
  auto it = std::upper_bound(comp_offset.begin() + 1, comp_offset.end(), comp);
  return int(it - comp_offset.begin()) - 1;
}

EmulationState emulate_setup(const Graph& g, double lambda, uint64_t seed) {
  EmulationState st;
  st.g = g;
  st.lambda = lambda;
  st.seed = seed;
  if (g.m < 4) throw ConfigError("emulation needs m >= 4");
  st.dest_per_node = int((3 * g.m) / (2 * int64_t(g.n)));
  if (st.dest_per_node < 1)
    throw ConfigError("emulation needs floor(1.5m/n) >= 1");
  if (!(lambda > 0.0)) throw ConfigError("emulation needs lambda > 0");
  st.lambda_prime =
      std::min(lambda / (8.0 * double(g.m)), 0.1 / double(g.m));
  MixingProfile mp(st.g);
  st.tau = mp.tau_exact();
  st.tau_distrib = mp.tau_at(0.1 / (2.0 * double(g.m)));
  st.tau_src = mp.tau_at(st.lambda_prime);
  st.comp_offset = comp_offsets(g);
  st.comp_token.assign(size_t(st.comp_count()), -1);

  int64_t expected = int64_t(g.n) * st.dest_per_node;
  for (int v = 1; v <= g.n; ++v)
    st.tokens.push_back({v, st.dest_per_node, -1, {v}});

  // Splitting phase: halve multiplicities, then all tokens walk tau steps.
  int stages = ceil_log2(uint64_t(st.dest_per_node));
  for (int stage = 0; stage < stages; ++stage) {
    std::vector<DestToken> next;
    next.reserve(st.tokens.size() * 2);
    for (auto& tok : st.tokens) {
      if (tok.mult > 1) {
        DestToken hi = tok, lo = tok;
        hi.mult = (tok.mult + 1) / 2;
        lo.mult = tok.mult / 2;
        next.push_back(std::move(hi));
        next.push_back(std::move(lo));
      } else {
        next.push_back(std::move(tok));
      }
    }
    st.tokens = std::move(next);
    int64_t total = 0;
    for (const auto& tok : st.tokens) total += tok.mult;
    if (total != expected) throw SimError("token multiplicity not conserved");

    std::vector<WalkSpec> specs;
    for (const auto& tok : st.tokens)
      specs.push_back({tok.path.back(), st.tau});
    auto walk = parallel_random_walks(
        g, specs, derive(seed, 0x51e1u, uint64_t(stage)));
    st.setup_stats.absorb(walk.stats);
    for (size_t i = 0; i < st.tokens.size(); ++i)
      st.tokens[i].path.insert(st.tokens[i].path.end(),
                               walk.paths[i].begin() + 1,
                               walk.paths[i].end());
  }
  if (int64_t(st.tokens.size()) != expected)
    throw SimError("splitting did not reach multiplicity one");

  // Land every token in a compartment (0-step walk draws the slot when no
  // splitting walk happened).
  std::vector<int64_t> comp_of_token(st.tokens.size());
  std::vector<int64_t> arrive(st.tokens.size(), 0);
  {
    std::vector<WalkSpec> specs;
    for (const auto& tok : st.tokens) specs.push_back({tok.path.back(), 0});
    auto land =
        parallel_random_walks(g, specs, derive(seed, 0x1a2du), {true, false});
    for (size_t i = 0; i < st.tokens.size(); ++i)
      comp_of_token[i] = st.comp_of(land.end_node[i], land.end_slot[i]);
  }

  // Distributing phase: overfull compartments keep the earliest arrival and
  // launch the rest; a walker succeeds only if it lands alone in an
  // unoccupied compartment, otherwise it walks back and retries.
  std::vector<int> floating;
  {
    std::vector<std::vector<std::pair<int64_t, int>>> by_comp(
        size_t(st.comp_count()));
    for (size_t i = 0; i < st.tokens.size(); ++i)
      by_comp[size_t(comp_of_token[i])].push_back({arrive[i], int(i)});
    for (int64_t c = 0; c < st.comp_count(); ++c) {
      auto& lst = by_comp[size_t(c)];
      if (lst.empty()) continue;
      std::sort(lst.begin(), lst.end());
      st.comp_token[size_t(c)] = lst[0].second;
      st.tokens[size_t(lst[0].second)].comp = int(c);
      for (size_t i = 1; i < lst.size(); ++i) floating.push_back(lst[i].second);
    }
  }
  int64_t trial_cap = 50 * std::max(1, ceil_log2(uint64_t(g.n)));
  for (int64_t trial = 0; !floating.empty(); ++trial) {
    if (trial >= trial_cap)
      throw SimError("distribution phase exceeded its trial cap");
    std::vector<WalkSpec> specs;
    for (int tok : floating)
      specs.push_back({st.tokens[size_t(tok)].path.back(), st.tau_distrib});
    auto walk = parallel_random_walks(
        g, specs, derive(seed, 0xd157u, uint64_t(trial)));
    st.setup_stats.absorb(walk.stats);

    std::vector<int64_t> landing(floating.size());
    std::vector<int> landers(size_t(st.comp_count()), 0);
    for (size_t i = 0; i < floating.size(); ++i) {
      landing[i] = st.comp_of(walk.end_node[i], walk.end_slot[i]);
      landers[size_t(landing[i])] += 1;
    }
    std::vector<int> still;
    std::vector<std::vector<int>> walk_backs;
    for (size_t i = 0; i < floating.size(); ++i) {
      int tok = floating[i];
      auto& path = st.tokens[size_t(tok)].path;
      path.insert(path.end(), walk.paths[i].begin() + 1, walk.paths[i].end());
      bool ok = st.comp_token[size_t(landing[i])] < 0 &&
                landers[size_t(landing[i])] == 1;
      if (ok) {
        st.comp_token[size_t(landing[i])] = tok;
        st.tokens[size_t(tok)].comp = int(landing[i]);
      } else {
        // reversed segment keeps the trajectory contiguous for replay
        std::vector<int> back(walk.paths[i].rbegin(), walk.paths[i].rend());
        path.insert(path.end(), back.begin() + 1, back.end());
        walk_backs.push_back(std::move(back));
        still.push_back(tok);
      }
    }
    if (!walk_backs.empty())
      st.setup_stats.absorb(schedule_steps(g, walk_backs));
    floating = std::move(still);
  }

  int64_t placed = 0;
  for (int64_t c = 0; c < st.comp_count(); ++c) placed += st.comp_token[size_t(c)] >= 0;
  if (placed != expected)
    throw SimError("destination token placement incomplete");
  return st;
}

namespace {

void build_exact_tables(EmulationState& st) {

  if (st.exact_ready) return;
  const Graph& g = st.g;
  st.comp_cdf.assign(size_t(g.n) + 1, {});
  for (int w = 1; w <= g.n; ++w) {
    auto dist = walk_distribution(g, w, st.tau_src);
    auto& cdf = st.comp_cdf[size_t(w)];
    cdf.resize(size_t(st.comp_count()));
    double acc = 0.0;
    for (int v = 1; v <= g.n; ++v) {
      double per_slot = dist[size_t(v)] / double(g.deg(v));
      for (int s = 0; s < g.deg(v); ++s) {
        acc += per_slot;
        cdf[size_t(st.comp_of(v, s + 1))] = acc;
      }
    }
    cdf.back() = 1.0;
  }
  st.exact_ready = true;
}

}  // namespace

PartnerDraw emulate_draw_partners(EmulationState& st, int64_t round_index,
                                  EmuMode mode) {
  const Graph& g = st.g;
  PartnerDraw out;
  out.t.assign(size_t(g.n) + 1, 0);
  out.matched_token.assign(size_t(g.n) + 1, -1);
  int64_t trial_cap = 50 * std::max(1, ceil_log2(uint64_t(g.n)));

  if (mode == EmuMode::Exact) {
    build_exact_tables(st);
    int64_t max_attempts = 0;
    for (int u = 1; u <= g.n; ++u) {
      Rng rng(derive(st.seed, 0xe7acu, uint64_t(round_index), uint64_t(u)));
      int cur = u;
      int64_t attempts = 0;
      while (true) {
        if (++attempts > trial_cap)
          throw SimError("source token exceeded its trial cap");
        const auto& cdf = st.comp_cdf[size_t(cur)];
        double x = rng.real();
        int64_t comp =
            std::lower_bound(cdf.begin(), cdf.end(), x) - cdf.begin();
        if (comp >= st.comp_count()) comp = st.comp_count() - 1;
        int tok = st.comp_token[size_t(comp)];
        if (tok >= 0) {
          out.t[size_t(u)] = st.tokens[size_t(tok)].owner;
          out.matched_token[size_t(u)] = tok;
          break;
        }
        cur = st.comp_node(comp);
      }
      max_attempts = std::max(max_attempts, attempts);
    }
    // Modeled charge: the walks-mode scheduler measures real rounds; here we
    // charge walk length times the worst per-source attempt count.
    out.stats.rounds = max_attempts * int64_t(st.tau_src);
    out.stats.congest_rounds_charged = out.stats.rounds;
    return out;
  }

  out.src_paths.assign(size_t(g.n) + 1, {});
  for (int u = 1; u <= g.n; ++u) out.src_paths[size_t(u)] = {u};
  std::vector<int> active;
  for (int u = 1; u <= g.n; ++u) active.push_back(u);
  for (int64_t trial = 0; !active.empty(); ++trial) {
    if (trial >= trial_cap)
      throw SimError("source token exceeded its trial cap");
    std::vector<WalkSpec> specs;
    for (int u : active)
      specs.push_back({out.src_paths[size_t(u)].back(), st.tau_src});
    auto walk = parallel_random_walks(
        g, specs,
        derive(st.seed, 0x52c2u, uint64_t(round_index), uint64_t(trial)));
    out.stats.absorb(walk.stats);
    std::vector<int> still;
    for (size_t i = 0; i < active.size(); ++i) {
      int u = active[i];
      auto& path = out.src_paths[size_t(u)];
      path.insert(path.end(), walk.paths[i].begin() + 1, walk.paths[i].end());
      int64_t comp = st.comp_of(walk.end_node[i], walk.end_slot[i]);
      int tok = st.comp_token[size_t(comp)];
      if (tok >= 0) {
        out.t[size_t(u)] = st.tokens[size_t(tok)].owner;
        out.matched_token[size_t(u)] = tok;
      } else {
        still.push_back(u);
      }
    }
    active = std::move(still);
  }
  out.stats.congest_rounds_charged = out.stats.rounds;
  return out;
}

namespace {

// Drop stay steps; replayed messages only traverse edges.
std::vector<int> compress_path(const std::vector<int>& p) {
  std::vector<int> out;
  out.reserve(p.size());
  for (int v : p)
    if (out.empty() || out.back() != v) out.push_back(v);
  return out;
}

// u -> mid(u) along the source walk, then mid(u) -> t(u) along the matched
// destination token's trajectory reversed. The two join at mid(u).
std::vector<int> full_route(const EmulationState& st, const PartnerDraw& draw,
                            int u) {
  std::vector<int> path = draw.src_paths[size_t(u)];
  const auto& dest = st.tokens[size_t(draw.matched_token[size_t(u)])].path;
  if (path.back() != dest.back())
    throw SimError("source walk did not end at the matched compartment node");
  for (auto it = dest.rbegin() + 1; it != dest.rend(); ++it)
    path.push_back(*it);
  return path;
}

}  // namespace

EmulateRoundResult emulate_round(EmulationState& st,
                                 const std::vector<GossipAction>& requests,
                                 const std::vector<Message>& pull_responses,
                                 int64_t round_index, const BitBudget& budget) {
  const Graph& g = st.g;
  if (int(requests.size()) != g.n + 1)
    throw ConfigError("emulate_round needs one request slot per node");
  auto draw = emulate_draw_partners(st, round_index, EmuMode::Walks);
  EmulateRoundResult res;
  res.t = draw.t;
  res.stats.absorb(draw.stats);
  res.delivered.assign(size_t(g.n) + 1, {});

  // Forward pass: u -> mid(u) along the source walk, then mid(u) -> t(u)
  // along the destination token's trajectory reversed.
  std::vector<std::vector<int>> fwd;
  std::vector<int> fwd_owner;
  for (int u = 1; u <= g.n; ++u) {
    if (requests[size_t(u)].kind == GossipKind::Idle) continue;
    if (requests[size_t(u)].kind == GossipKind::Push &&
        requests[size_t(u)].payload.bits > budget.bits)
      throw ProtocolViolation("emulated payload over budget at node " +
                              std::to_string(u));
    fwd.push_back(compress_path(full_route(st, draw, u)));
    fwd_owner.push_back(u);
  }
  if (!fwd.empty()) res.stats.absorb(schedule_steps(g, fwd));

  std::vector<std::vector<int>> back;
  for (size_t i = 0; i < fwd.size(); ++i) {
    int u = fwd_owner[i];
    int partner = draw.t[size_t(u)];
    if (fwd[i].back() != partner)
      throw SimError("replayed path did not reach the partner");
    if (requests[size_t(u)].kind == GossipKind::Push) {
      res.delivered[size_t(partner)].push_back(
          {u, requests[size_t(u)].payload});
    } else {
      const Message& resp = pull_responses[size_t(partner)];
      if (resp.bits > budget.bits)
        throw ProtocolViolation("emulated pull response over budget");
      res.delivered[size_t(u)].push_back({partner, resp});
      back.push_back({fwd[i].rbegin(), fwd[i].rend()});
    }
  }
  if (!back.empty()) res.stats.absorb(schedule_steps(g, back));
  return res;
}

void prepare_exact_mode(EmulationState& st) { build_exact_tables(st); }

int64_t EmulatedPartnerSource::draw(int64_t, std::vector<int>& t) {
  int64_t tick = int64_t(derive(stream_, uint64_t(next_++)) >> 1);
  auto d = emulate_draw_partners(*st_, tick, mode_);
  t = std::move(d.t);
  return d.stats.congest_rounds_charged;
}

}  // namespace dsum
