#include "dsum/gossip.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "dsum/primitives.hpp"

namespace dsum {

namespace {

std::pair<int64_t, int64_t> split_u128(u128 x) {
  return {int64_t(x & 0xffffffffffffffffull), int64_t(x >> 64)};
}
u128 join_u128(int64_t lo, int64_t hi) {
  return (u128(uint64_t(hi)) << 64) | u128(uint64_t(lo));
}

struct PushSumProgram {
  int n;
  int64_t budget_rounds;
  const BitBudget& budget;
  std::vector<u128> s_num, w_num;
  int64_t seen = 0;

  PushSumProgram(int nn, int64_t rounds, const BitBudget& b,
                 const std::vector<int64_t>& local)
      : n(nn), budget_rounds(rounds), budget(b) {
    s_num.assign(size_t(n) + 1, 0);
    w_num.assign(size_t(n) + 1, 0);
    for (int v = 1; v <= n; ++v) {
      if (local[size_t(v)] < 0)
        throw ConfigError("push-sum expects nonnegative inputs");
      s_num[size_t(v)] = u128(uint64_t(local[size_t(v)]));
      w_num[size_t(v)] = 1;
    }
  }

  GossipAction act(int v, int64_t r, Rng&) {
    seen = std::max(seen, r);
    // mass at round r-1 is num * 2^-(r-1); on the 2^-r grid it is 2*num,
    // split into equal halves of num each: keep one, push one.
    if ((s_num[size_t(v)] >> 120) != 0 || (w_num[size_t(v)] >> 120) != 0)
      throw SimError("push-sum mass numerator overflow");
    GossipAction a;
    a.kind = GossipKind::Push;
    auto [slo, shi] = split_u128(s_num[size_t(v)]);
    auto [wlo, whi] = split_u128(w_num[size_t(v)]);
    a.payload.add_word(slo, budget).add_word(shi, budget);
    a.payload.add_word(wlo, budget).add_word(whi, budget);
    return a;
  }

  Message pull_response(int, int64_t) { return Message{}; }

  void receive(int v, int64_t, std::span<const Delivery> got, Rng&) {
    for (const auto& d : got) {
      s_num[size_t(v)] += join_u128(d.msg.f[0], d.msg.f[1]);
      w_num[size_t(v)] += join_u128(d.msg.f[2], d.msg.f[3]);
    }
  }

  bool finished() const { return seen >= budget_rounds; }
};

}  // namespace

int64_t push_sum_round_budget(int n, int64_t max_sum, const Constants& c) {
  int64_t b =
      int64_t(c.c_push) * ceil_log2(uint64_t(n)) +
      ceil_log2(8ull * uint64_t(n) * uint64_t(std::max<int64_t>(max_sum, 1)));
  return std::max<int64_t>(b, 8);
}

PushSumResult push_sum(PartnerSource& partners,
                       const std::vector<int64_t>& local, int64_t rounds,
                       uint64_t seed, const Constants& c,
                       int64_t value_domain) {
  int n = partners.n();
  BitBudget budget = BitBudget::make(n, value_domain, c.c0);
  PushSumProgram prog(n, rounds, budget, local);
  PushSumResult res;
  res.stats = run_gossip(partners, prog, seed, rounds + 1, budget);
  res.rounds = rounds;
  res.estimate.assign(size_t(n) + 1, 0.0);
  for (int v = 1; v <= n; ++v)
    res.estimate[size_t(v)] =
        double(n) * double((long double)(prog.s_num[size_t(v)]) /
                           (long double)(prog.w_num[size_t(v)]));
  res.s_num = std::move(prog.s_num);
  res.w_num = std::move(prog.w_num);
  return res;
}

CountResult gossip_count(PartnerSource& partners,
                         const std::vector<int64_t>& indicator, uint64_t seed,
                         const Constants& c, int64_t value_domain) {
  int n = partners.n();
  int64_t rounds = push_sum_round_budget(n, n, c);
  auto ps = push_sum(partners, indicator, rounds, seed, c, value_domain);
  CountResult res;
  res.stats = std::move(ps.stats);
  res.count = llround(ps.estimate[1]);
  for (int v = 1; v <= n; ++v)
    if (llround(ps.estimate[size_t(v)]) != res.count)
      throw SimError("push-sum count did not converge to agreement");
  return res;
}

// ---- duplication ------------------------------------------------------------

namespace {

struct DupToken {
  int64_t value;
  int64_t mult;
};

// Splitting-phase stage: every node drains its outbox one push per round.
struct ScatterProgram {
  int n;
  const BitBudget& budget;
  int64_t value_domain, mult_domain;
  std::vector<std::deque<DupToken>> outbox;
  std::vector<std::vector<DupToken>> buffer;

  ScatterProgram(int nn, const BitBudget& b, int64_t vd, int64_t md)
      : n(nn), budget(b), value_domain(vd), mult_domain(md) {
    outbox.assign(size_t(n) + 1, {});
    buffer.assign(size_t(n) + 1, {});
  }

  GossipAction act(int v, int64_t, Rng&) {
    GossipAction a;
    if (outbox[size_t(v)].empty()) return a;
    DupToken tok = outbox[size_t(v)].front();
    outbox[size_t(v)].pop_front();
    a.kind = GossipKind::Push;
    a.payload.add(tok.value, uint64_t(value_domain) + 1)
        .add(tok.mult, uint64_t(mult_domain) + 1);
    return a;
  }

  Message pull_response(int, int64_t) { return Message{}; }

  void receive(int v, int64_t, std::span<const Delivery> got, Rng&) {
    for (const auto& d : got)
      buffer[size_t(v)].push_back({d.msg.f[0], d.msg.f[1]});
  }

  bool finished() const {
    for (int v = 1; v <= n; ++v)
      if (!outbox[size_t(v)].empty()) return false;
    return true;
  }
};

// Distributing phase: floating tokens re-scatter until each lands alone at an
// unclaimed node (sole arrival of its round).
struct SettleProgram {
  int n;
  const BitBudget& budget;
  int64_t value_domain;
  std::vector<std::deque<int64_t>> floating;  // token values
  std::vector<int64_t> settled;               // 0 = unclaimed

  SettleProgram(int nn, const BitBudget& b, int64_t vd)
      : n(nn), budget(b), value_domain(vd) {
    floating.assign(size_t(n) + 1, {});
    settled.assign(size_t(n) + 1, 0);
  }

  GossipAction act(int v, int64_t, Rng&) {
    GossipAction a;
    if (floating[size_t(v)].empty()) return a;
    int64_t value = floating[size_t(v)].front();
    floating[size_t(v)].pop_front();
    a.kind = GossipKind::Push;
    a.payload.add(value, uint64_t(value_domain) + 1);
    return a;
  }

  Message pull_response(int, int64_t) { return Message{}; }

  void receive(int v, int64_t, std::span<const Delivery> got, Rng&) {
    if (settled[size_t(v)] == 0 && got.size() == 1) {
      settled[size_t(v)] = got[0].msg.f[0];
      return;
    }
    for (const auto& d : got) floating[size_t(v)].push_back(d.msg.f[0]);
  }

  bool finished() const {
    for (int v = 1; v <= n; ++v)
      if (!floating[size_t(v)].empty()) return false;
    return true;
  }
};

}  // namespace

DuplicationResult preprocess_duplicate(const ValueAssignment& a,
                                       PartnerSource& partners, uint64_t seed,
                                       const Constants& c) {
  a.validate();
  int n = a.n;
  if (partners.n() != n) throw ConfigError("partner source size mismatch");
  DuplicationResult res;
  res.assignment = a;

  std::vector<int64_t> ind(size_t(n) + 1, 0);
  for (int v = 1; v <= n; ++v) ind[size_t(v)] = a.is_null(v) ? 0 : 1;
  auto zc = gossip_count(partners, ind, derive(seed, 0x2du), c, a.N);
  res.z = zc.count;
  res.stats.absorb(zc.stats);
  if (res.z == 0) throw ConfigError("duplication needs a non-empty node");
  if (3 * res.z >= n) {
    res.dup_factor = 1;
    res.applied = false;
    return res;
  }
  res.dup_factor = (n + 3 * res.z - 1) / (3 * res.z);
  int64_t expected_tokens = res.z * res.dup_factor;

  BitBudget budget = BitBudget::make(n, a.N, c.c0);
  int logn = std::max(1, ceil_log2(uint64_t(n)));
  int64_t stage_cap = 50LL * logn * logn;

  // Splitting: each original holder forms (value, dup_factor) and goes empty;
  // stages halve multiplicities and scatter both halves to random nodes.
  ScatterProgram scatter(n, budget, a.N, res.dup_factor);
  for (int v = 1; v <= n; ++v)
    if (!a.is_null(v))
      scatter.buffer[size_t(v)].push_back({a.val[size_t(v)], res.dup_factor});

  int64_t stage = 0;
  while (true) {
    bool any_multi = false;
    for (int v = 1; v <= n; ++v) {
      auto& buf = scatter.buffer[size_t(v)];
      std::vector<DupToken> keep;
      for (const auto& tok : buf) {
        if (tok.mult > 1) {
          any_multi = true;
          scatter.outbox[size_t(v)].push_back({tok.value, (tok.mult + 1) / 2});
          scatter.outbox[size_t(v)].push_back({tok.value, tok.mult / 2});
        } else {
          keep.push_back(tok);
        }
      }
      buf = std::move(keep);
    }
    if (!any_multi) break;
    if (++stage > stage_cap)
      throw SimError("duplication splitting exceeded its stage cap");
    res.stats.absorb(run_gossip(partners, scatter,
                                derive(seed, 0x5c1u, uint64_t(stage)),
                                stage_cap, budget));
    if (!scatter.finished())
      throw SimError("duplication splitting exceeded its round cap");
  }

  SettleProgram settle(n, budget, a.N);
  int64_t tokens = 0;
  for (int v = 1; v <= n; ++v) {
    auto& buf = scatter.buffer[size_t(v)];
    tokens += int64_t(buf.size());
    if (settle.settled[size_t(v)] == 0 && buf.size() == 1) {
      settle.settled[size_t(v)] = buf[0].value;
    } else {
      for (const auto& tok : buf)
        settle.floating[size_t(v)].push_back(tok.value);
    }
  }
  if (tokens != expected_tokens)
    throw SimError("duplication lost or duplicated tokens");
  res.stats.absorb(
      run_gossip(partners, settle, derive(seed, 0xd15u), stage_cap, budget));
  if (!settle.finished())
    throw SimError("duplication distributing exceeded its round cap");

  auto out = ValueAssignment::empty(n, a.N);
  int64_t placed = 0;
  for (int v = 1; v <= n; ++v) {
    out.val[size_t(v)] = settle.settled[size_t(v)];
    placed += settle.settled[size_t(v)] != 0;
  }
  if (placed != expected_tokens)
    throw SimError("duplication produced the wrong non-empty count");
  res.assignment = std::move(out);
  res.applied = true;
  return res;
}

// ---- samplers ---------------------------------------------------------------

namespace {

// Push rumor spreading of small word tuples, per-node lexicographic-min merge.
struct DiffusionProgram {
  int n;
  const BitBudget& budget;
  int64_t rounds;
  std::vector<uint64_t> ranges;            // per field, value range
  std::vector<std::vector<int64_t>> best;  // lexicographic min; empty = none
  int64_t seen = 0;

  DiffusionProgram(int nn, const BitBudget& b, int64_t r,
                   std::vector<uint64_t> rg)
      : n(nn), budget(b), rounds(r), ranges(std::move(rg)) {
    best.assign(size_t(n) + 1, {});
  }

  void offer(int v, const std::vector<int64_t>& cand) {
    auto& b = best[size_t(v)];
    if (b.empty() || cand < b) b = cand;
  }

  void offer_fields(int v, const int64_t* f, int nf) {
    auto& b = best[size_t(v)];
    if (!b.empty()) {
      bool less = false;
      for (int i = 0; i < nf; ++i) {
        if (f[i] != b[size_t(i)]) {
          less = f[i] < b[size_t(i)];
          break;
        }
      }
      if (!less) return;
    }
    b.assign(f, f + nf);
  }

  GossipAction act(int v, int64_t r, Rng&) {
    seen = std::max(seen, r);
    GossipAction a;
    const auto& b = best[size_t(v)];
    if (b.empty()) return a;
    a.kind = GossipKind::Push;
    for (size_t i = 0; i < b.size(); ++i) a.payload.add(b[i], ranges[i] + 1);
    return a;
  }

  Message pull_response(int, int64_t) { return Message{}; }

  void receive(int v, int64_t, std::span<const Delivery> got, Rng&) {
    for (const auto& d : got) offer_fields(v, d.msg.f, d.msg.nf);
  }

  bool finished() const { return seen >= rounds; }
};

// One sampler attempt: p pull rounds collecting partner values.
struct PollProgram {
  const ValueAssignment& a;
  const BitBudget& budget;
  int p;
  std::vector<std::vector<int64_t>> got_vals;
  int64_t seen = 0;

  PollProgram(const ValueAssignment& aa, const BitBudget& b, int pp)
      : a(aa), budget(b), p(pp) {
    got_vals.assign(size_t(a.n) + 1, {});
  }

  GossipAction act(int, int64_t r, Rng&) {
    seen = std::max(seen, r);
    GossipAction act;
    act.kind = GossipKind::Pull;
    return act;
  }

  Message pull_response(int v, int64_t) {
    Message m;
    m.add(a.val[size_t(v)], uint64_t(a.N) + 1);
    return m;
  }

  void receive(int v, int64_t, std::span<const Delivery> got, Rng&) {
    for (const auto& d : got) got_vals[size_t(v)].push_back(d.msg.f[0]);
  }

  bool finished() const { return seen >= p; }

  bool success(int v) const {
    const auto& g = got_vals[size_t(v)];
    if (int(g.size()) != p) return false;
    for (int64_t x : g)
      if (x == kNullValue || x != g[0]) return false;
    return true;
  }
};

int64_t diffusion_rounds(int n, const Constants& c) {
  // additive tail keeps the miss probability negligible at very small n
  return int64_t(c.c_diff) * std::max(1, ceil_log2(uint64_t(n))) + 12;
}

}  // namespace

SampleResult l0_sample(const ValueAssignment& a, PartnerSource& partners,
                       uint64_t seed, const Constants& c) {
  a.validate();
  int n = a.n;
  if (exact_stats(a).z == 0) throw ConfigError("l0_sample on all-NULL input");
  BitBudget budget = BitBudget::make(n, a.N, c.c0);
  int64_t d_rounds = diffusion_rounds(n, c);
  SampleResult res;

  // Min-ID node draws the pairwise hash and rumor-spreads its description.
  Rng hrng(derive(seed, 0x10u));
  HashFn h = HashFn::pairwise(a.N, hrng);
  DiffusionProgram spread(n, budget, d_rounds,
                          {uint64_t(h.mod), uint64_t(h.mod)});
  spread.offer(1, {h.coef[1], h.coef[0]});
  res.stats.absorb(
      run_gossip(partners, spread, derive(seed, 0x11u), d_rounds + 1, budget));
  for (int v = 1; v <= n; ++v)
    if (spread.best[size_t(v)].empty())
      throw SimError("hash rumor did not reach every node");

  DiffusionProgram mind(n, budget, d_rounds, {uint64_t(h.mod), uint64_t(a.N)});
  for (int v = 1; v <= n; ++v)
    if (!a.is_null(v)) mind.offer(v, {h(a.val[size_t(v)]), a.val[size_t(v)]});
  res.stats.absorb(
      run_gossip(partners, mind, derive(seed, 0x12u), d_rounds + 1, budget));
  const auto& best = mind.best[1];
  if (best.empty()) throw SimError("min diffusion did not reach node 1");
  for (int v = 1; v <= n; ++v)
    if (mind.best[size_t(v)] != best)
      throw SimError("min diffusion did not reach agreement");
  res.value = best[1];
  res.attempts = 1;
  return res;
}

SampleResult lp_sample(const ValueAssignment& a, int p, PartnerSource& partners,
                       uint64_t seed, const Constants& c) {
  a.validate();
  if (p < 1) throw ConfigError("lp_sample needs p >= 1");
  int n = a.n;
  BitBudget budget = BitBudget::make(n, a.N, c.c0);
  int64_t d_rounds = diffusion_rounds(n, c);
  int64_t cap = 50LL * std::max(1, ceil_log2(uint64_t(n)));
  SampleResult res;
  for (int64_t attempt = 1; attempt <= cap; ++attempt) {
    PollProgram poll(a, budget, p);
    res.stats.absorb(run_gossip(partners, poll,
                                derive(seed, 0x99u, uint64_t(attempt)),
                                int64_t(p) + 1, budget));
    DiffusionProgram win(n, budget, d_rounds, {uint64_t(n), uint64_t(a.N)});
    bool any = false;
    for (int v = 1; v <= n; ++v) {
      if (poll.success(v)) {
        win.offer(v, {v, poll.got_vals[size_t(v)][0]});
        any = true;
      }
    }
    // symmetry-breaking diffusion runs whether or not anyone succeeded
    res.stats.absorb(run_gossip(partners, win,
                                derive(seed, 0x9au, uint64_t(attempt)),
                                d_rounds + 1, budget));
    if (any) {
      const auto& best = win.best[1];
      if (best.empty()) throw SimError("winner diffusion missed node 1");
      for (int v = 1; v <= n; ++v)
        if (win.best[size_t(v)] != best)
          throw SimError("winner diffusion did not reach agreement");
      res.value = best[1];
      res.attempts = attempt;
      return res;
    }
  }
  throw SimError("lp_sample exceeded its attempt cap");
}

// ---- moment estimators ------------------------------------------------------

namespace {

struct FkProgram {
  const ValueAssignment& a;
  const BitBudget& budget;
  int k;
  int64_t phases;
  std::vector<int64_t> acc;
  std::vector<std::vector<int64_t>> cur;
  int64_t seen = 0;

  FkProgram(const ValueAssignment& aa, const BitBudget& b, int kk, int64_t ph)
      : a(aa), budget(b), k(kk), phases(ph) {
    acc.assign(size_t(a.n) + 1, 0);
    cur.assign(size_t(a.n) + 1, {});
  }

  GossipAction act(int v, int64_t r, Rng&) {
    seen = std::max(seen, r);
    GossipAction act;
    if (a.is_null(v)) return act;  // empty nodes only serve pulls
    act.kind = GossipKind::Pull;
    return act;
  }

  Message pull_response(int v, int64_t) {
    Message m;
    m.add(a.val[size_t(v)], uint64_t(a.N) + 1);
    return m;
  }

  void receive(int v, int64_t r, std::span<const Delivery> got, Rng&) {
    for (const auto& d : got) cur[size_t(v)].push_back(d.msg.f[0]);
    if (r % (k - 1) == 0) {  // phase boundary
      bool ok = int(cur[size_t(v)].size()) == k - 1;
      for (int64_t x : cur[size_t(v)])
        if (x != a.val[size_t(v)]) ok = false;
      if (ok) acc[size_t(v)] += 1;
      cur[size_t(v)].clear();
    }
  }

  bool finished() const { return seen >= phases * (k - 1); }
};

}  // namespace

FkResult fk_estimate(const ValueAssignment& a, int k, double eps,
                     PartnerSource& partners, uint64_t seed,
                     const Constants& c) {
  a.validate();
  if (k < 2) throw ConfigError("fk_estimate needs k >= 2");
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must be in (0, 1]");
  int n = a.n;
  int64_t phases = int64_t(std::ceil(double(c.c_fk) / (eps * eps) *
                                     std::max(1, ceil_log2(uint64_t(n)))));
  BitBudget budget = BitBudget::make(n, a.N, c.c0);
  FkResult res;
  res.phases = phases;
  FkProgram prog(a, budget, k, phases);
  res.stats = run_gossip(partners, prog, derive(seed, 0xFCu),
                         phases * int64_t(k - 1) + 1, budget);

  auto ps_rounds = push_sum_round_budget(n, int64_t(n) * phases, c);
  auto ps = push_sum(partners, prog.acc, ps_rounds, derive(seed, 0xFDu), c,
                     a.N);
  res.stats.absorb(ps.stats);
  res.success_total = llround(ps.estimate[1]);
  for (int v = 2; v <= n; ++v)
    if (llround(ps.estimate[size_t(v)]) != res.success_total)
      throw SimError("success-count push-sum did not reach agreement");
  double scale = 1.0;
  for (int i = 0; i < k - 1; ++i) scale *= double(n);
  res.fk = scale * double(res.success_total) / double(phases);
  return res;
}

EstimatorDraw fp_estimator_draw(const ValueAssignment& a, int k,
                                PartnerSource& partners, uint64_t seed,
                                const Constants& c) {
  EstimatorDraw d;
  auto samp = lp_sample(a, k, partners, seed, c);
  d.sampled_value = samp.value;
  d.stats.absorb(samp.stats);
  std::vector<int64_t> ind(size_t(a.n) + 1, 0);
  for (int v = 1; v <= a.n; ++v)
    ind[size_t(v)] = a.val[size_t(v)] == samp.value ? 1 : 0;
  auto fc = gossip_count(partners, ind, derive(seed, 0xFEu), c, a.N);
  d.frequency = fc.count;
  d.stats.absorb(fc.stats);
  if (d.frequency < 1) throw SimError("sampled value counted to zero");
  return d;
}

FpResult fp_estimate(const ValueAssignment& a, int p, int k, double eps,
                     PartnerSource& partners, uint64_t seed,
                     const Constants& c) {
  a.validate();
  if (k < 2 || k > p) throw ConfigError("fp_estimate needs 2 <= k <= p");
  int n = a.n;
  FpResult res;

  auto dup = preprocess_duplicate(a, partners, derive(seed, 1), c);
  res.dup_factor = dup.dup_factor;
  res.stats.absorb(dup.stats);
  const ValueAssignment& work = dup.assignment;

  auto fk = fk_estimate(work, k, eps, partners, derive(seed, 2), c);
  res.fk = fk.fk;
  res.stats.absorb(fk.stats);

  int64_t reps = int64_t(std::ceil(double(c.c_est) *
                                   std::pow(double(n), 1.0 - double(k) / p) /
                                   (eps * eps)));
  res.estimators = reps;
  int groups = std::max(1, ceil_log2(uint64_t(n)));
  std::vector<double> sums(size_t(groups), 0.0);
  std::vector<int64_t> sizes(size_t(groups), 0);
  for (int64_t r = 0; r < reps; ++r) {
    auto draw =
        fp_estimator_draw(work, k, partners, derive(seed, 3, uint64_t(r)), c);
    res.stats.absorb(draw.stats);
    double z = fk.fk * std::pow(double(draw.frequency), double(p - k));
    sums[size_t(r % groups)] += z;
    sizes[size_t(r % groups)] += 1;
  }
  std::vector<double> means;
  for (int gi = 0; gi < groups; ++gi)
    if (sizes[size_t(gi)] > 0)
      means.push_back(sums[size_t(gi)] / double(sizes[size_t(gi)]));
  std::sort(means.begin(), means.end());
  double med =
      means.size() % 2 == 1
          ? means[means.size() / 2]
          : 0.5 * (means[means.size() / 2 - 1] + means[means.size() / 2]);
  double rescale = std::pow(double(res.dup_factor), double(p));
  res.fp = med / rescale;
  return res;
}

}  // namespace dsum
