#pragma once
// Round-synchronous execution environments.
//
// CONGEST: one bit-budgeted message per edge per direction per round. Messages
// sent in round r are delivered at the start of round r+1. A node may halt; a
// halted node is woken by message arrival. The run ends when every node is
// halted and no messages are in flight, or at the round cap.
//
// GOSSIP(lambda): each round every node u samples a partner t(u) from a
// PartnerSource and either PUSHes one payload to t(u) or PULLs t(u)'s declared
// pull-response of the same round. Actions are collected first, then all
// deliveries of the round are handed to receive().

#include <span>
#include <vector>

#include "dsum/common.hpp"
#include "dsum/graph.hpp"

namespace dsum {

// Payloads are short field tuples; bit accounting follows the declared field
// ranges, not the in-memory representation.
struct Message {
  static constexpr int kMaxFields = 6;
  int64_t f[kMaxFields] = {0, 0, 0, 0, 0, 0};
  int8_t nf = 0;
  int16_t bits = 0;

  Message& add(int64_t v, uint64_t range) {
    if (nf == kMaxFields) throw SimError("message field capacity exceeded");
    f[nf++] = v;
    bits = int16_t(bits + ceil_log2(range));
    return *this;
  }
  Message& add_word(int64_t v, const BitBudget& b) {
    if (nf == kMaxFields) throw SimError("message field capacity exceeded");
    f[nf++] = v;
    bits = int16_t(bits + b.word_bits);
    return *this;
  }
  // Real-valued fields are costed at two payload words (value quantized to
  // 1/poly(n) precision); stored losslessly for the simulation.
  Message& add_real(double v, const BitBudget& b) {
    if (nf == kMaxFields) throw SimError("message field capacity exceeded");
    int64_t raw;
    static_assert(sizeof(raw) == sizeof(v));
    __builtin_memcpy(&raw, &v, sizeof(raw));
    f[nf++] = raw;
    bits = int16_t(bits + 2 * b.word_bits);
    return *this;
  }
  double real(int i) const {
    double v;
    __builtin_memcpy(&v, &f[i], sizeof(v));
    return v;
  }
};

struct Delivery {
  int from = 0;
  Message msg;
};

struct RoundStats {
  int64_t rounds = 0;
  int64_t messages = 0;
  int64_t max_edge_congestion = 0;
  int64_t congest_rounds_charged = 0;  // emulated gossip only
  std::vector<int64_t> per_round_messages;

  // Sequential composition of two measured segments.
  void absorb(const RoundStats& o) {
    rounds += o.rounds;
    messages += o.messages;
    max_edge_congestion = std::max(max_edge_congestion, o.max_edge_congestion);
    congest_rounds_charged += o.congest_rounds_charged;
    per_round_messages.insert(per_round_messages.end(),
                              o.per_round_messages.begin(),
                              o.per_round_messages.end());
  }
};

struct CongestOpts {
  bool track_per_round = true;
};

namespace detail {
struct CongestRound;
}

// Send handle passed to CONGEST programs; enforces adjacency, the bit budget
// and the one-message-per-edge-direction rule.
class Sender {
 public:
  void operator()(int to, const Message& m) const;

  detail::CongestRound* rd = nullptr;
  int from = 0;
};

namespace detail {
struct CongestRound {
  const Graph* g;
  const BitBudget* budget;
  std::vector<std::vector<Delivery>>* next;
  std::vector<int> sent_to;  // neighbors used by the current node this round
  int64_t round = 0;
  int64_t sent = 0;
  void do_send(int from, int to, const Message& m);
};
}  // namespace detail

// Program concept:
//   bool on_round(int v, int64_t round, std::span<const Delivery> inbox,
//                 Rng& rng, const Sender& send);   // true = halt
template <class P>
RoundStats run_congest(const Graph& g, P& prog, uint64_t seed,
                       int64_t round_cap, const BitBudget& budget,
                       CongestOpts opts = {}) {
  const int n = g.n;
  std::vector<std::vector<Delivery>> inbox(size_t(n) + 1),
      next(size_t(n) + 1);
  std::vector<char> halted(size_t(n) + 1, 0);
  RoundStats st;
  detail::CongestRound rd;
  rd.g = &g;
  rd.budget = &budget;
  rd.next = &next;
  int64_t last_active = 0, executed = 0;
  for (int64_t r = 1; r <= round_cap; ++r) {
    rd.round = r;
    rd.sent = 0;
    bool all_halted = true;
    for (int v = 1; v <= n; ++v) {
      if (halted[v] && inbox[v].empty()) continue;
      Rng rng(derive(seed, uint64_t(v), uint64_t(r)));
      Sender send;
      send.rd = &rd;
      send.from = v;
      rd.sent_to.clear();
      bool h = prog.on_round(v, r, std::span<const Delivery>(inbox[v]), rng,
                             send);
      halted[v] = h ? 1 : 0;
      if (!h) all_halted = false;
    }
    executed = r;
    st.messages += rd.sent;
    if (opts.track_per_round) st.per_round_messages.push_back(rd.sent);
    st.max_edge_congestion = std::max<int64_t>(st.max_edge_congestion,
                                               rd.sent > 0 ? 1 : 0);
    if (rd.sent > 0) last_active = r;
    for (int v = 1; v <= n; ++v) inbox[v].clear();
    inbox.swap(next);
    if (all_halted && rd.sent == 0) break;
  }
  // Communication rounds: the final wake-up round that only observes the last
  // deliveries is not counted. A run that never sends still costs one round.
  st.rounds = last_active > 0 ? last_active : std::min<int64_t>(executed, 1);
  return st;
}

enum class GossipKind { Idle, Push, Pull };

struct GossipAction {
  GossipKind kind = GossipKind::Idle;
  Message payload;  // push payload
};

// Per-round partner map supplier. draw() fills t[1..n] and returns the
// CONGEST rounds charged for producing this round's map (0 for the ideal
// source). Sources are stateful: every draw consumes fresh randomness, so
// sequential engine runs over one source never repeat partner maps.
class PartnerSource {
 public:
  virtual ~PartnerSource() = default;
  virtual int64_t draw(int64_t round, std::vector<int>& t) = 0;
  virtual int n() const = 0;
};

// t(u) uniform on [1, n] (self included), independent across nodes and rounds.
class IdealPartnerSource final : public PartnerSource {
 public:
  IdealPartnerSource(int n, uint64_t seed) : n_(n), seed_(seed) {}
  int64_t draw(int64_t, std::vector<int>& t) override {
    uint64_t tick = uint64_t(next_++);
    t.assign(size_t(n_) + 1, 0);
    for (int u = 1; u <= n_; ++u)
      t[u] = Rng(derive(seed_, uint64_t(u), tick, 0x9055u)).one_to(n_);
    return 0;
  }
  int n() const override { return n_; }

 private:
  int n_;
  uint64_t seed_;
  int64_t next_ = 1;
};

struct GossipOpts {
  bool track_per_round = false;
};

// Program concept:
//   GossipAction act(int v, int64_t round, Rng& rng);
//   Message pull_response(int v, int64_t round);
//   void receive(int v, int64_t round, std::span<const Delivery> got, Rng& rng);
//   bool finished() const;      // global predicate, checked between rounds
template <class P>
RoundStats run_gossip(PartnerSource& partners, P& prog, uint64_t seed,
                      int64_t round_cap, const BitBudget& budget,
                      GossipOpts opts = {}) {
  const int n = partners.n();
  std::vector<int> t;
  std::vector<std::vector<Delivery>> arrivals(size_t(n) + 1);
  std::vector<int> pullers;
  RoundStats st;
  for (int64_t r = 1; r <= round_cap; ++r) {
    if (prog.finished()) break;
    st.congest_rounds_charged += partners.draw(r, t);
    pullers.clear();
    int64_t sent = 0;
    for (int u = 1; u <= n; ++u) {
      Rng rng(derive(seed, uint64_t(u), uint64_t(r), 0xac7u));
      GossipAction a = prog.act(u, r, rng);
      if (a.kind == GossipKind::Push) {
        if (a.payload.bits > budget.bits)
          throw ProtocolViolation("push payload over budget at node " +
                                  std::to_string(u) + " round " +
                                  std::to_string(r));
        arrivals[t[u]].push_back({u, a.payload});
        ++sent;
      } else if (a.kind == GossipKind::Pull) {
        pullers.push_back(u);
      }
    }
    for (int u : pullers) {
      Message resp = prog.pull_response(t[u], r);
      if (resp.bits > budget.bits)
        throw ProtocolViolation("pull response over budget at node " +
                                std::to_string(t[u]) + " round " +
                                std::to_string(r));
      arrivals[u].push_back({t[u], resp});
      ++sent;
    }
    for (int v = 1; v <= n; ++v) {
      if (!arrivals[v].empty()) {
        Rng rng(derive(seed, uint64_t(v), uint64_t(r), 0x3ec1u));
        prog.receive(v, r, std::span<const Delivery>(arrivals[v]), rng);
        arrivals[v].clear();
      }
    }
    st.rounds = r;
    st.messages += sent;
    if (opts.track_per_round) st.per_round_messages.push_back(sent);
  }
  return st;
}

}  // namespace dsum
