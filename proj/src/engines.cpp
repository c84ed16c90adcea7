#include "dsum/engines.hpp"

#include <algorithm>
#include <string>

namespace dsum {

void Sender::operator()(int to, const Message& m) const {
  rd->do_send(from, to, m);
}

namespace detail {

void CongestRound::do_send(int from, int to, const Message& m) {
  if (to < 1 || to > g->n || !g->adjacent(from, to))
    throw ProtocolViolation("node " + std::to_string(from) + " round " +
                            std::to_string(round) + ": send to non-neighbor " +
                            std::to_string(to));
  if (m.bits > budget->bits)
    throw ProtocolViolation("node " + std::to_string(from) + " round " +
                            std::to_string(round) + ": payload " +
                            std::to_string(m.bits) + " bits exceeds budget " +
                            std::to_string(budget->bits));
  if (std::find(sent_to.begin(), sent_to.end(), to) != sent_to.end())
    throw ProtocolViolation("node " + std::to_string(from) + " round " +
                            std::to_string(round) +
                            ": two sends on edge to " + std::to_string(to));
  sent_to.push_back(to);
  (*next)[to].push_back({from, m});
  ++sent;
}

}  // namespace detail

}  // namespace dsum
