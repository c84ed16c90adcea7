#include "dsum/common.hpp"

#include <algorithm>
#include <cstdlib>

namespace dsum {

std::string i128_to_string(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  u128 u = neg ? u128(-(v + 1)) + 1 : u128(v);
  std::string s;
  while (u != 0) {
    s.push_back(char('0' + int(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

BitBudget BitBudget::make(int n, int64_t value_domain, int c0) {
  uint64_t dom = std::max<uint64_t>({uint64_t(n), uint64_t(value_domain), 16});
  BitBudget b;
  b.word_bits = ceil_log2(dom);
  b.bits = c0 * b.word_bits;
  return b;
}

static int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  return std::atoi(v);
}

Constants Constants::from_env() {
  Constants c;
  c.c0 = env_int("DSUM_C0", c.c0);
  c.c_med = env_int("DSUM_CMED", c.c_med);
  c.c_ams = env_int("DSUM_CAMS", c.c_ams);
  c.c_fk = env_int("DSUM_C", c.c_fk);
  c.c_est = env_int("DSUM_CPRIME", c.c_est);
  c.c_push = env_int("DSUM_C1", c.c_push);
  c.c_route = env_int("DSUM_CROUTE", c.c_route);
  c.c_diff = env_int("DSUM_CDIFF", c.c_diff);
  return c;
}

}  // namespace dsum
