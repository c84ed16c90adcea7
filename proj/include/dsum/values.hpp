#pragma once
// Per-node value assignments. NULL is encoded as 0; values live in [1, N].

#include <cstdint>
#include <string>
#include <vector>

#include "dsum/common.hpp"

namespace dsum {

constexpr int64_t kNullValue = 0;

struct ValueAssignment {
  int n = 0;
  int64_t N = 1;
  std::vector<int64_t> val;  // 1-based; val[v] == 0 means empty node

  static ValueAssignment empty(int n, int64_t N) {
    return ValueAssignment{n, N, std::vector<int64_t>(size_t(n) + 1, kNullValue)};
  }
  bool is_null(int v) const { return val[v] == kNullValue; }
  int64_t non_empty_count() const {
    int64_t z = 0;
    for (int v = 1; v <= n; ++v) z += val[v] != kNullValue;
    return z;
  }
  void validate() const;
};

// Instance file: one "nodeId value" pair per line; absent nodes are NULL.
ValueAssignment read_instance(const std::string& path, int n, int64_t N);
void write_instance(const ValueAssignment& a, const std::string& path);

}  // namespace dsum
