#pragma once
// Centralized ground truth: exact frequency statistics and sampling laws.

#include <map>
#include <utility>
#include <vector>

#include "dsum/values.hpp"

namespace dsum {

struct FrequencyVector {
  std::map<int64_t, int64_t> f;  // value -> occurrence count
  int64_t z = 0;                 // non-empty node count

  int64_t f0() const { return static_cast<int64_t>(f.size()); }
  int64_t f1() const;
  // Sum of f_i^p in 128-bit integer arithmetic; valid for p <= 6, n <= 4096.
  i128 moment(int p) const;
  // Natural-log empirical entropy; 0 for an all-NULL assignment.
  double entropy() const;
  // Sorted by count descending, ties by value ascending; at most k pairs.
  std::vector<std::pair<int64_t, int64_t>> top_k(int k) const;
};

FrequencyVector exact_stats(const ValueAssignment& a);

// (value, f_value^p / F_p) over the support, ascending by value.
std::vector<std::pair<int64_t, double>> lp_distribution(const ValueAssignment& a,
                                                        int p);

}  // namespace dsum
