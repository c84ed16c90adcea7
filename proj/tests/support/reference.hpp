#pragma once
// Centralized single-shot reference estimators used as statistical oracles in
// tests. These recompute estimates directly from the value assignment and
// stay independent of the engine / tree-pipeline implementations they check.

#include <algorithm>
#include <vector>

#include "dsum/oracles.hpp"
#include "dsum/primitives.hpp"

namespace dsum::testref {

// One distinct-count repetition: t-th smallest distinct hash, or the exact
// distinct-hash count when fewer than t exist.
inline double kmv_single(const ValueAssignment& a, int t, Rng& rng) {
  HashFn h = HashFn::pairwise(a.N, rng);
  std::vector<int64_t> hashes;
  for (int v = 1; v <= a.n; ++v)
    if (!a.is_null(v)) hashes.push_back(h(a.val[size_t(v)]));
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
  if (int64_t(hashes.size()) < t) return double(hashes.size());
  return double(t) * double(h.mod) / double(hashes[size_t(t) - 1]);
}

// One sign-sum estimator X = Z^2 with a fresh 4-wise sign function.
inline double tug_single(const ValueAssignment& a, Rng& rng) {
  HashFn h = HashFn::fourwise(a.N, rng);
  std::vector<int> sign_of(size_t(a.N) + 1, 0);
  int64_t z = 0;
  for (int v = 1; v <= a.n; ++v) {
    int64_t x = a.val[size_t(v)];
    if (x == kNullValue) continue;
    if (sign_of[size_t(x)] == 0) sign_of[size_t(x)] = h.sign(x);
    z += sign_of[size_t(x)];
  }
  return double(z) * double(z);
}

// One rank-sampling estimator X = F1 * (r^p - (r-1)^p), r the rank of a
// uniform non-empty node among same-valued nodes.
inline double ams_single(const ValueAssignment& a, int p, Rng& rng) {
  std::vector<int> non_empty;
  for (int v = 1; v <= a.n; ++v)
    if (!a.is_null(v)) non_empty.push_back(v);
  int v = non_empty[size_t(rng.below(int64_t(non_empty.size())))];
  int64_t r = 0;
  for (int u : non_empty)
    if (a.val[size_t(u)] == a.val[size_t(v)] && u >= v) r += 1;
  i128 rp = 1, rm = 1;
  for (int i = 0; i < p; ++i) {
    rp *= i128(r);
    rm *= i128(r - 1);
  }
  return double(int64_t(non_empty.size())) * double(rp - rm);
}

}  // namespace dsum::testref
