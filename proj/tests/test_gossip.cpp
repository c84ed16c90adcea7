#include "doctest.h"

#include <cmath>
#include <map>

#include "dsum/gossip.hpp"
#include "dsum/harness.hpp"

using namespace dsum;

namespace {

const Constants kC;

ValueAssignment sparse_zipf(int n, int64_t N, int64_t support, double alpha,
                            double null_fraction, uint64_t seed) {
  ValueDistSpec vd;
  vd.kind = ValueDistSpec::Kind::Zipf;
  vd.alpha = alpha;
  vd.support = support;
  vd.null_fraction = null_fraction;
  return make_values(vd, n, N, seed);
}

}  // namespace

TEST_CASE("push-sum keeps equal shares equal and estimates the sum exactly") {
  int n = 16;
  IdealPartnerSource ps(n, 1);
  std::vector<int64_t> local(size_t(n) + 1, 5);
  local[0] = 0;
  auto r = push_sum(ps, local, 10, 2, kC, 16);
  for (int v = 1; v <= n; ++v)
    CHECK(r.estimate[size_t(v)] == doctest::Approx(80.0).epsilon(1e-12));
}

TEST_CASE("push-sum mass conservation is exact at every round boundary") {
  int n = 24;
  Rng rng(3);
  std::vector<int64_t> local(size_t(n) + 1, 0);
  u128 total = 0;
  for (int v = 1; v <= n; ++v) {
    local[size_t(v)] = rng.below(100);
    total += u128(uint64_t(local[size_t(v)]));
  }
  for (int64_t rounds : {1, 7, 50}) {
    IdealPartnerSource ps(n, 9);
    auto r = push_sum(ps, local, rounds, 4, kC, 128);
    u128 s_sum = 0, w_sum = 0;
    for (int v = 1; v <= n; ++v) {
      s_sum += r.s_num[size_t(v)];
      w_sum += r.w_num[size_t(v)];
    }
    // on the 2^-rounds grid the initial mass doubles each round
    CHECK(s_sum == (total << rounds));
    CHECK(w_sum == (u128(uint64_t(n)) << rounds));
  }
}

TEST_CASE("push-sum rounds to the exact count at 6 log2 n rounds") {
  int n = 256;
  std::vector<int64_t> local(size_t(n) + 1, 0);
  Rng pick(5);
  for (int placed = 0; placed < 57;) {
    int v = 1 + int(pick.below(n));
    if (local[size_t(v)] == 0) {
      local[size_t(v)] = 1;
      ++placed;
    }
  }
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    IdealPartnerSource ps(n, derive(400, uint64_t(trial)));
    auto r = push_sum(ps, local, 6 * 8, derive(500, uint64_t(trial)), kC, n);
    bool all = true;
    for (int v = 1; v <= n; ++v) all = all && llround(r.estimate[size_t(v)]) == 57;
    ok += all;
  }
  CHECK(ok >= 99);
}

TEST_CASE("duplication: n=12 with values {a,a,b} doubles every frequency") {
  int n = 12;
  auto a = ValueAssignment::empty(n, 8);
  a.val[2] = 4;
  a.val[5] = 4;
  a.val[9] = 6;
  IdealPartnerSource ps(n, 7);
  auto r = preprocess_duplicate(a, ps, 8, kC);
  CHECK(r.applied);
  CHECK(r.z == 3);
  CHECK(r.dup_factor == 2);  // ceil((12/3)/3)
  auto fv = exact_stats(r.assignment);
  CHECK(fv.z == 6);
  CHECK(fv.f.at(4) == 4);
  CHECK(fv.f.at(6) == 2);
}

TEST_CASE("duplication is a no-op when z >= n/3") {
  int n = 12;
  auto a = ValueAssignment::empty(n, 8);
  for (int v = 1; v <= 6; ++v) a.val[size_t(v)] = 1 + (v % 3);
  IdealPartnerSource ps(n, 7);
  auto r = preprocess_duplicate(a, ps, 8, kC);
  CHECK(!r.applied);
  CHECK(r.dup_factor == 1);
  CHECK(r.assignment.val == a.val);
}

TEST_CASE("duplication preserves frequency ratios exactly") {
  for (int trial = 0; trial < 20; ++trial) {
    int n = 60 + 24 * (trial % 5);
    auto a = sparse_zipf(n, 64, 12, 1.1, 0.9, derive(21, uint64_t(trial)));
    if (exact_stats(a).z == 0) continue;
    IdealPartnerSource ps(n, derive(22, uint64_t(trial)));
    auto r = preprocess_duplicate(a, ps, derive(23, uint64_t(trial)), kC);
    auto before = exact_stats(a);
    auto after = exact_stats(r.assignment);
    CHECK(after.z == before.z * r.dup_factor);
    for (auto& [value, count] : before.f)
      CHECK(after.f.at(value) == count * r.dup_factor);
    CHECK(after.f.size() == before.f.size());
    int logn = ceil_log2(uint64_t(n));
    CHECK(r.stats.rounds <= 10LL * logn * logn);
  }
}

TEST_CASE("l0 sample: single value is always returned") {
  int n = 20;
  auto a = ValueAssignment::empty(n, 16);
  for (int v = 1; v <= n; v += 2) a.val[size_t(v)] = 13;
  IdealPartnerSource ps(n, 3);
  for (int i = 0; i < 5; ++i)
    CHECK(l0_sample(a, ps, derive(31, uint64_t(i)), kC).value == 13);
  CHECK_THROWS_AS(l0_sample(ValueAssignment::empty(4, 4), ps, 1, kC),
                  ConfigError);
}

TEST_CASE("l0 sample is uniform over the support regardless of skew") {
  int n = 10;
  auto a = ValueAssignment::empty(n, 4);
  for (int v = 1; v <= 9; ++v) a.val[size_t(v)] = 1;
  a.val[10] = 2;  // f = (9,1) but both values equally likely
  IdealPartnerSource ps(n, 4);
  int ones = 0, trials = 10000;
  for (int i = 0; i < trials; ++i)
    ones += l0_sample(a, ps, derive(32, uint64_t(i)), kC).value == 1;
  double frac = double(ones) / trials;
  CHECK(std::fabs(frac - 0.5) <= 0.02);
}

TEST_CASE("lp sample: single value short-circuits to it") {
  int n = 9;
  auto a = ValueAssignment::empty(n, 4);
  for (int v = 1; v <= n; ++v) a.val[size_t(v)] = 2;
  IdealPartnerSource ps(n, 5);
  auto r = lp_sample(a, 2, ps, 6, kC);
  CHECK(r.value == 2);
}

TEST_CASE("lp sample matches f^p / F_p on a dense three-node instance") {
  // f = (2,1), p = 2: probabilities (4/5, 1/5)
  auto a = ValueAssignment::empty(3, 4);
  a.val[1] = 1;
  a.val[2] = 1;
  a.val[3] = 2;
  IdealPartnerSource ps(3, 8);
  int trials = 100000, ones = 0;
  for (int i = 0; i < trials; ++i)
    ones += lp_sample(a, 2, ps, derive(33, uint64_t(i)), kC).value == 1;
  CHECK(std::fabs(double(ones) / trials - 0.8) <= 0.02);
}

TEST_CASE("per-node per-attempt success probability matches sum (f_i/n)^p") {
  auto a = ValueAssignment::empty(3, 4);
  a.val[1] = 1;
  a.val[2] = 1;
  a.val[3] = 2;
  int p = 2, trials = 20000;
  // replay the sampler's success rule with raw partner draws
  IdealPartnerSource ps(3, 123);
  std::vector<int> t;
  int succ = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<int64_t> seen;
    for (int round = 0; round < p; ++round) {
      ps.draw(1, t);
      seen.push_back(a.val[size_t(t[1])]);
    }
    bool ok = true;
    for (int64_t x : seen) ok = ok && x != kNullValue && x == seen[0];
    succ += ok;
  }
  double want = (std::pow(2.0 / 3.0, 2) + std::pow(1.0 / 3.0, 2));
  CHECK(std::fabs(double(succ) / trials - want) <= 0.05 * want);
}

TEST_CASE("F_k estimate: one shared value gives exactly n^2") {
  int n = 16;
  auto a = ValueAssignment::empty(n, 4);
  for (int v = 1; v <= n; ++v) a.val[size_t(v)] = 3;
  IdealPartnerSource ps(n, 9);
  auto r = fk_estimate(a, 2, 0.5, ps, 10, kC);
  CHECK(r.fk == 256.0);  // every indicator fires, the count is exact
}

TEST_CASE("F_k estimate is unbiased on all-distinct values") {
  int n = 128;
  auto a = ValueAssignment::empty(n, 128);
  for (int v = 1; v <= n; ++v) a.val[size_t(v)] = v;
  double sum = 0;
  int seeds = 2000;
  for (int i = 0; i < seeds; ++i) {
    IdealPartnerSource ps(n, derive(55, uint64_t(i)));
    sum += fk_estimate(a, 2, 0.5, ps, derive(56, uint64_t(i)), kC).fk;
  }
  double mean = sum / seeds;  // F2 = n for all-distinct
  CHECK(std::fabs(mean - 128.0) <= 0.03 * 128.0);
}

TEST_CASE("F_p estimate: one value of multiplicity n is exact up to F_k noise") {
  int n = 64;
  auto a = ValueAssignment::empty(n, 4);
  for (int v = 1; v <= n; ++v) a.val[size_t(v)] = 2;
  IdealPartnerSource ps(n, 10);
  auto r = fp_estimate(a, 3, 2, 0.5, ps, 11, kC);
  CHECK(r.dup_factor == 1);
  CHECK(r.fp == doctest::Approx(double(n) * n * n));  // F2 exact, f = n exact
}

TEST_CASE("F_p estimate tracks the oracle through duplication") {
  int n = 128;
  auto a = sparse_zipf(n, 16, 8, 1.2, 0.8, 99);
  double truth = double(exact_stats(a).moment(3));
  int within = 0;
  for (int seed = 0; seed < 5; ++seed) {
    IdealPartnerSource ps(n, derive(60, uint64_t(seed)));
    auto r = fp_estimate(a, 3, 2, 0.3, ps, derive(61, uint64_t(seed)), kC);
    CHECK(r.dup_factor >= 2);
    within += std::fabs(r.fp - truth) <= 0.3 * truth;
  }
  CHECK(within >= 4);
}

TEST_CASE("estimator draw returns the exact frequency of its sample") {
  int n = 60;
  auto a = ValueAssignment::empty(n, 8);
  for (int v = 1; v <= 40; ++v) a.val[size_t(v)] = 1;
  for (int v = 41; v <= 60; ++v) a.val[size_t(v)] = 2;
  IdealPartnerSource ps(n, 12);
  auto fv = exact_stats(a);
  for (int i = 0; i < 10; ++i) {
    auto d = fp_estimator_draw(a, 2, ps, derive(70, uint64_t(i)), kC);
    CHECK(d.frequency == fv.f.at(d.sampled_value));
  }
}
