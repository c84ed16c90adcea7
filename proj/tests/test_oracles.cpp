#include "doctest.h"

#include <cmath>

#include "dsum/oracles.hpp"

using namespace dsum;

namespace {

ValueAssignment from_list(std::vector<int64_t> vals, int64_t N) {
  auto a = ValueAssignment::empty(int(vals.size()), N);
  for (size_t i = 0; i < vals.size(); ++i) a.val[i + 1] = vals[i];
  return a;
}

}  // namespace

TEST_CASE("moments of (1,1,2)") {
  auto fv = exact_stats(from_list({1, 1, 2}, 4));
  CHECK(fv.f0() == 2);
  CHECK(fv.f1() == 3);
  CHECK(int64_t(fv.moment(2)) == 5);
  CHECK(int64_t(fv.moment(3)) == 9);
}

TEST_CASE("all-NULL assignment has zero moments and zero entropy") {
  auto fv = exact_stats(ValueAssignment::empty(6, 10));
  CHECK(fv.f0() == 0);
  CHECK(fv.f1() == 0);
  CHECK(int64_t(fv.moment(3)) == 0);
  CHECK(fv.entropy() == 0.0);
}

TEST_CASE("uniform counts give entropy ln d") {
  std::vector<int64_t> vals;
  for (int i = 1; i <= 5; ++i)
    for (int c = 0; c < 7; ++c) vals.push_back(i);
  auto fv = exact_stats(from_list(vals, 8));
  CHECK(fv.entropy() == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("lp distribution examples") {
  auto d = lp_distribution(from_list({1, 1, 2}, 4), 2);
  REQUIRE(d.size() == 2);
  CHECK(d[0].first == 1);
  CHECK(d[0].second == doctest::Approx(0.8));
  CHECK(d[1].second == doctest::Approx(0.2));

  auto single = lp_distribution(from_list({3, 3, 3}, 4), 2);
  REQUIRE(single.size() == 1);
  CHECK(single[0].second == doctest::Approx(1.0));

  CHECK_THROWS_AS(lp_distribution(ValueAssignment::empty(3, 4), 2),
                  ConfigError);
}

TEST_CASE("lp distribution matches integer-power recomputation on zipf") {
  Rng rng(42);
  std::vector<int64_t> vals;
  for (int i = 0; i < 400; ++i) vals.push_back(1 + rng.below(50));
  auto a = from_list(vals, 50);
  auto fv = exact_stats(a);
  for (int p : {2, 3}) {
    auto d = lp_distribution(a, p);
    double sum = 0;
    for (auto [value, prob] : d) {
      i128 num = 1;
      for (int i = 0; i < p; ++i) num *= i128(fv.f.at(value));
      CHECK(prob == doctest::Approx(double(num) / double(fv.moment(p))));
      sum += prob;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("norm inequality |f|_k <= n^(1/k-1/p) |f|_p") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int64_t> vals;
    int n = 50 + int(rng.below(200));
    int64_t support = 1 + rng.below(40);
    for (int i = 0; i < n; ++i) vals.push_back(1 + rng.below(support));
    auto fv = exact_stats(from_list(vals, support));
    int entries = int(fv.f0());
    for (auto [k, p] : std::vector<std::pair<int, int>>{{1, 2}, {2, 3}, {2, 5}}) {
      double nk = std::pow(double(fv.moment(k)), 1.0 / k);
      double np = std::pow(double(fv.moment(p)), 1.0 / p);
      double bound = std::pow(double(entries), 1.0 / k - 1.0 / p) * np;
      CHECK(nk <= bound * (1 + 1e-9));
    }
  }
}

TEST_CASE("top-k sorts by count desc then value asc") {
  auto a = from_list({1, 1, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4}, 8);
  auto top = exact_stats(a).top_k(2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == std::pair<int64_t, int64_t>{1, 5});
  CHECK(top[1] == std::pair<int64_t, int64_t>{2, 3});
  auto all = exact_stats(a).top_k(10);
  CHECK(all.size() == 4);
}

TEST_CASE("128-bit moments avoid overflow for p=6 at desk scale") {
  std::vector<int64_t> vals(4096, 1);
  auto fv = exact_stats(from_list(vals, 2));
  // 4096^6 = 2^72 does not fit in 64 bits
  i128 m6 = fv.moment(6);
  CHECK(i128_to_string(m6) == "4722366482869645213696");
  CHECK_THROWS_AS(fv.moment(7), ConfigError);
}
