#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "dsum/harness.hpp"
#include "dsum/oracles.hpp"

using namespace dsum;

namespace {

json base_config() {
  return json{
      {"model", "congest"},
      {"graph", "random-regular:64:4"},
      {"N", 64},
      {"values", {{"dist", "uniform"}, {"support", 16}}},
      {"algorithm", {{"name", "f0"}, {"epsilon", 0.5}}},
      {"seeds", {1, 2, 3}},
  };
}

}  // namespace

TEST_CASE("config parsing fills defaults and validates") {
  auto cfg = ExperimentConfig::from_json(base_config());
  CHECK(cfg.model == "congest");
  CHECK(cfg.router == "tree");
  CHECK(cfg.graph.n == 64);
  CHECK(cfg.seeds.size() == 3);

  auto bad_model = base_config();
  bad_model["model"] = "quantum";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_model), ConfigError);

  auto wrong_engine = base_config();
  wrong_engine["algorithm"]["name"] = "fk";  // gossip algorithm
  CHECK_THROWS_AS(ExperimentConfig::from_json(wrong_engine), ConfigError);

  auto bad_eps = base_config();
  bad_eps["algorithm"]["epsilon"] = 0.0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_eps), ConfigError);
}

TEST_CASE("config digest is stable and key-order independent") {
  auto a = ExperimentConfig::from_json(base_config());
  json reordered = {
      {"seeds", {1, 2, 3}},
      {"algorithm", {{"epsilon", 0.5}, {"name", "f0"}}},
      {"values", {{"support", 16}, {"dist", "uniform"}}},
      {"N", 64},
      {"graph", "random-regular:64:4"},
      {"model", "congest"},
  };
  auto b = ExperimentConfig::from_json(reordered);
  CHECK(a.digest() == b.digest());
  auto c = base_config();
  c["algorithm"]["epsilon"] = 0.25;
  CHECK(ExperimentConfig::from_json(c).digest() != a.digest());
}

TEST_CASE("identical config and seed reproduce identical records") {
  auto cfg = ExperimentConfig::from_json(base_config());
  auto r1 = run_experiment(cfg);
  auto r2 = run_experiment(cfg, 2);
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].error.empty());
    CHECK(r1[i].seed == r2[i].seed);
    CHECK(r1[i].estimate == r2[i].estimate);
    CHECK(r1[i].truth == r2[i].truth);
    CHECK(r1[i].rounds == r2[i].rounds);
    CHECK(r1[i].messages == r2[i].messages);
    CHECK(r1[i].max_congestion == r2[i].max_congestion);
    CHECK(r1[i].config_digest == r2[i].config_digest);
  }
}

TEST_CASE("value generators") {
  ValueDistSpec vd;
  vd.kind = ValueDistSpec::Kind::AllDistinct;
  auto a = make_values(vd, 32, 32, 1);
  CHECK(exact_stats(a).f0() == 32);
  CHECK_THROWS_AS(make_values(vd, 32, 16, 1), ConfigError);

  vd.kind = ValueDistSpec::Kind::Single;
  vd.single_value = 5;
  vd.null_fraction = 0.25;
  auto b = make_values(vd, 32, 8, 2);
  CHECK(exact_stats(b).z == 24);  // exact null count
  CHECK(exact_stats(b).f.at(5) == 24);

  vd.kind = ValueDistSpec::Kind::Zipf;
  vd.alpha = 1.5;
  vd.support = 10;
  vd.null_fraction = 0.0;
  auto c = make_values(vd, 400, 16, 3);
  auto fv = exact_stats(c);
  CHECK(fv.z == 400);
  CHECK(fv.f0() <= 10);
  CHECK(fv.f.at(1) > fv.f.at(10));  // zipf head is heavier

  vd.kind = ValueDistSpec::Kind::Uniform;
  vd.support = 20;
  CHECK_NOTHROW(make_values(vd, 64, 32, 4));
  vd.support = 64;
  vd.null_fraction = 0.0;
  CHECK_NOTHROW(make_values(vd, 64, 64, 4));
}

TEST_CASE("instance files round trip") {
  ValueDistSpec vd;
  vd.kind = ValueDistSpec::Kind::Zipf;
  vd.alpha = 1.2;
  vd.support = 6;
  vd.null_fraction = 0.5;
  auto a = make_values(vd, 40, 8, 9);
  write_instance(a, "/tmp/dsum_test_instance.vals");
  auto b = read_instance("/tmp/dsum_test_instance.vals", 40, 8);
  CHECK(a.val == b.val);
}

TEST_CASE("CSV columns follow the record schema") {
  TrialRecord r;
  r.config_digest = "abc";
  r.seed = 4;
  r.algorithm = "f0";
  auto csv = records_csv({r});
  CHECK(csv.rfind("config_digest,seed,algorithm,estimate,truth,rel_error,"
                  "rounds,messages,max_congestion\n",
                  0) == 0);
  CHECK(csv.find("abc,4,f0,") != std::string::npos);
}

TEST_CASE("sweep grids expand as a cross product") {
  json sweep = {{"base", base_config()},
                {"grid",
                 {{"/algorithm/epsilon", {0.5, 0.25}},
                  {"/values/support", {8, 16, 32}}}}};
  auto configs = expand_sweep(sweep);
  CHECK(configs.size() == 6);
  json listed = {{"experiments", {base_config(), base_config()}}};
  CHECK(expand_sweep(listed).size() == 2);
  CHECK_THROWS_AS(expand_sweep(json{{"nope", 1}}), ConfigError);
}

TEST_CASE("median relative error is nonincreasing as epsilon shrinks") {
  auto cfg = ExperimentConfig::from_json(base_config());
  cfg.graph = GraphSpec::parse("random-regular:512:6");
  cfg.N = 512;
  cfg.values.kind = ValueDistSpec::Kind::AllDistinct;
  cfg.seeds.clear();
  for (uint64_t s = 1; s <= 40; ++s) cfg.seeds.push_back(s);
  auto median_err = [&](double eps) {
    cfg.algorithm.eps = eps;
    auto recs = run_experiment(cfg, 4);
    std::vector<double> errs;
    for (const auto& r : recs) {
      REQUIRE(r.error.empty());
      errs.push_back(r.rel_error);
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  double e1 = median_err(1.0);   // t = 100 < F0: estimation path
  double e2 = median_err(0.5);   // t = 400 < F0
  double e3 = median_err(0.25);  // t = 1600 >= F0: exact path
  CHECK(e3 <= e2 + 1e-12);
  CHECK(e2 <= e1 + 1e-12);
  CHECK(e1 > 0.0);
  CHECK(e3 == 0.0);
}

TEST_CASE("failed trials carry the reason") {
  auto j = base_config();
  j["model"] = "gossip-emulated";
  j["graph"] = "path:3";  // m = 2 < 4: emulation precondition fails
  j["algorithm"] = {{"name", "push-sum"}};
  j["seeds"] = {1};
  auto cfg = ExperimentConfig::from_json(j);
  auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 1);
  CHECK(!recs[0].error.empty());
  CHECK(std::isnan(recs[0].estimate));
}

TEST_CASE("environment overrides reach the constants") {
  setenv("DSUM_CMED", "5", 1);
  setenv("DSUM_C1", "9", 1);
  auto c = Constants::from_env();
  CHECK(c.c_med == 5);
  CHECK(c.c_push == 9);
  unsetenv("DSUM_CMED");
  unsetenv("DSUM_C1");
  CHECK(Constants::from_env().c_med == 2);
}

TEST_CASE("gossip trials run end to end through the harness") {
  json j = {{"model", "gossip-ideal"},
            {"graph", "clique:64"},
            {"N", 16},
            {"values",
             {{"dist", "zipf"}, {"alpha", 1.2}, {"support", 8},
              {"null_fraction", 0.25}}},
            {"algorithm", {{"name", "fk"}, {"k", 2}, {"epsilon", 0.5}}},
            {"seeds", {1, 2}}};
  auto recs = run_experiment(ExperimentConfig::from_json(j));
  for (const auto& r : recs) {
    REQUIRE(r.error.empty());
    CHECK(r.truth > 0);
    CHECK(r.rounds > 0);
  }
}
