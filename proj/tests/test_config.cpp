#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "parfilter/config.hpp"
#include "parfilter/errors.hpp"

using namespace parfilter;

TEST_CASE("max-rep configuration") {
  const TestingConfig config = max_rep_config(4, 3);
  CHECK(config.n == 4);
  CHECK(config.u == 4);
  CHECK(config.group_count() == 4);
  for (int k = 0; k < 4; ++k) {
    REQUIRE(config.groups[k].size() == 1);
    CHECK(config.groups[k][0] == k);
    CHECK(config.weights[k] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(config.lambdas[k] == 0.5);
  }
  REQUIRE(config.levels.rows() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) CHECK(config.levels(i, k) == 1);
  }
  CHECK_NOTHROW(validate_config(config));
}

TEST_CASE("valid two-group level splits") {
  CHECK(valid_two_group_levels(4, 2, 2) ==
        std::vector<std::pair<int, int>>{{2, 2}});
  CHECK(valid_two_group_levels(3, 2, 2) ==
        std::vector<std::pair<int, int>>{{1, 2}, {2, 1}});
  CHECK(valid_two_group_levels(2, 1, 3) ==
        std::vector<std::pair<int, int>>{{1, 1}});
  CHECK(valid_two_group_levels(9, 2, 2).empty());
}

TEST_CASE("two-group configuration splits studies by parity") {
  const TestingConfig config = two_group_config(5, 10, 3, std::uint64_t{7});
  CHECK(config.n == 5);
  CHECK(config.u == 3);
  REQUIRE(config.group_count() == 2);
  // 1-based even studies form the first group.
  CHECK(config.groups[0] == std::vector<int>{1, 3});
  CHECK(config.groups[1] == std::vector<int>{0, 2, 4});
  CHECK(config.weights[0] == doctest::Approx(2.0 / 5.0).epsilon(1e-14));
  CHECK(config.weights[1] == doctest::Approx(3.0 / 5.0).epsilon(1e-14));
  REQUIRE(config.levels.rows() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const int a = config.levels(i, 0);
    const int b = config.levels(i, 1);
    CHECK(a + b == 3);
    CHECK(a >= 1);
    CHECK(a <= 2);
    CHECK(b >= 1);
    CHECK(b <= 3);
  }
  CHECK_NOTHROW(validate_config(config));

  // Deterministic in the seed and independent of anything else.
  const TestingConfig again = two_group_config(5, 10, 3, std::uint64_t{7});
  CHECK(again.levels == config.levels);
}

TEST_CASE("two-group configuration with a custom rule") {
  const TwoGroupLevelRule rule = [](std::size_t feature, std::span<const double>) {
    return feature % 2 == 0 ? std::pair<int, int>{1, 2} : std::pair<int, int>{2, 1};
  };
  const TestingConfig config = two_group_config(4, 4, 3, rule);
  CHECK(config.levels(0, 0) == 1);
  CHECK(config.levels(1, 0) == 2);
  CHECK(config.levels(0, 1) == 2);
  CHECK(config.levels(1, 1) == 1);
}

TEST_CASE("configuration validation rejects broken inputs") {
  TestingConfig config = max_rep_config(3, 2);

  SUBCASE("weights must sum to one") {
    config.weights[0] = 0.9;
    CHECK_THROWS_AS(validate_config(config), ValidationError);
  }
  SUBCASE("lambdas must lie in (0,1]") {
    config.lambdas[1] = 0.0;
    CHECK_THROWS_AS(validate_config(config), ValidationError);
    config.lambdas[1] = 1.5;
    CHECK_THROWS_AS(validate_config(config), ValidationError);
  }
  SUBCASE("groups must partition the studies") {
    config.groups[2][0] = 1;  // study 1 twice, study 2 missing
    CHECK_THROWS_AS(validate_config(config), ValidationError);
  }
  SUBCASE("levels must respect group sizes") {
    config.levels(0, 1) = 2;  // singleton group with level 2
    CHECK_THROWS_AS(validate_config(config), ValidationError);
  }
  SUBCASE("levels must sum to u") {
    config.u = 2;
    CHECK_THROWS_AS(validate_config(config), ValidationError);
  }
}

TEST_CASE("two-group configuration rejects u = 1") {
  CHECK_THROWS_AS(two_group_config(4, 3, 1, std::uint64_t{0}), ValidationError);
  CHECK_THROWS_AS(two_group_config(4, 3, 5, std::uint64_t{0}), ValidationError);
}

TEST_CASE("sample_config draws deterministically") {
  std::vector<TestingConfig> candidates{max_rep_config(2, 4), max_rep_config(2, 4)};
  candidates[1].lambdas = {0.7, 0.7};
  const ConfigDraw draw = sample_config(candidates, 11);
  CHECK(draw.seed == 11);
  CHECK(draw.index < candidates.size());
  CHECK(draw.config.lambdas == candidates[draw.index].lambdas);
  const ConfigDraw again = sample_config(candidates, 11);
  CHECK(again.index == draw.index);
  std::vector<TestingConfig> empty;
  CHECK_THROWS_AS(sample_config(empty, 1), ValidationError);
}

TEST_CASE("imbalance report classifies features") {
  // Two groups {0,1} and {2,3}, u = 2, levels (1,1).
  TestingConfig config;
  config.n = 4;
  config.u = 2;
  config.groups = {{0, 1}, {2, 3}};
  config.weights = {0.5, 0.5};
  config.lambdas = {0.5, 0.5};
  config.levels = Grid<int>(3, 2, 1);
  validate_config(config);

  GroundTruth truth(3, 4, 1);
  // Feature 0: signals in studies 0 and 2 -> replicated, both local nulls false.
  truth(0, 0) = 0;
  truth(0, 2) = 0;
  // Feature 1: signals in studies 0 and 1 -> replicated but group 2 all null.
  truth(1, 0) = 0;
  truth(1, 1) = 0;
  // Feature 2: one signal -> not replicated at u = 2.
  truth(2, 3) = 0;

  const std::vector<FeatureBalance> report = imbalance_report(config, truth);
  CHECK(report[0] == FeatureBalance::balanced);
  CHECK(report[1] == FeatureBalance::imbalanced);
  CHECK(report[2] == FeatureBalance::not_replicated);
}

TEST_CASE("JSON configuration parsing") {
  const std::string text = R"({
    "u": 2,
    "groups": [[1, 2], [3]],
    "weights": [0.5, 0.5],
    "lambdas": [0.4, 0.6],
    "levels": [[1, 1], [1, 1]]
  })";
  const TestingConfig config = load_config_json(text, 3, 2);
  CHECK(config.u == 2);
  REQUIRE(config.group_count() == 2);
  CHECK(config.groups[0] == std::vector<int>{0, 1});  // 1-based in the file
  CHECK(config.groups[1] == std::vector<int>{2});
  CHECK(config.lambdas[0] == 0.4);
  CHECK(config.levels(1, 1) == 1);
}

TEST_CASE("JSON defaults and renormalization") {
  // Weights default to group-size shares; lambdas to the supplied default.
  const std::string text = R"({"u": 3, "groups": [[1, 2], [3]], "levels": [[2, 1]]})";
  const TestingConfig config = load_config_json(text, 3, 1, 0.25);
  CHECK(config.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(config.weights[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(config.lambdas[0] == 0.25);

  // A tiny deviation from sum 1 is renormalized, a large one rejected.
  const std::string nearly = R"({"u": 2, "groups": [[1], [2]],
    "weights": [0.5000000000000001, 0.5], "levels": [[1, 1]]})";
  CHECK_NOTHROW(load_config_json(nearly, 2, 1));
  const std::string off = R"({"u": 2, "groups": [[1], [2]],
    "weights": [0.6, 0.5], "levels": [[1, 1]]})";
  CHECK_THROWS_AS(load_config_json(off, 2, 1), ValidationError);
}

TEST_CASE("JSON level shorthands") {
  const std::string maxrep = R"({"u": 2, "groups": [[1], [2]], "levels": "max-rep"})";
  const TestingConfig config = load_config_json(maxrep, 2, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(config.levels(i, 0) == 1);
    CHECK(config.levels(i, 1) == 1);
  }
  // max-rep requires u = n.
  const std::string badu = R"({"u": 1, "groups": [[1], [2]], "levels": "max-rep"})";
  CHECK_THROWS_AS(load_config_json(badu, 2, 5), ValidationError);

  const std::string random =
      R"({"u": 3, "groups": [[1, 3], [2, 4]], "levels": "two-group-random:9"})";
  const TestingConfig drawn = load_config_json(random, 4, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(drawn.levels(i, 0) + drawn.levels(i, 1) == 3);
  }
  const TestingConfig redrawn = load_config_json(random, 4, 6);
  CHECK(redrawn.levels == drawn.levels);

  const std::string unknown = R"({"u": 2, "groups": [[1], [2]], "levels": "zigzag"})";
  CHECK_THROWS_AS(load_config_json(unknown, 2, 5), ValidationError);
}

TEST_CASE("JSON structural errors") {
  CHECK_THROWS_AS(load_config_json("not json", 2, 1), ValidationError);
  CHECK_THROWS_AS(load_config_json("[1,2]", 2, 1), ValidationError);
  // Study index out of range.
  const std::string range = R"({"u": 2, "groups": [[1], [5]], "levels": [[1, 1]]})";
  CHECK_THROWS_AS(load_config_json(range, 2, 1), ValidationError);
  // Levels matrix with the wrong shape.
  const std::string shape = R"({"u": 2, "groups": [[1], [2]], "levels": [[1, 1], [1, 1]]})";
  CHECK_THROWS_AS(load_config_json(shape, 2, 1), ValidationError);
}

TEST_CASE("configuration file loading") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream file(path);
    file << R"({"u": 2, "groups": [[1], [2]], "levels": [[1, 1], [1, 1]]})";
  }
  const TestingConfig config = load_config_file(path, 2, 2);
  CHECK(config.u == 2);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config_file("does_not_exist.json", 2, 2), ValidationError);
}
