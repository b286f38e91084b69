#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parfilter/errors.hpp"
#include "parfilter/matrix.hpp"

namespace parfilter {

// How the studies are grouped for replicability testing: a partition of the
// n studies into K groups, local error weights per group, per-feature local
// replicability levels that sum to the overall level u, and per-group tuning
// values lambda used by selection and the adaptive null-proportion estimator.
struct TestingConfig {
  int n = 0;                             // number of studies
  int u = 0;                             // overall replicability level
  std::vector<std::vector<int>> groups;  // K disjoint study-index sets (0-based)
  std::vector<double> weights;           // K local error weights, sum to 1
  std::vector<double> lambdas;           // K tuning values in (0, 1]
  Grid<int> levels;                      // m x K local levels u_ik

  int group_count() const { return static_cast<int>(groups.size()); }
  std::size_t feature_count() const { return levels.rows(); }
};

// Hypothesis statuses from a simulation: entry (i, j) is 1 when the base
// null of feature i in study j is true.
using GroundTruth = Grid<std::uint8_t>;

// Throws ValidationError when the partition, weights, lambdas or levels
// violate their constraints. Weights are renormalized in load_config_json;
// here a deviation of the sum from 1 beyond 1e-12 is rejected.
void validate_config(const TestingConfig& config);

// One singleton group per study, weights 1/n, all local levels 1. This is
// the default for maximum replicability (u = n).
TestingConfig max_rep_config(int n, std::size_t m, double lambda = 0.5);

// Set of valid two-group level splits (a, b): a + b = u, 1 <= a <= size1,
// 1 <= b <= size2.
std::vector<std::pair<int, int>> valid_two_group_levels(int u, int size1, int size2);

// Level rule hook for the two-group configuration. Receives the feature
// index and that feature's covariate row (empty when covariates are absent)
// and returns (u_i1, u_i2). Covariate-driven rules are experimental: the
// shipped defaults ignore the covariates.
using TwoGroupLevelRule =
    std::function<std::pair<int, int>(std::size_t feature, std::span<const double> x)>;

// Two groups by study parity (1-based studies {2,4,...} vs {1,3,5,...}),
// weights |G_k|/n, per-feature levels from the rule. Requires 2 <= u <= n.
TestingConfig two_group_config(int n, std::size_t m, int u, const TwoGroupLevelRule& rule,
                               const Matrix* covariates = nullptr, double lambda = 0.5);

// Same, with the default rule: levels drawn uniformly from the valid split
// set, seeded independently of any data.
TestingConfig two_group_config(int n, std::size_t m, int u, std::uint64_t level_seed,
                               double lambda = 0.5);

// A configuration drawn at random from a candidate list, with provenance.
struct ConfigDraw {
  TestingConfig config;
  std::size_t index = 0;
  std::uint64_t seed = 0;
};

// Uniform draw among candidates; must be seeded independently of the data.
ConfigDraw sample_config(const std::vector<TestingConfig>& candidates, std::uint64_t seed);

// Per-feature diagnosis of a configuration against simulation ground truth.
// A replicated feature is "imbalanced" when some group's local
// partial-conjunction null is nonetheless true, which makes the feature
// undetectable by group-wise testing.
enum class FeatureBalance { not_replicated, balanced, imbalanced };

std::vector<FeatureBalance> imbalance_report(const TestingConfig& config,
                                             const GroundTruth& truth);

// Parses a JSON configuration document:
//   {"u": 2, "groups": [[1,2],[3]], "weights": [0.5,0.5],
//    "lambdas": [0.5,0.5], "levels": "max-rep"}
// Study indices in the file are 1-based. "weights" defaults to |G_k|/n and
// is renormalized when the sum is within 1e-12 of 1. "lambdas" defaults to
// default_lambda. "levels" is either an m x K matrix, "max-rep" (requires
// u = n), or "two-group-random:SEED" (requires K = 2).
TestingConfig load_config_json(const std::string& text, int n, std::size_t m,
                               double default_lambda = 0.5);

TestingConfig load_config_file(const std::string& path, int n, std::size_t m,
                               double default_lambda = 0.5);

}  // namespace parfilter
