#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "parfilter/combine.hpp"
#include "parfilter/config.hpp"
#include "parfilter/engine.hpp"
#include "parfilter/errors.hpp"
#include "parfilter/rng.hpp"

using namespace parfilter;

namespace {

TestingConfig singleton_config(int n, std::size_t m, double lambda) {
  return max_rep_config(n, m, lambda);
}

CovariateSet no_covariates(int n, std::size_t m) {
  return CovariateSet(n, Matrix(m, 1, 0.0));
}

Matrix random_pvalues(std::size_t m, int n, std::uint64_t seed, double signal_share = 0.3) {
  RandomStream rng(seed, 0, 0);
  Matrix p(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const bool signal = rng.uniform() < signal_share;
    for (int j = 0; j < n; ++j) {
      const double u = rng.uniform();
      p(i, j) = signal ? u * u * u * 0.05 : u;
    }
  }
  return p;
}

}  // namespace

TEST_CASE("name conversions") {
  CHECK(weight_mode_from_name("model-a") == WeightMode::model_a);
  CHECK(weight_mode_from_name("model-b") == WeightMode::model_b);
  CHECK(weight_mode_from_name("unit") == WeightMode::unit);
  CHECK(weight_mode_name(WeightMode::model_b) == "model-b");
  CHECK_THROWS_AS(weight_mode_from_name("dense"), ValidationError);
  CHECK(analysis_mode_from_name("indep-adaptive") == AnalysisMode::independence_adaptive);
  CHECK(analysis_mode_from_name("indep-nonadaptive") ==
        AnalysisMode::independence_nonadaptive);
  CHECK(analysis_mode_from_name("dependence") == AnalysisMode::dependence);
  CHECK(analysis_mode_name(AnalysisMode::dependence) == "dependence");
  CHECK_THROWS_AS(analysis_mode_from_name("auto"), ValidationError);
}

TEST_CASE("local PC p-values for singleton groups copy the base column") {
  const TestingConfig config = singleton_config(3, 4, 0.5);
  const Matrix p = random_pvalues(4, 3, 1);
  const Matrix pc = local_pc_pvalues(p, config, Combiner::stouffer);
  REQUIRE(pc.rows() == 4);
  REQUIRE(pc.cols() == 3);
  for (std::size_t i = 0; i < 4; ++i) {
    for (int k = 0; k < 3; ++k) CHECK(pc(i, k) == p(i, k));
  }
}

TEST_CASE("local PC p-values apply the group level") {
  TestingConfig config;
  config.n = 3;
  config.u = 3;
  config.groups = {{0, 1}, {2}};
  config.weights = {2.0 / 3.0, 1.0 / 3.0};
  config.lambdas = {0.5, 0.5};
  config.levels = Grid<int>(2, 2);
  config.levels(0, 0) = 2; config.levels(0, 1) = 1;
  config.levels(1, 0) = 2; config.levels(1, 1) = 1;
  validate_config(config);

  Matrix p(2, 3);
  p(0, 0) = 0.1; p(0, 1) = 0.4; p(0, 2) = 0.2;
  p(1, 0) = 0.6; p(1, 1) = 0.3; p(1, 2) = 0.8;
  const Matrix pc = local_pc_pvalues(p, config, Combiner::fisher);
  // Level 2 of 2 studies is the exact maximum for every combiner.
  CHECK(pc(0, 0) == 0.4);
  CHECK(pc(1, 0) == 0.6);
  CHECK(pc(0, 1) == 0.2);
  CHECK(pc(1, 1) == 0.8);

  // Level 1 over the pair is the plain combination.
  config.levels(0, 0) = 1;
  config.levels(0, 1) = 2;
  CHECK_THROWS_AS(validate_config(config), ValidationError);  // level > group size
}

TEST_CASE("null proportion estimators") {
  Matrix pc(4, 1);
  pc(0, 0) = 0.2; pc(1, 0) = 0.7; pc(2, 0) = 0.4; pc(3, 0) = 0.9;
  Matrix nu(4, 1);
  nu(0, 0) = 0.5; nu(1, 0) = 1.5; nu(2, 0) = 1.0; nu(3, 0) = 1.0;
  const std::vector<int> selected{0, 1, 2};

  CHECK(null_proportion_estimate(PiMode::one, pc, 0, selected, nu, 1.0) == 1.0);

  // (max nu + sum nu 1{p > 0.5}) / ((1 - 0.5) |S|) = (1.5 + 1.5) / 1.5 = 2.
  CHECK(null_proportion_estimate(PiMode::adaptive, pc, 0, selected, nu, 0.5) ==
        doctest::Approx(2.0).epsilon(1e-14));

  CHECK(null_proportion_estimate(PiMode::harmonic, pc, 0, selected, nu, 1.0) ==
        doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-14));

  std::vector<std::string> warnings;
  const std::vector<int> empty;
  CHECK(null_proportion_estimate(PiMode::adaptive, pc, 0, empty, nu, 0.5, &warnings) == 0.0);
  CHECK_FALSE(warnings.empty());
  CHECK(null_proportion_estimate(PiMode::harmonic, pc, 0, empty, nu, 1.0) == 1.0);

  // lambda = 1 leaves the adaptive estimator without a guarantee, which is a
  // mode mismatch rather than a malformed input.
  CHECK_THROWS_AS(null_proportion_estimate(PiMode::adaptive, pc, 0, selected, nu, 1.0),
                  ModeMismatchError);
}

TEST_CASE("rejection set applies weighted thresholds with the lambda cap") {
  TestingConfig config;
  config.n = 2;
  config.u = 2;
  config.groups = {{0}, {1}};
  config.weights = {0.5, 0.5};
  config.lambdas = {0.5, 0.04};
  config.levels = Grid<int>(3, 2, 1);
  validate_config(config);

  Matrix pc(3, 2);
  pc(0, 0) = 0.02; pc(0, 1) = 0.03;
  pc(1, 0) = 0.10; pc(1, 1) = 0.01;
  pc(2, 0) = 0.02; pc(2, 1) = 0.05;  // above lambda_2 = 0.04
  Matrix nu(3, 2, 1.0);
  SelectionResult selection;
  selection.sets = {{0, 1, 2}, {0, 1, 2}};

  const std::vector<double> t{0.1, 0.1};
  const std::vector<int> r =
      rejection_set(t, pc, selection, nu, config.lambdas);
  CHECK(r == std::vector<int>{0, 1});

  // The boundary is inclusive: a local PC p-value exactly at nu * t passes.
  Matrix edge = pc;
  edge(2, 1) = 0.04;
  const std::vector<int> r2 = rejection_set(t, edge, selection, nu, config.lambdas);
  CHECK(r2 == std::vector<int>{0, 1, 2});

  // Weighting relaxes one feature's threshold without touching others.
  Matrix weighted = nu;
  weighted(1, 0) = 2.0;
  Matrix pc3 = pc;
  pc3(1, 0) = 0.15;  // above t but below nu * t = 0.2
  const std::vector<int> r3 = rejection_set(t, pc3, selection, weighted, config.lambdas);
  CHECK(r3 == std::vector<int>{0, 1});

  // Unselected features can never be rejected.
  SelectionResult partial;
  partial.sets = {{1, 2}, {0, 1, 2}};
  const std::vector<int> r4 = rejection_set(t, pc, partial, nu, config.lambdas);
  CHECK(r4 == std::vector<int>{1});
}

TEST_CASE("estimated FDP") {
  CHECK(estimated_fdp(0.01, 4, 10, 1.0) == doctest::Approx(0.025).epsilon(1e-14));
  CHECK(estimated_fdp(0.01, 0, 10, 1.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(estimated_fdp(0.0, 0, 10, 2.0) == 0.0);
}

TEST_CASE("threshold search on all-one p-values matches the closed form") {
  // Boundary case: with every local p-value at 1 and a full selection, no
  // feature is rejectable, so each threshold settles at its r = 1 budget
  // w_k * q / (|S_k| * pi_k) while the rejection set stays empty.
  const TestingConfig config = max_rep_config(2, 5, 1.0);
  const Matrix local_pc(5, 2, 1.0);
  SelectionResult selection;
  selection.sets = {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}};
  selection.rule = "full";
  selection.q = 0.1;
  const LocalWeights weights = unit_weights(selection, 5);
  const std::vector<double> pi{1.0, 1.0};
  const ThresholdResult result =
      compute_thresholds(local_pc, selection, weights.nu, pi, config, 0.1);
  for (int k = 0; k < 2; ++k) {
    CHECK(result.t[k] == doctest::Approx(0.5 * 0.1 / 5.0).epsilon(1e-14));
  }
  CHECK(rejection_set(result.t, local_pc, selection, weights.nu, config.lambdas)
            .empty());
}

TEST_CASE("an empty selection set empties the rejection set") {
  const TestingConfig config = max_rep_config(2, 3, 0.5);
  Matrix p(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    p(i, 0) = 1e-4;  // S_2 keeps everything
    p(i, 1) = 0.9;   // S_1 keeps nothing
  }
  ParFilterOptions options;
  options.weights = WeightMode::unit;
  const RejectionReport report = parfilter::parfilter(p, no_covariates(2, 3), config, 0.05, options);
  CHECK(report.selection.sets[0].empty());
  CHECK(report.rejected.empty());
  CHECK(report.sweeps == 0);
  CHECK(report.t_hat == std::vector<double>{0.0, 0.0});
  bool mentioned = false;
  for (const auto& w : report.warnings) {
    if (w.find("empty") != std::string::npos) mentioned = true;
  }
  CHECK(mentioned);
}

TEST_CASE("rejections satisfy the reported invariants") {
  const TestingConfig config = max_rep_config(2, 60, 0.5);
  const Matrix p = random_pvalues(60, 2, 5);
  ParFilterOptions options;
  options.weights = WeightMode::unit;
  const RejectionReport report = parfilter::parfilter(p, no_covariates(2, 60), config, 0.2, options);
  CHECK(!report.rejected.empty());

  for (int k = 0; k < config.group_count(); ++k) {
    // R is contained in every selection set.
    for (int i : report.rejected) {
      const auto& s = report.selection.sets[k];
      CHECK(std::binary_search(s.begin(), s.end(), i));
      CHECK(report.local_pc(i, k) <=
            std::min(report.weights.nu(i, k) * report.t_hat[k], config.lambdas[k]));
    }
    // Estimated FDP within the group budget.
    const double fdp = estimated_fdp(report.t_hat[k], report.rejected.size(),
                                     report.selection.sets[k].size(), report.pi_hat[k]);
    CHECK(fdp <= config.weights[k] * report.q + 1e-12);
    // Fixed point: t_hat is exactly the accepted rejection-count budget.
    const double budget = config.weights[k] * report.q /
                          (static_cast<double>(report.selection.sets[k].size()) *
                           report.pi_hat[k]);
    const double expected =
        static_cast<double>(std::max<std::size_t>(report.rejected.size(), 1)) * budget;
    CHECK(report.t_hat[k] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_NOTHROW(verify_report(report));
}

TEST_CASE("verification rejects tampered reports") {
  const TestingConfig config = max_rep_config(2, 40, 0.5);
  const Matrix p = random_pvalues(40, 2, 9);
  ParFilterOptions options;
  options.weights = WeightMode::unit;
  RejectionReport report = parfilter::parfilter(p, no_covariates(2, 40), config, 0.2, options);
  REQUIRE(!report.rejected.empty());

  SUBCASE("dropping a rejection") {
    report.rejected.pop_back();
    CHECK_THROWS_AS(verify_report(report), NumericError);
  }
  SUBCASE("inflating a threshold") {
    report.t_hat[0] *= 4.0;
    CHECK_THROWS_AS(verify_report(report), NumericError);
  }
  SUBCASE("corrupting the null-proportion estimate") {
    report.pi_hat[0] *= 0.25;
    CHECK_THROWS_AS(verify_report(report), NumericError);
  }
}

TEST_CASE("mode admission table") {
  const TestingConfig adaptive_cfg = max_rep_config(2, 30, 0.5);
  const TestingConfig strict_cfg = max_rep_config(2, 30, 1.0);
  const Matrix p = random_pvalues(30, 2, 3);
  const CovariateSet x = no_covariates(2, 30);

  ParFilterOptions options;

  SUBCASE("adaptive mode needs lambda below one") {
    options.weights = WeightMode::unit;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, strict_cfg, 0.1, options), ModeMismatchError);
    CHECK_NOTHROW(parfilter::parfilter(p, x, adaptive_cfg, 0.1, options));
  }
  SUBCASE("non-adaptive mode needs lambda equal to one") {
    options.mode = AnalysisMode::independence_nonadaptive;
    options.weights = WeightMode::unit;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, adaptive_cfg, 0.1, options), ModeMismatchError);
    CHECK_NOTHROW(parfilter::parfilter(p, x, strict_cfg, 0.1, options));
  }
  SUBCASE("dependence mode needs lambda equal to one") {
    options.mode = AnalysisMode::dependence;
    options.weights = WeightMode::unit;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, adaptive_cfg, 0.1, options), ModeMismatchError);
    const RejectionReport report = parfilter::parfilter(p, x, strict_cfg, 0.1, options);
    // Harmonic null-proportion estimate under dependence.
    for (int k = 0; k < 2; ++k) {
      CHECK(report.pi_hat[k] ==
            doctest::Approx(harmonic_number(report.selection.sets[k].size()))
                .epsilon(1e-12));
    }
  }
  SUBCASE("model-b weights are not admitted in independence modes") {
    options.weights = WeightMode::model_b;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, adaptive_cfg, 0.1, options), ModeMismatchError);
    options.allow_unproven = true;
    const RejectionReport report = parfilter::parfilter(p, x, adaptive_cfg, 0.1, options);
    bool warned = false;
    for (const auto& w : report.warnings) {
      if (w.find("guarantee") != std::string::npos) warned = true;
    }
    CHECK(warned);
  }
  SUBCASE("model-a weights are not admitted in dependence mode") {
    options.mode = AnalysisMode::dependence;
    options.weights = WeightMode::model_a;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, strict_cfg, 0.1, options), ModeMismatchError);
    options.allow_unproven = true;
    CHECK_NOTHROW(parfilter::parfilter(p, x, strict_cfg, 0.1, options));
  }
  SUBCASE("the FDR target must be a proper fraction") {
    options.weights = WeightMode::unit;
    CHECK_THROWS_AS(parfilter::parfilter(p, x, adaptive_cfg, 0.0, options), ValidationError);
    CHECK_THROWS_AS(parfilter::parfilter(p, x, adaptive_cfg, 1.0, options), ValidationError);
  }
}

TEST_CASE("inflated selection shrinks the selection sets") {
  const TestingConfig config = max_rep_config(2, 50, 1.0);
  const Matrix p = random_pvalues(50, 2, 21);
  ParFilterOptions options;
  options.mode = AnalysisMode::dependence;
  options.weights = WeightMode::unit;
  const RejectionReport plain = parfilter::parfilter(p, no_covariates(2, 50), config, 0.2, options);
  options.inflated_selection = true;
  const RejectionReport inflated = parfilter::parfilter(p, no_covariates(2, 50), config, 0.2, options);
  for (int k = 0; k < 2; ++k) {
    for (int i : inflated.selection.sets[k]) {
      const auto& s = plain.selection.sets[k];
      CHECK(std::binary_search(s.begin(), s.end(), i));
    }
  }
}

TEST_CASE("fixed selections nest across FDR targets") {
  RandomStream rng(33, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 20;
    const TestingConfig config = max_rep_config(2, m, 1.0);
    const Matrix p = random_pvalues(m, 2, 100 + trial);

    SelectionResult fixed;
    fixed.sets.resize(2);
    for (std::size_t i = 0; i < m; ++i) {
      if (rng.uniform() < 0.8) fixed.sets[0].push_back(static_cast<int>(i));
      if (rng.uniform() < 0.8) fixed.sets[1].push_back(static_cast<int>(i));
    }
    fixed.rule = "fixed";
    fixed.condition_compliant = true;

    ParFilterOptions options;
    options.mode = AnalysisMode::independence_nonadaptive;
    options.weights = WeightMode::unit;
    const RejectionReport narrow =
        parfilter_with_selection(p, no_covariates(2, m), config, 0.05, options, fixed);
    const RejectionReport wide =
        parfilter_with_selection(p, no_covariates(2, m), config, 0.2, options, fixed);
    for (int i : narrow.rejected) {
      CHECK(std::binary_search(wide.rejected.begin(), wide.rejected.end(), i));
    }
  }
}

TEST_CASE("non-compliant selections need the unproven escape hatch") {
  const TestingConfig config = max_rep_config(2, 10, 1.0);
  const Matrix p = random_pvalues(10, 2, 77);
  SelectionResult cherry;
  cherry.sets = {{0, 1, 2}, {0, 1, 2}};
  cherry.rule = "cherry-picked";
  cherry.condition_compliant = false;

  ParFilterOptions options;
  options.mode = AnalysisMode::independence_nonadaptive;
  options.weights = WeightMode::unit;
  CHECK_THROWS_AS(
      parfilter_with_selection(p, no_covariates(2, 10), config, 0.1, options, cherry),
      ModeMismatchError);
  options.allow_unproven = true;
  CHECK_NOTHROW(
      parfilter_with_selection(p, no_covariates(2, 10), config, 0.1, options, cherry));
}

TEST_CASE("post hoc per-study rejections") {
  // Force R = {0, 1} through a fixed selection, then report study 1 at its
  // own level: tau = 0.01 is the largest candidate with 2 tau / |R(tau)| <= q_j.
  const TestingConfig config = max_rep_config(2, 2, 1.0);
  Matrix p(2, 2);
  p(0, 0) = 0.01;  p(0, 1) = 0.001;
  p(1, 0) = 0.2;   p(1, 1) = 0.001;
  SelectionResult fixed;
  fixed.sets = {{0, 1}, {0, 1}};
  fixed.rule = "fixed";
  ParFilterOptions options;
  options.mode = AnalysisMode::independence_nonadaptive;
  options.weights = WeightMode::unit;
  const RejectionReport report =
      parfilter_with_selection(p, no_covariates(2, 2), config, 0.9, options, fixed);
  REQUIRE(report.rejected == std::vector<int>{0, 1});

  CHECK(posthoc_rejections(report, p, 0, 0.05) == std::vector<int>{0});
  CHECK(posthoc_rejections(report, p, 0, 0.2) == std::vector<int>{0, 1});
  CHECK(posthoc_rejections(report, p, 0, 1e-9).empty());
  CHECK_THROWS_AS(posthoc_rejections(report, p, 5, 0.05), ValidationError);
  CHECK_THROWS_AS(posthoc_rejections(report, p, 0, 0.0), ValidationError);
}

TEST_CASE("identical inputs give identical reports") {
  const TestingConfig config = max_rep_config(3, 50, 0.5);
  const Matrix p = random_pvalues(50, 3, 55);
  CovariateSet x(3, Matrix(50, 1));
  RandomStream rng(56, 0, 0);
  for (std::size_t i = 0; i < 50; ++i) {
    const double v = rng.normal();
    for (int j = 0; j < 3; ++j) x[j](i, 0) = v;
  }
  ParFilterOptions options;  // model-a, adaptive
  const RejectionReport a = parfilter::parfilter(p, x, config, 0.1, options);
  const RejectionReport b = parfilter::parfilter(p, x, config, 0.1, options);
  CHECK(a.rejected == b.rejected);
  CHECK(a.t_hat == b.t_hat);
  CHECK(a.pi_hat == b.pi_hat);
  CHECK(a.weights.nu == b.weights.nu);
}
