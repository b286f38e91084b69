#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parfilter/combine.hpp"
#include "parfilter/config.hpp"
#include "parfilter/matrix.hpp"

namespace parfilter {

enum class DependenceKind { independent, ar1 };

// How base hypotheses and p-values are drawn:
//  - logistic_mixture: null status is Bernoulli(logistic(gamma0(n) + gamma1*x))
//    per study with a shared standard-normal covariate; null p-values are
//    uniform, alternatives Beta(1-xi, 7).
//  - all_signal: every base hypothesis is a signal and every p-value is
//    Beta(1-xi, 7); covariates are constant zero.
enum class ScenarioFamily { logistic_mixture, all_signal };

struct SimScenario {
  std::size_t m = 0;
  int n = 0;
  int u = 0;
  double gamma1 = 0.0;
  double xi = 0.78;  // alternative p ~ Beta(1-xi, 7)
  DependenceKind dependence = DependenceKind::independent;
  double ar1_rho = -0.8;
  std::uint64_t seed = 0;
  std::string name;
  ScenarioFamily family = ScenarioFamily::logistic_mixture;
};

// Intercept solving (1 - logistic(gamma0))^n = 0.01/n, so that with
// gamma1 = 0 about a 0.01/n fraction of features are signals in all n studies.
double gamma0(int n);

struct SimulatedDataset {
  Matrix p;            // m x n base p-values
  Matrix x;            // m x 1 shared covariate column
  GroundTruth truth;   // 1 = base null true
  SimScenario scenario;
  int replicate = 0;

  // The same covariate column replicated once per study.
  CovariateSet covariates() const;
};

// Deterministic draw for one replicate; distinct replicates use disjoint
// counter blocks of the same keyed generator and may run in parallel.
SimulatedDataset generate(const SimScenario& scenario, int replicate);

// All-signal benchmark dataset: m features, n studies, p ~ Beta(0.26, 7) iid.
SimulatedDataset generate_figure1(std::size_t m, int n, int replicate,
                                  std::uint64_t seed = 0);

// Posterior probability that each feature's partial-conjunction null holds,
// computed from the true generative parameters (independent mode only).
std::vector<double> oracle_psi(const SimulatedDataset& dataset);

struct ErrorRates {
  double fdp = 0.0;
  double tpp = 0.0;
};

// False discovery and true positive proportions of one rejection set against
// the ground truth at replicability level u: a feature's PC null is true when
// at least n-u+1 base nulls are true.
ErrorRates fdp_tpp(std::span<const int> rejections, const GroundTruth& truth, int u);

struct ExperimentSpec {
  SimScenario scenario;
  std::vector<std::string> methods;
  int reps = 1;
  double q = 0.05;
  Combiner combiner = Combiner::stouffer;
  int threads = 0;  // 0 = hardware concurrency
};

struct MetricsRow {
  std::string scenario;
  int u = 0;
  std::size_t m = 0;
  std::string method;
  double fdr = 0.0;
  double tpr = 0.0;
  double fdr_se = 0.0;  // NaN when reps == 1
  double tpr_se = 0.0;
  int reps = 0;
};

// Names accepted in ExperimentSpec::methods.
const std::vector<std::string>& known_methods();

// Builds the testing configuration for a parfilter-family method; the tuning
// value is 0.5 for the adaptive variants and 1 otherwise, so both versions
// of the configuration must describe the same grouping and levels.
using ConfigProvider = std::function<TestingConfig(double lambda)>;

// Rejections of one named method on a concrete dataset. Handles every known
// method except "oracle", which needs the generative ground truth and lives
// with the experiment runner.
std::vector<int> method_rejections(const std::string& method, const Matrix& p,
                                   const CovariateSet& x, int u, Combiner combiner, double q,
                                   const ConfigProvider& config_for);

// Runs every method on every replicate and averages the per-replicate error
// rates. Deterministic given the scenario seed regardless of thread count.
std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec);

// Long-format TSV (scenario, u, m, method, fdr, tpr, fdr_se, tpr_se, reps).
std::string metrics_tsv(const std::vector<MetricsRow>& rows);
void write_metrics_tsv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace parfilter
