#pragma once

#include <span>
#include <string>
#include <vector>

#include "parfilter/combine.hpp"
#include "parfilter/config.hpp"
#include "parfilter/matrix.hpp"
#include "parfilter/select.hpp"
#include "parfilter/weights.hpp"

namespace parfilter {

// Null-proportion estimator per group.
enum class PiMode { one, adaptive, harmonic };

// How the local weights nu are trained.
enum class WeightMode { model_a, model_b, unit };

// Analysis modes with their finite-sample FDR guarantees:
//  - independence_adaptive:    independent p-values; Storey-type estimator
//                              with lambda in (0,1); weights model-a or unit.
//  - independence_nonadaptive: independent p-values; pi = 1, lambda = 1.
//  - dependence:               arbitrary dependence across features within
//                              each study; harmonic estimator, lambda = 1,
//                              weights model-b or unit (neither reads the
//                              group's own p-values).
enum class AnalysisMode { independence_adaptive, independence_nonadaptive, dependence };

WeightMode weight_mode_from_name(const std::string& name);
std::string weight_mode_name(WeightMode mode);
AnalysisMode analysis_mode_from_name(const std::string& name);
std::string analysis_mode_name(AnalysisMode mode);

struct ParFilterOptions {
  AnalysisMode mode = AnalysisMode::independence_adaptive;
  WeightMode weights = WeightMode::model_a;
  Combiner combiner = Combiner::stouffer;
  bool inflated_selection = false;  // divide selection cutoffs by H_m
  // Escape hatch: run combinations whose FDR control is not covered by any
  // finite-sample result (e.g. dependence mode with model-a weights). The
  // report carries a warning when this is exercised.
  bool allow_unproven = false;
};

struct RejectionReport {
  std::vector<int> rejected;    // sorted feature indices of R(t_hat)
  std::vector<double> t_hat;    // per-group thresholds
  SelectionResult selection;
  LocalWeights weights;
  std::vector<double> pi_hat;   // per-group null-proportion estimates
  Matrix local_pc;              // m x K local PC p-values
  TestingConfig config;
  ParFilterOptions options;
  double q = 0.0;
  int sweeps = 0;               // outer iterations of the threshold search
  std::vector<std::string> warnings;
};

// Entry (i, k): partial-conjunction p-value of feature i within group k at
// level u_ik, from that group's base p-values only.
Matrix local_pc_pvalues(const Matrix& p, const TestingConfig& config, Combiner combiner);

// Null-proportion estimate for one group. "one" is constantly 1; "adaptive"
// is the weighted Storey-type estimate
//   (max_{i in S} nu_i + sum_{i in S} nu_i 1{p_i > lambda}) / ((1-lambda) |S|),
// requiring lambda in (0,1); "harmonic" is H_{|S| v 1} and pairs with
// dependence-safe weights. An empty selection yields 0 (adaptive) or H_1 = 1
// (harmonic) and is flagged through the optional warning sink.
double null_proportion_estimate(PiMode mode, const Matrix& local_pc, int k,
                                const std::vector<int>& selected, const Matrix& nu,
                                double lambda, std::vector<std::string>* warnings = nullptr);

// R(t) = features selected in every group whose local PC p-value is at most
// min(nu_ik * t_k, lambda_k) in every group.
std::vector<int> rejection_set(std::span<const double> t, const Matrix& local_pc,
                               const SelectionResult& selection, const Matrix& nu,
                               std::span<const double> lambdas);

// Estimated false discovery proportion charged to group k:
// |S_k| * pi_k * t_k / (rejection_count v 1).
double estimated_fdp(double t_k, std::size_t rejection_count, std::size_t selection_size,
                     double pi_k);

struct ThresholdResult {
  std::vector<double> t;
  int sweeps = 0;
};

// Largest threshold vector (element-wise) with estimated FDP at most w_k * q
// in every group. Coordinate descent from above: each inner maximization is
// exact because the optimum has the form r * w_k * q / (|S_k| * pi_k) for an
// achievable rejection count r, scanned downward.
ThresholdResult compute_thresholds(const Matrix& local_pc, const SelectionResult& selection,
                                   const Matrix& nu, std::span<const double> pi,
                                   const TestingConfig& config, double q);

// The full procedure: local PC p-values, selection, weight training,
// null-proportion estimates, optimal thresholds, rejection set. Inputs are
// validated against the mode's guarantee requirements first; violations
// raise ModeMismatchError naming the broken precondition. Every report is
// re-verified against the feasibility, self-consistency and fixed-point
// identities before it is returned.
RejectionReport parfilter(const Matrix& p, const CovariateSet& x, const TestingConfig& config,
                          double q, const ParFilterOptions& options);

// As above with a caller-supplied selection; non-compliant selection rules
// are only admitted together with allow_unproven.
RejectionReport parfilter_with_selection(const Matrix& p, const CovariateSet& x,
                                         const TestingConfig& config, double q,
                                         const ParFilterOptions& options,
                                         const SelectionResult& selection);

// Features of one study that can be reported at per-study FDR q_j among the
// already-rejected features: the largest threshold tau among that study's
// selected p-values with |S_k| * tau / |{i rejected : p_ij <= tau}| <= q_j.
// Meaningful target levels satisfy q_j <= w_k * q for singleton groups.
std::vector<int> posthoc_rejections(const RejectionReport& report, const Matrix& p,
                                    int study, double q_j);

// Re-checks the identities that every valid report must satisfy. Throws
// NumericError on any violation; called by parfilter on every run.
void verify_report(const RejectionReport& report);

}  // namespace parfilter
