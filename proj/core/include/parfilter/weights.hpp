#pragma once

#include <span>
#include <string>
#include <vector>

#include "parfilter/config.hpp"
#include "parfilter/matrix.hpp"
#include "parfilter/select.hpp"

namespace parfilter {

// Two-group mixture for a study's p-values given covariates x:
//   f(p | x) = pi(x) + (1 - pi(x)) * (1 - k(x)) * p^{-k(x)},
// where pi(x) = sigmoid(zeta . (1, x)) is the null probability and
// k(x) = sigmoid(beta . (1, x)) in (0,1) skews the signal density toward
// small p. The model is a training device for weights, never assumed true.
struct WorkingModelParams {
  std::vector<double> zeta;  // length 1 + d
  std::vector<double> beta;  // length 1 + d
};

struct FitReport {
  WorkingModelParams params;
  bool converged = false;
  bool intercept_only = false;  // fallback engaged after the restart budget
  bool at_bound = false;        // some coordinate ended at the parameter box
  double grad_norm = 0.0;       // sup-norm of the mean log-likelihood gradient
  double log_likelihood = 0.0;
  int iterations = 0;
  int study = -1;  // diagnostic tag set by the weight constructors
  int group = -1;
};

// Density of the mixture at p; p = 0 is clipped to 1e-300 before the
// log-density. Throws on p outside [0, 1] or covariate/parameter mismatch.
double mixture_density(const WorkingModelParams& params, double p, std::span<const double> x);

// E[p | x] under the mixture: (2 (1 - k) + k pi) / (4 - 2 k).
double expected_p(const WorkingModelParams& params, std::span<const double> x);

// Posterior probability that the observation is a signal:
// (1 - pi) (1 - k) p^{-k} / f(p | x).
double signal_posterior(const WorkingModelParams& params, double p, std::span<const double> x);

// Log-likelihood (sum over rows of log f) with optional analytic gradient
// with respect to the concatenated vector (zeta, beta).
double log_likelihood(const WorkingModelParams& params, std::span<const double> p,
                      const Matrix& x, std::vector<double>* grad = nullptr);

// Maximum-likelihood fit: quasi-Newton ascent inside the box [-20, 20] per
// coordinate, from an intercept-only warm start plus three seeded random
// restarts. Falls back to the intercept-only fit (slopes zero) when no start
// converges. Requires at least max(10, 2 (1 + d)) observations.
FitReport fit_working_model(std::span<const double> p, const Matrix& x);

// P(at least v of the independent events occur) for event probabilities
// given in marginals — the exact Poisson-binomial tail. v <= 0 gives 1 by
// convention; at most kEnumerationLimit events.
double prob_at_least(std::span<const double> marginals, int v);

// Posterior probability that at least v of the listed studies carry signals,
// from per-study parameters, (plug-in) p-values and covariate rows.
double replication_posterior(const std::vector<WorkingModelParams>& params,
                             const std::vector<double>& pvalues,
                             const std::vector<std::vector<double>>& xrows, int v);

// Scales raw weights over one selection set to sum to the set size. A zero
// total falls back to unit weights (reported through fell_back).
std::vector<double> normalized_weights(std::span<const double> raw, bool* fell_back = nullptr);

// Per-group weight vectors over the selected features; nu is zero off S_k
// and sums to |S_k| within each group.
struct LocalWeights {
  Matrix nu;  // m x K
  std::string mode;
  std::vector<std::string> warnings;
  std::vector<FitReport> fits;  // diagnostics for every model fit performed
};

// nu = 1 on every selection set.
LocalWeights unit_weights(const SelectionResult& selection, std::size_t m);

// Selected-out training: for each group k and study j in it, fit the working
// model on the features NOT in S_k, inflate the fitted zeta by 1.5, plug the
// model's own E[p | x] in for the p-value, and score each selected feature by
// the posterior probability that at least u_ik studies of the group carry
// signals. The result depends on group-k p-values only through non-selected
// rows, preserving the FDR guarantee of the independence modes.
LocalWeights model_a_weights(const Matrix& p, const CovariateSet& x,
                             const SelectionResult& selection, const TestingConfig& config);

// Complement-group training: fit each study on all features, and score each
// selected feature by the posterior probability that at least u - u_ik of
// the OTHER groups' studies carry signals. The result never reads group-k
// p-values at all, which is what the dependence mode requires.
LocalWeights model_b_weights(const Matrix& p, const CovariateSet& x,
                             const SelectionResult& selection, const TestingConfig& config);

}  // namespace parfilter
