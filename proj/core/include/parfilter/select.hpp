#pragma once

#include <string>
#include <vector>

#include "parfilter/config.hpp"
#include "parfilter/matrix.hpp"

namespace parfilter {

// Features retained per group before local testing. Each S_k is computed
// from local partial-conjunction p-values of the OTHER groups only, so that
// conditioning on the selection leaves group k's p-values untouched
// (cross-group dependence only), and membership of a feature is stable under
// perturbations that keep it selected.
struct SelectionResult {
  std::vector<std::vector<int>> sets;  // K sorted feature-index lists
  std::string rule;
  bool condition_compliant = true;  // admissible in modes with an FDR guarantee
  double q = 0.0;                   // target level the thresholds were built from
};

// S_k = features whose local PC p-value in every other group l is at most
// min(w_l * q, lambda_l). With a single group, S_1 is all features.
SelectionResult threshold_selection(const Matrix& local_pc, const TestingConfig& config,
                                    double q);

// Same rule with each w_l * q divided by the harmonic number H_m, matching
// the more conservative selection used alongside harmonic null-proportion
// estimates under dependence.
SelectionResult inflated_threshold_selection(const Matrix& local_pc,
                                             const TestingConfig& config, double q);

// H_m = sum_{i=1}^m 1/i (H_0 = 0).
double harmonic_number(std::size_t m);

}  // namespace parfilter
