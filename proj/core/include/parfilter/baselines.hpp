#pragma once

#include <span>
#include <vector>

#include "parfilter/matrix.hpp"

namespace parfilter {

// Competitor procedures, all operating on a vector of (partial-conjunction)
// p-values for the m features and returning sorted feature indices.

// Benjamini-Hochberg step-up: reject the i* smallest p-values where
// i* = max{i : p_(i) <= i*q/m}.
std::vector<int> bh(std::span<const double> p, double q);

// Benjamini-Yekutieli: BH at level q / H_m, valid under arbitrary dependence.
std::vector<int> by(std::span<const double> p, double q);

// Storey-type adaptive BH: the plug-in estimator
// (1 + #{p_i > lambda}) / ((1-lambda) m) divides into the BH thresholds.
std::vector<int> adaptive_bh_storey(std::span<const double> p, double q, double lambda = 0.5);

// Two-stage filter: keep features with p <= tau, then BH on p/tau within the
// survivors. tau = 1 is plain BH; the default tau = q is a convention of this
// implementation, not a prescribed constant.
std::vector<int> cofilter_bh(std::span<const double> p, double q, double tau);

// As cofilter_bh with the Storey-adaptive step-up as the second stage.
std::vector<int> adaptive_cofilter_bh(std::span<const double> p, double q, double tau,
                                      double lambda = 0.5);

// Two-study adaptive replicability procedure with equal budget split: select
// each study by the other's p-values at q/2, estimate null proportions on
// the selections, then take the largest r whose counting fixed point
// |{i in S1 ∩ S2 : p_ij <= min(r*q/(2*|S_j|*pi_j), lambda_j), j = 1,2}| = r
// holds exactly; empty if no such r exists.
std::vector<int> bogomolov_heller_adaptive(const Matrix& p, double q, double lambda1,
                                           double lambda2);

// Rejects the largest prefix of features, ordered by posterior null
// probability, whose running mean stays at or below q.
std::vector<int> oracle_rejections(std::span<const double> psi, double q);

}  // namespace parfilter
